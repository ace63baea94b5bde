#ifndef WDDP_CORE_CONFIG_HPP
#define WDDP_CORE_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "harness.hpp"
#include "privacy.hpp"

namespace wddp {

// Parsed run configuration. The original JSON is kept for echoing into every
// output artifact.
struct RunConfig {
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";

  std::optional<CsvSpec> csv;
  std::optional<SyntheticSpec> synthetic;
  std::optional<PrivacyBudget> privacy;

  struct CalibrateBlock {
    std::optional<double> lipschitz_g;
    std::optional<std::int64_t> rounds;
    std::optional<std::int64_t> samples;
    std::optional<int> lambda_max;
    std::optional<double> tolerance;
  };
  std::optional<CalibrateBlock> calibrate;

  struct TrainBlock {
    std::int64_t rounds = 1000;
    std::optional<double> eta;  // absent: cross-validated
    std::vector<double> eta_grid = {0.01, 0.05, 0.1, 0.5, 1.0};
    int cv_folds = 3;
    int clients = 1;
    PartitionSpec partition;
    Aggregation aggregation = Aggregation::weighted;
    Protocol protocol = Protocol::sync_every_round;
    LossSpec loss;
    bool random_init = false;
    bool trace = false;
    std::optional<std::uint64_t> seed;  // run seed; defaults to the master seed
  };
  std::optional<TrainBlock> train;

  std::optional<SweepSpec> sweep;
  std::vector<std::string> sweep_formats = {"csv", "json", "svg"};

  struct VerifyBlock {
    LossSpec loss;
    int samples = 10000;
    int theta_samples = 20;
  };
  std::optional<VerifyBlock> verify;

  nlohmann::json echo;

  bool has_dataset() const { return csv.has_value() || synthetic.has_value(); }
};

// Parses and validates a configuration document. Unknown keys and malformed
// values raise ValidationError naming the offending path.
RunConfig parse_run_config(const nlohmann::json& document);

// Parses the JSON text first; raises ParseError on malformed JSON.
RunConfig parse_run_config_text(const std::string& text);

}  // namespace wddp

#endif  // WDDP_CORE_CONFIG_HPP
