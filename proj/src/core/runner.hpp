#ifndef WDDP_CORE_RUNNER_HPP
#define WDDP_CORE_RUNNER_HPP

#include <string>

#include <json.hpp>

#include "config.hpp"
#include "dataset.hpp"

namespace wddp {

// A dataset resolved from a run configuration: the full table plus the
// deterministic train/test split.
struct LoadedData {
  LabeledDataset full;
  LabeledDataset train;
  LabeledDataset test;
  nlohmann::json provenance;
};

LoadedData load_dataset(const RunConfig& config);

// Command drivers shared by the C API and the CLI. Each takes the parsed
// configuration document, performs the work, writes any artifacts, and
// returns a JSON summary. Failures raise the error types in errors.hpp.

// Prints nothing; returns {epsilon, delta, G, T, n, sigma, implied_c,
// lambda_star, delta_achieved}.
nlohmann::json cmd_calibrate(const nlohmann::json& config);

// Trains one configuration; writes model.json, metrics.csv, provenance.json
// (and trace.csv when enabled) under out_dir. out_dir overrides the config's
// output_dir when non-empty.
nlohmann::json cmd_train(const nlohmann::json& config, const std::string& out_dir = "");

// Runs the sweep and writes results.csv / results.json / results.svg per the
// configured formats. Throws Error after writing artifacts if every cell
// failed. real_csv_timing puts measured per-cell times into the CSV, trading
// away byte-identical reruns.
nlohmann::json cmd_sweep(const nlohmann::json& config, const std::string& out_dir = "",
                         int jobs = 1, bool real_csv_timing = false);

// Runs the certificate suite for the configured loss family; returns
// {checks: [{name, pass, detail}], all_pass}.
nlohmann::json cmd_verify(const nlohmann::json& config);

}  // namespace wddp

#endif  // WDDP_CORE_RUNNER_HPP
