#ifndef WDDP_CORE_HARNESS_HPP
#define WDDP_CORE_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "federation.hpp"
#include "loss.hpp"
#include "partition.hpp"
#include "privacy.hpp"

namespace wddp {

enum class Method { weighted, uniform, centralized_dp, centralized_nonprivate };
const char* to_string(Method method);
Method method_from_string(const std::string& name);

enum class SweepVariable { epsilon, non_average_u };
const char* to_string(SweepVariable variable);

struct LossSpec {
  enum class Kind { logistic, regularized_logistic, sine_pl } kind = Kind::logistic;
  double reg_lambda = 0.1;
  double radius = 10.0;

  std::unique_ptr<LossModel> make() const;
  std::string name() const;
};

struct PartitionSpec {
  enum class Kind { two_group, random_sizes, single } kind = Kind::two_group;
  double non_average_u = 1.0;
  int group_a_count = 0;  // 0 means clients/2
  std::int64_t min_client_size = 10;

  Partition build(std::int64_t train_size, int clients, double u, Rng& rng) const;
};

struct SweepSpec {
  SweepVariable variable = SweepVariable::epsilon;
  std::vector<double> values;  // sorted ascending
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;

  double epsilon = 0.1;   // fixed budget when sweeping u
  double delta = 0.001;
  std::int64_t rounds = 1000;
  int clients = 16;
  PartitionSpec partition;
  Protocol protocol = Protocol::sync_every_round;
  LossSpec loss;
  bool random_init = false;

  std::optional<double> fixed_eta;  // absent: cross-validated from eta_grid
  std::vector<double> eta_grid = {0.01, 0.05, 0.1, 0.5, 1.0};
  int cv_folds = 3;
  std::int64_t reference_rounds = 0;  // 0 means 10x rounds

  std::uint64_t master_seed = 0;

  void validate() const;
};

struct SweepResult {
  std::string method;
  std::string protocol;
  std::string sweep_var;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  double eta = 0.0;
  double sigma = 0.0;
  double accuracy = 0.0;
  double optimal_gap = 0.0;
  std::int64_t runtime_ms = 0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

// Fraction of test points whose thresholded score h(x.theta) >= 0.5 matches
// the label; exact ties classify positive.
double accuracy(std::span<const double> theta, const LabeledDataset& test);

// L_D(theta) - L_D(theta_star) on the pooled training set. Warns on stderr
// when the gap is below -1e-6 (reference model not converged).
double optimal_gap(std::span<const double> theta, std::span<const double> theta_star,
                   const LabeledDataset& train, const LossModel& loss);

struct BoundReport {
  double rate_constant = 0.0;  // strong convexity lambda, or the PL constant
  bool used_pl = false;
  double decay_term = 0.0;        // (1 - rate/L)^T * initial_gap
  double noise_term_tight = 0.0;  // geometric sum, capped by p sigma^2 / (2 rate)
  double noise_term_loose = 0.0;  // T p sigma^2 / (2 L)
  double bound_tight = 0.0;
  double bound_loose = 0.0;
  double ratio = 1.0;  // loose / tight
};

// Excess-risk bounds for a run: the tight geometric form and the loose
// linear-in-T form, from the certified rate constant (strong convexity
// preferred, else the PL constant).
BoundReport theoretical_bound_report(const LossMetadata& meta, const MechanismParams& mech,
                                     int dimension, std::int64_t rounds, double initial_gap);

// Runs every (method, value, seed) cell. Cells execute in parallel up to
// `jobs`; `on_row` is invoked in canonical order (methods x values x seeds)
// as results become available. A cell failure is recorded in its status and
// does not abort the sweep.
std::vector<SweepResult> run_sweep(const SweepSpec& spec, const LabeledDataset& train,
                                   const LabeledDataset& test, int jobs = 1,
                                   const std::function<void(const SweepResult&)>& on_row = {});

// Seed for the cell at (value_idx, seed): shared across methods so method
// comparisons are paired on noise, partition, and initialization.
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t value_idx, std::uint64_t seed);

// Noise calibration for one cell, or nullopt for the non-private method.
// Weighted aggregation averages per-example gradients uniformly, so its
// per-round query has sensitivity 2G/n and calibrates against the pooled
// sample count. Uniform aggregation over-weights small shards: replacing one
// record moves the query by up to 2G/(m n_min), so the same budget needs
// noise calibrated against m * n_min. The two coincide on equal shards.
std::optional<CalibrationResult> cell_calibration(const SweepSpec& spec, Method method,
                                                  std::int64_t train_rows, std::size_t value_idx,
                                                  std::uint64_t seed);

// The partition a distributed cell trains on, derived from the cell seed.
Partition build_cell_partition(const SweepSpec& spec, std::int64_t train_rows,
                               std::size_t value_idx, std::uint64_t seed);

// Trains the model for one sweep cell; cmd_train runs exactly this, so a
// one-cell sweep and a single training run coincide.
TrainResult train_cell(const SweepSpec& spec, const LabeledDataset& train, const LossModel& loss,
                       Method method, std::size_t value_idx, std::uint64_t seed, double eta,
                       double sigma, bool want_trace = false);

// Reference non-private optimum used for optimal-gap metrics.
NonprivateResult reference_optimum(const SweepSpec& spec, const LabeledDataset& train);

// Cross-validated learning rate for one method at the spec's median sweep
// value (the rate is frozen across the sweep variable).
double select_eta(const SweepSpec& spec, const LabeledDataset& train, Method method);

}  // namespace wddp

#endif  // WDDP_CORE_HARNESS_HPP
