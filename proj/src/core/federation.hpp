#ifndef WDDP_CORE_FEDERATION_HPP
#define WDDP_CORE_FEDERATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "loss.hpp"
#include "partition.hpp"
#include "privacy.hpp"
#include "rng.hpp"

namespace wddp {

enum class Aggregation { weighted, uniform };

// sync_every_round: every round each client takes one noisy step from the
// shared iterate and the server aggregates, so the per-round query is the
// weighted average of the clients' noisy gradients at a common point.
// local_then_aggregate: clients run all rounds independently from the common
// initialization and the server aggregates once at the end.
enum class Protocol { sync_every_round, local_then_aggregate };

const char* to_string(Aggregation aggregation);
const char* to_string(Protocol protocol);

struct TrainingConfig {
  std::int64_t rounds = 1000;
  double learning_rate = 0.1;
  Aggregation aggregation = Aggregation::weighted;
  Protocol protocol = Protocol::sync_every_round;
  std::optional<double> projection_radius;
  bool random_init = false;  // seeded uniform in [-0.01, 0.01]^p instead of zeros
  std::optional<std::vector<double>> initial_theta;  // explicit start, wins over both
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceRow {
  std::int64_t round = 0;
  std::string node;  // "server" or "client<j>"
  double pooled_loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  std::vector<double> theta;
  // Variance of the aggregated per-round noise actually injected:
  // sigma^2 * sum_j w_j^2 (at most sigma^2).
  double aggregate_noise_variance = 0.0;
  std::vector<TraceRow> trace;
};

// Convex combination of client models: weights n_j / n, or 1/m when uniform.
std::vector<double> aggregate(const std::vector<std::vector<double>>& models,
                              std::span<const std::int64_t> sizes, Aggregation mode);

// One noisy gradient step on a shard: theta - eta * (grad + z), optionally
// projected onto the ball of the given radius.
std::vector<double> client_noisy_step(std::span<const double> theta, const LossModel& loss,
                                      const LabeledDataset& data,
                                      std::span<const std::int32_t> shard, double eta,
                                      double sigma, std::optional<double> projection_radius,
                                      Rng& noise_rng);

// Runs the m-client protocol over the partitioned training data. sigma must
// be calibrated against the pooled sample count; sigma == 0 disables noise.
TrainResult train_distributed(const LabeledDataset& train, const Partition& partition,
                              const LossModel& loss, const TrainingConfig& config, double sigma,
                              bool want_trace = false);

// Single-party noisy gradient descent; identical to train_distributed with a
// one-client partition.
TrainResult train_centralized_dp(const LabeledDataset& train, const LossModel& loss,
                                 const TrainingConfig& config, double sigma,
                                 bool want_trace = false);

struct NonprivateResult {
  std::vector<double> theta;
  double final_grad_norm = 0.0;
  bool converged = false;  // final gradient norm <= 1e-6
};

// Plain full-batch gradient descent, the reference optimum producer.
NonprivateResult train_centralized_nonprivate(const LabeledDataset& train, const LossModel& loss,
                                              std::int64_t rounds, double eta,
                                              std::optional<double> projection_radius = {});

}  // namespace wddp

#endif  // WDDP_CORE_FEDERATION_HPP
