#include "federation.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace wddp {

namespace {

constexpr std::uint64_t kClientStreamBase = 0x636c69656e740000ULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

void project_onto_ball(std::span<double> theta, double radius) {
  double norm_sq = 0.0;
  for (const double t : theta) norm_sq += t * t;
  const double norm = std::sqrt(norm_sq);
  if (norm > radius) {
    const double scale = radius / norm;
    for (double& t : theta) t *= scale;
  }
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (const double x : v) sum += x * x;
  return std::sqrt(sum);
}

std::vector<double> initial_theta(int dim, const TrainingConfig& config, Rng& root) {
  if (config.initial_theta) {
    if (static_cast<int>(config.initial_theta->size()) != dim) {
      throw ValidationError("training: initial_theta dimension mismatch");
    }
    return *config.initial_theta;
  }
  std::vector<double> theta(static_cast<std::size_t>(dim), 0.0);
  if (config.random_init) {
    Rng init_rng = root.split(kInitStream);
    for (double& t : theta) t = init_rng.uniform(-0.01, 0.01);
  }
  return theta;
}

}  // namespace

const char* to_string(Aggregation aggregation) {
  return aggregation == Aggregation::weighted ? "weighted" : "uniform";
}

const char* to_string(Protocol protocol) {
  return protocol == Protocol::sync_every_round ? "sync_every_round" : "local_then_aggregate";
}

void TrainingConfig::validate() const {
  if (rounds < 1) throw ValidationError("training: rounds must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("training: learning_rate must be positive");
  if (projection_radius && !(*projection_radius > 0.0)) {
    throw ValidationError("training: projection_radius must be positive when set");
  }
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& models,
                              std::span<const std::int64_t> sizes, Aggregation mode) {
  if (models.empty() || models.size() != sizes.size()) {
    throw ValidationError("aggregate: need one size per model");
  }
  const std::size_t dim = models[0].size();
  std::int64_t total = 0;
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (models[j].size() != dim) throw ValidationError("aggregate: model dimension mismatch");
    if (sizes[j] <= 0) throw ValidationError("aggregate: sizes must be positive");
    total += sizes[j];
  }
  std::vector<double> combined(dim, 0.0);
  for (std::size_t j = 0; j < models.size(); ++j) {
    const double weight = mode == Aggregation::weighted
                              ? static_cast<double>(sizes[j]) / static_cast<double>(total)
                              : 1.0 / static_cast<double>(models.size());
    for (std::size_t d = 0; d < dim; ++d) combined[d] += weight * models[j][d];
  }
  return combined;
}

std::vector<double> client_noisy_step(std::span<const double> theta, const LossModel& loss,
                                      const LabeledDataset& data,
                                      std::span<const std::int32_t> shard, double eta,
                                      double sigma, std::optional<double> projection_radius,
                                      Rng& noise_rng) {
  if (shard.empty()) throw ValidationError("client step: empty shard");
  std::vector<double> next(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  loss.gradient(theta, data, shard, grad);
  for (std::size_t d = 0; d < next.size(); ++d) {
    const double z = sigma > 0.0 ? noise_rng.normal(sigma) : 0.0;
    next[d] -= eta * (grad[d] + z);
  }
  if (projection_radius) project_onto_ball(next, *projection_radius);
  return next;
}

TrainResult train_distributed(const LabeledDataset& train, const Partition& partition,
                              const LossModel& loss, const TrainingConfig& config, double sigma,
                              bool want_trace) {
  config.validate();
  if (sigma < 0.0) throw ValidationError("training: sigma must be >= 0");
  partition.validate(train.rows);
  const int clients = partition.clients();
  const int dim = loss.dimension(train);

  Rng root(config.seed);
  std::vector<Rng> noise_streams;
  noise_streams.reserve(static_cast<std::size_t>(clients));
  for (int j = 0; j < clients; ++j) {
    noise_streams.push_back(root.split(kClientStreamBase + static_cast<std::uint64_t>(j)));
  }

  const std::vector<double> init = initial_theta(dim, config, root);
  std::vector<std::vector<double>> client_models(static_cast<std::size_t>(clients), init);

  TrainResult result;
  double sum_w_sq = 0.0;
  {
    const double total = static_cast<double>(partition.total());
    for (int j = 0; j < clients; ++j) {
      const double w = config.aggregation == Aggregation::weighted
                           ? static_cast<double>(partition.client_sizes[static_cast<std::size_t>(j)]) / total
                           : 1.0 / static_cast<double>(clients);
      sum_w_sq += w * w;
    }
  }
  result.aggregate_noise_variance = sigma * sigma * sum_w_sq;

  const auto record_trace = [&](std::int64_t round, const std::vector<double>& theta) {
    if (!want_trace) return;
    const std::vector<double> grad = loss.gradient_all(theta, train);
    result.trace.push_back(
        TraceRow{round, "server", loss.value_all(theta, train), l2_norm(grad)});
  };
  record_trace(0, client_models[0]);

  for (std::int64_t t = 0; t < config.rounds; ++t) {
    for (int j = 0; j < clients; ++j) {
      const auto ji = static_cast<std::size_t>(j);
      client_models[ji] = client_noisy_step(
          client_models[ji], loss, train, partition.assignments[ji], config.learning_rate, sigma,
          config.projection_radius, noise_streams[ji]);
    }
    if (config.protocol == Protocol::sync_every_round) {
      std::vector<double> combined =
          aggregate(client_models, partition.client_sizes, config.aggregation);
      for (auto& model : client_models) model = combined;
      record_trace(t + 1, combined);
    }
  }

  if (config.protocol == Protocol::sync_every_round) {
    result.theta = client_models[0];
  } else {
    result.theta = aggregate(client_models, partition.client_sizes, config.aggregation);
    record_trace(config.rounds, result.theta);
  }
  return result;
}

TrainResult train_centralized_dp(const LabeledDataset& train, const LossModel& loss,
                                 const TrainingConfig& config, double sigma, bool want_trace) {
  return train_distributed(train, partition_single(train.rows), loss, config, sigma, want_trace);
}

NonprivateResult train_centralized_nonprivate(const LabeledDataset& train, const LossModel& loss,
                                              std::int64_t rounds, double eta,
                                              std::optional<double> projection_radius) {
  if (rounds < 0) throw ValidationError("training: rounds must be >= 0");
  if (!(eta > 0.0)) throw ValidationError("training: learning_rate must be positive");
  std::vector<double> theta(static_cast<std::size_t>(loss.dimension(train)), 0.0);
  std::vector<double> grad(theta.size());
  const auto indices = [&] {
    std::vector<std::int32_t> idx(static_cast<std::size_t>(train.rows));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int32_t>(i);
    return idx;
  }();
  for (std::int64_t t = 0; t < rounds; ++t) {
    loss.gradient(theta, train, indices, grad);
    for (std::size_t d = 0; d < theta.size(); ++d) theta[d] -= eta * grad[d];
    if (projection_radius) project_onto_ball(theta, *projection_radius);
  }
  loss.gradient(theta, train, indices, grad);
  NonprivateResult result;
  result.theta = std::move(theta);
  result.final_grad_norm = l2_norm(grad);
  result.converged = result.final_grad_norm <= 1e-6;
  return result;
}

}  // namespace wddp
