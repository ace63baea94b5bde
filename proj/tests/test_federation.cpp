#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "federation.hpp"
#include "loss.hpp"
#include "oracles.hpp"
#include "partition.hpp"
#include "rng.hpp"

using namespace wddp;

namespace {

LabeledDataset synthetic(std::int64_t n, int dim, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.dim = dim;
  Rng rng(seed);
  return make_two_gaussians(spec, rng);
}

// f(theta) = 0.5 ||theta - a||^2 over each shard (data-independent), strongly
// convex test fixture.
class QuadraticLoss : public LossModel {
 public:
  explicit QuadraticLoss(std::vector<double> target) : target_(std::move(target)) {}
  std::string name() const override { return "quadratic"; }
  LossMetadata metadata() const override {
    LossMetadata meta;
    meta.lipschitz_g = 1e6;
    meta.smoothness_l = 1.0;
    meta.strong_convexity = 1.0;
    return meta;
  }
  int dimension(const LabeledDataset&) const override { return static_cast<int>(target_.size()); }
  double value(std::span<const double> theta, const LabeledDataset&,
               std::span<const std::int32_t>) const override {
    double sum = 0.0;
    for (std::size_t d = 0; d < target_.size(); ++d) {
      sum += (theta[d] - target_[d]) * (theta[d] - target_[d]);
    }
    return 0.5 * sum;
  }
  void gradient(std::span<const double> theta, const LabeledDataset&,
                std::span<const std::int32_t>, std::span<double> out) const override {
    for (std::size_t d = 0; d < target_.size(); ++d) out[d] = theta[d] - target_[d];
  }

 private:
  std::vector<double> target_;
};

TrainingConfig config_for(std::int64_t rounds, double eta, Aggregation aggregation,
                          Protocol protocol, std::uint64_t seed) {
  TrainingConfig config;
  config.rounds = rounds;
  config.learning_rate = eta;
  config.aggregation = aggregation;
  config.protocol = protocol;
  config.seed = seed;
  return config;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("client step: identity at zero learning rate and zero noise") {
  const LabeledDataset data = synthetic(40, 3, 1);
  const LogisticLoss loss;
  const Partition partition = partition_single(data.rows);
  const std::vector<double> theta{0.4, -0.3, 0.2};
  Rng noise(9);
  const std::vector<double> next =
      client_noisy_step(theta, loss, data, partition.assignments[0], 0.0, 0.0, {}, noise);
  CHECK(next == theta);
}

TEST_CASE("client step: one exact step on an identity-Hessian quadratic") {
  const QuadraticLoss loss({2.0, -1.0});
  LabeledDataset dummy;
  dummy.rows = 1;
  dummy.cols = 2;
  dummy.features = {0.0, 0.0};
  dummy.labels = {0};
  const Partition partition = partition_single(1);
  Rng noise(10);
  const std::vector<double> start{0.0, 0.0};
  const std::vector<double> next =
      client_noisy_step(start, loss, dummy, partition.assignments[0], 1.0, 0.0, {}, noise);
  CHECK(next[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("noise-free client trajectory matches the plain-GD oracle bit for bit") {
  const LabeledDataset data = synthetic(60, 4, 2);
  const LogisticLoss loss;
  const Partition partition = partition_single(data.rows);
  const double eta = 0.5;

  std::vector<double> theta(4, 0.0);
  Rng noise(11);
  for (int t = 0; t < 100; ++t) {
    theta = client_noisy_step(theta, loss, data, partition.assignments[0], eta, 0.0, {}, noise);
  }
  const std::vector<double> oracle = oracles::plain_gradient_descent(
      [&](std::span<const double> point) { return loss.gradient_all(point, data); }, 4, eta, 100);
  CHECK(theta == oracle);
}

TEST_CASE("aggregate: weighted convex combination") {
  const std::vector<std::vector<double>> models{{1.0, 0.0}, {0.0, 1.0}};
  const std::vector<std::int64_t> sizes{3, 1};
  const std::vector<double> combined = aggregate(models, sizes, Aggregation::weighted);
  CHECK(combined[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(combined[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("aggregate: equal sizes make weighted and uniform identical") {
  Rng rng(12);
  std::vector<std::vector<double>> models;
  for (int j = 0; j < 8; ++j) {
    std::vector<double> model(5);
    for (double& v : model) v = rng.normal(1.0);
    models.push_back(model);
  }
  const std::vector<std::int64_t> sizes(8, 25);
  CHECK(aggregate(models, sizes, Aggregation::weighted) ==
        aggregate(models, sizes, Aggregation::uniform));
}

TEST_CASE("aggregate: invariant under joint permutation") {
  Rng rng(13);
  std::vector<std::vector<double>> models;
  std::vector<std::int64_t> sizes;
  for (int j = 0; j < 5; ++j) {
    std::vector<double> model(3);
    for (double& v : model) v = rng.normal(1.0);
    models.push_back(model);
    sizes.push_back(static_cast<std::int64_t>(1 + rng.below(50)));
  }
  const std::vector<double> base = aggregate(models, sizes, Aggregation::weighted);

  std::vector<std::size_t> order{4, 2, 0, 3, 1};
  std::vector<std::vector<double>> permuted_models;
  std::vector<std::int64_t> permuted_sizes;
  for (const std::size_t j : order) {
    permuted_models.push_back(models[j]);
    permuted_sizes.push_back(sizes[j]);
  }
  const std::vector<double> permuted = aggregate(permuted_models, permuted_sizes,
                                                 Aggregation::weighted);
  CHECK(max_abs_diff(base, permuted) < 1e-12);
}

TEST_CASE("aggregate: dimension mismatch raises") {
  const std::vector<std::vector<double>> models{{1.0, 0.0}, {0.0}};
  const std::vector<std::int64_t> sizes{1, 1};
  CHECK_THROWS_AS(aggregate(models, sizes, Aggregation::weighted), ValidationError);
}

TEST_CASE("single party: both protocols coincide with centralized noisy GD") {
  const LabeledDataset data = synthetic(50, 3, 3);
  const LogisticLoss loss;
  const Partition partition = partition_single(data.rows);
  const double sigma = 0.7;

  const auto sync = train_distributed(
      data, partition, loss, config_for(40, 0.2, Aggregation::weighted, Protocol::sync_every_round, 77),
      sigma);
  const auto local = train_distributed(
      data, partition, loss,
      config_for(40, 0.2, Aggregation::weighted, Protocol::local_then_aggregate, 77), sigma);
  const auto centralized = train_centralized_dp(
      data, loss, config_for(40, 0.2, Aggregation::weighted, Protocol::sync_every_round, 77),
      sigma);

  CHECK(sync.theta == local.theta);
  CHECK(sync.theta == centralized.theta);
}

TEST_CASE("noise-free synchronized weighted training equals pooled gradient descent") {
  const LabeledDataset data = synthetic(300, 5, 4);
  const LogisticLoss loss;
  Rng part_rng(14);
  const Partition partition = partition_two_group(data.rows, 4, 3.0, 2, part_rng);
  const double eta = 0.5;

  const auto distributed = train_distributed(
      data, partition, loss,
      config_for(100, eta, Aggregation::weighted, Protocol::sync_every_round, 15), 0.0);
  const std::vector<double> pooled = oracles::plain_gradient_descent(
      [&](std::span<const double> point) { return loss.gradient_all(point, data); }, 5, eta, 100);
  CHECK(max_abs_diff(distributed.theta, pooled) < 1e-10);
}

TEST_CASE("equal shards: weighted and uniform produce the same noisy model") {
  const LabeledDataset data = synthetic(320, 4, 5);
  const LogisticLoss loss;
  Rng part_rng(16);
  const Partition partition = partition_two_group(data.rows, 8, 1.0, 4, part_rng);
  for (const auto size : partition.client_sizes) REQUIRE(size == 40);

  for (const Protocol protocol : {Protocol::sync_every_round, Protocol::local_then_aggregate}) {
    const auto weighted = train_distributed(
        data, partition, loss, config_for(50, 0.1, Aggregation::weighted, protocol, 18), 0.9);
    const auto uniform = train_distributed(
        data, partition, loss, config_for(50, 0.1, Aggregation::uniform, protocol, 18), 0.9);
    CHECK(max_abs_diff(weighted.theta, uniform.theta) < 1e-12);
  }
}

TEST_CASE("centralized DP training is deterministic and reduces to plain GD at sigma 0") {
  const LabeledDataset data = synthetic(80, 3, 6);
  const LogisticLoss loss;
  const TrainingConfig config =
      config_for(60, 0.3, Aggregation::weighted, Protocol::sync_every_round, 21);

  const auto once = train_centralized_dp(data, loss, config, 1.1);
  const auto twice = train_centralized_dp(data, loss, config, 1.1);
  CHECK(once.theta == twice.theta);

  const auto quiet = train_centralized_dp(data, loss, config, 0.0);
  const std::vector<double> oracle = oracles::plain_gradient_descent(
      [&](std::span<const double> point) { return loss.gradient_all(point, data); }, 3, 0.3, 60);
  CHECK(quiet.theta == oracle);
}

TEST_CASE("plain training converges on a quadratic to the analytic minimizer") {
  const QuadraticLoss loss({1.5, -2.0, 0.25});
  LabeledDataset dummy;
  dummy.rows = 1;
  dummy.cols = 3;
  dummy.features = {0.0, 0.0, 0.0};
  dummy.labels = {0};

  const NonprivateResult result = train_centralized_nonprivate(dummy, loss, 200, 1.0);
  CHECK(result.converged);
  CHECK(std::abs(result.theta[0] - 1.5) < 1e-8);
  CHECK(std::abs(result.theta[1] + 2.0) < 1e-8);
  CHECK(std::abs(result.theta[2] - 0.25) < 1e-8);
}

TEST_CASE("plain training: gradient norm does not grow, loss decreases each round") {
  // Linearly separable four-point toy set.
  LabeledDataset toy;
  toy.rows = 4;
  toy.cols = 2;
  toy.features = {1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0};
  toy.labels = {1, 1, 0, 0};
  const LogisticLoss loss;

  const std::vector<double> zero(2, 0.0);
  const double initial_norm = [&] {
    const auto g = loss.gradient_all(zero, toy);
    return std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
  }();

  const NonprivateResult result = train_centralized_nonprivate(toy, loss, 50, 4.0);
  const auto final_grad = loss.gradient_all(result.theta, toy);
  const double final_norm = std::sqrt(
      std::inner_product(final_grad.begin(), final_grad.end(), final_grad.begin(), 0.0));
  CHECK(final_norm <= initial_norm);

  // Per-round pooled loss from the trace of the equivalent noise-free run.
  TrainingConfig config = config_for(50, 4.0, Aggregation::weighted,
                                     Protocol::sync_every_round, 0);
  const TrainResult traced = train_centralized_dp(toy, loss, config, 0.0, /*want_trace=*/true);
  REQUIRE(traced.trace.size() == 51);
  for (std::size_t t = 1; t < traced.trace.size(); ++t) {
    CHECK(traced.trace[t].pooled_loss < traced.trace[t - 1].pooled_loss);
  }
}

TEST_CASE("weighted shard gradients reproduce the pooled gradient") {
  const LabeledDataset data = synthetic(257, 6, 7);
  const LogisticLoss loss;
  Rng part_rng(22);
  const Partition partition = partition_random(data.rows, 5, 10, part_rng);

  Rng theta_rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> theta(6);
    for (double& v : theta) v = theta_rng.uniform(-2.0, 2.0);

    std::vector<double> combined(6, 0.0);
    std::vector<double> shard_grad(6);
    for (int j = 0; j < partition.clients(); ++j) {
      loss.gradient(theta, data, partition.assignments[static_cast<std::size_t>(j)], shard_grad);
      const double weight = static_cast<double>(partition.client_sizes[static_cast<std::size_t>(j)]) /
                            static_cast<double>(data.rows);
      for (std::size_t d = 0; d < combined.size(); ++d) combined[d] += weight * shard_grad[d];
    }
    const std::vector<double> pooled = loss.gradient_all(theta, data);
    CHECK(max_abs_diff(combined, pooled) < 1e-12);
  }
}

TEST_CASE("client weights are normalized") {
  Rng part_rng(24);
  const Partition partition = partition_random(1013, 9, 10, part_rng);
  double total = 0.0;
  for (const auto size : partition.client_sizes) {
    total += static_cast<double>(size) / static_cast<double>(partition.total());
  }
  CHECK(std::abs(total - 1.0) <= 1e-15);
}

TEST_CASE("aggregate noise variance shrinks under weighting") {
  const LabeledDataset data = synthetic(400, 3, 8);
  const LogisticLoss loss;
  Rng part_rng(25);
  const Partition partition = partition_two_group(data.rows, 4, 9.0, 2, part_rng);
  const double sigma = 2.0;

  const auto weighted = train_distributed(
      data, partition, loss,
      config_for(1, 0.1, Aggregation::weighted, Protocol::sync_every_round, 26), sigma);
  double sum_w_sq = 0.0;
  for (const auto size : partition.client_sizes) {
    const double w = static_cast<double>(size) / static_cast<double>(partition.total());
    sum_w_sq += w * w;
  }
  CHECK(weighted.aggregate_noise_variance == doctest::Approx(sigma * sigma * sum_w_sq));
  CHECK(weighted.aggregate_noise_variance <= sigma * sigma);

  const auto uniform = train_distributed(
      data, partition, loss,
      config_for(1, 0.1, Aggregation::uniform, Protocol::sync_every_round, 26), sigma);
  CHECK(uniform.aggregate_noise_variance == doctest::Approx(sigma * sigma / 4.0));
}

TEST_CASE("projection keeps iterates on the certificate ball") {
  const LabeledDataset data = synthetic(30, 2, 9);
  const RegularizedLogisticLoss loss(0.1, 0.5);
  TrainingConfig config = config_for(200, 2.0, Aggregation::weighted,
                                     Protocol::sync_every_round, 27);
  config.projection_radius = 0.5;
  const auto result = train_centralized_dp(data, loss, config, 3.0);
  double norm = 0.0;
  for (const double t : result.theta) norm += t * t;
  CHECK(std::sqrt(norm) <= 0.5 + 1e-12);
}
