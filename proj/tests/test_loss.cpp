#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "loss.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace wddp;

namespace {

LabeledDataset make_dataset(std::vector<std::vector<double>> rows, std::vector<int> labels) {
  LabeledDataset data;
  data.rows = static_cast<std::int64_t>(rows.size());
  data.cols = static_cast<std::int64_t>(rows[0].size());
  data.labels = std::move(labels);
  for (const auto& row : rows) {
    data.features.insert(data.features.end(), row.begin(), row.end());
  }
  return data;
}

LabeledDataset random_normalized(std::int64_t n, int dim, Rng& rng) {
  LabeledDataset data;
  data.rows = n;
  data.cols = dim;
  data.features.resize(static_cast<std::size_t>(n * dim));
  data.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double norm_sq = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double v = rng.normal(1.0);
      data.features[static_cast<std::size_t>(i * dim + d)] = v;
      norm_sq += v * v;
    }
    // Radius uniform in (0, 1]: strictly inside the unit ball.
    const double scale = rng.uniform(0.05, 1.0) / std::sqrt(norm_sq);
    for (int d = 0; d < dim; ++d) data.features[static_cast<std::size_t>(i * dim + d)] *= scale;
    data.labels[static_cast<std::size_t>(i)] = rng.uniform01() < 0.5 ? 0 : 1;
  }
  return data;
}

// Test fixture: f(theta) = 0.5 ||theta - a||^2, ignoring the dataset. Strongly
// convex with constant 1.
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

}  // namespace

TEST_CASE("logistic loss at theta = 0 is ln 2 on any dataset") {
  Rng rng(21);
  const LabeledDataset data = random_normalized(57, 4, rng);
  const std::vector<double> theta(4, 0.0);
  CHECK(logistic_loss(theta, data) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logistic loss hand example: h = 0.75") {
  const LabeledDataset data = make_dataset({{1.0}}, {1});
  const std::vector<double> theta{std::log(3.0)};
  CHECK(logistic_loss(theta, data) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("logistic loss is permutation invariant and non-negative") {
  Rng rng(22);
  LabeledDataset data = random_normalized(40, 3, rng);
  std::vector<double> theta{0.3, -1.2, 0.7};
  const double base = logistic_loss(theta, data);
  CHECK(base >= 0.0);

  // Reverse the sample order.
  LabeledDataset reversed = data;
  for (std::int64_t i = 0; i < data.rows; ++i) {
    const auto src = data.row(data.rows - 1 - i);
    std::copy(src.begin(), src.end(),
              reversed.features.begin() + static_cast<std::ptrdiff_t>(i * data.cols));
    reversed.labels[static_cast<std::size_t>(i)] =
        data.labels[static_cast<std::size_t>(data.rows - 1 - i)];
  }
  CHECK(logistic_loss(theta, reversed) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("logistic loss stays finite at saturating scores") {
  const LabeledDataset data = make_dataset({{1.0}, {-1.0}}, {0, 1});
  const std::vector<double> theta{500.0};
  const double value = logistic_loss(theta, data);
  CHECK(std::isfinite(value));
  CHECK(value == doctest::Approx(500.0).epsilon(1e-9));
}

TEST_CASE("logistic gradient: half residual at theta = 0") {
  const LabeledDataset data = make_dataset({{1.0, 0.0}}, {1});
  const std::vector<double> theta{0.0, 0.0};
  const std::vector<double> grad = logistic_gradient(theta, data);
  CHECK(grad[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(grad[1] == 0.0);
}

TEST_CASE("logistic gradient matches central finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(6));
    const LabeledDataset data = random_normalized(20, dim, rng);
    std::vector<double> theta(static_cast<std::size_t>(dim));
    for (double& t : theta) t = rng.uniform(-2.0, 2.0);

    const std::vector<double> grad = logistic_gradient(theta, data);
    const std::vector<double> fd = oracles::finite_difference_gradient(
        [&](std::span<const double> point) { return logistic_loss(point, data); }, theta, 1e-5);
    double err = 0.0, ref = 0.0;
    for (std::size_t d = 0; d < grad.size(); ++d) {
      err += (grad[d] - fd[d]) * (grad[d] - fd[d]);
      ref += grad[d] * grad[d];
    }
    CHECK(std::sqrt(err) <= 1e-6 * (1.0 + std::sqrt(ref)));
  }
}

TEST_CASE("per-example logistic gradient norm is at most 1 on the unit ball") {
  Rng rng(24);
  const LabeledDataset data = random_normalized(10000, 6, rng);
  const LogisticLoss loss;
  std::vector<double> grad(6);
  std::vector<std::int32_t> one(1);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> theta(6);
    for (double& t : theta) t = rng.uniform(-10.0, 10.0);
    for (std::int32_t i = 0; i < 10000; ++i) {
      one[0] = i;
      loss.gradient(theta, data, one, grad);
      double norm_sq = 0.0;
      for (const double g : grad) norm_sq += g * g;
      REQUIRE(std::sqrt(norm_sq) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("full-batch logistic gradient norm is at most 1") {
  Rng rng(25);
  const LabeledDataset data = random_normalized(500, 8, rng);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> theta(8);
    for (double& t : theta) t = rng.uniform(-20.0, 20.0);
    const std::vector<double> grad = logistic_gradient(theta, data);
    double norm_sq = 0.0;
    for (const double g : grad) norm_sq += g * g;
    CHECK(std::sqrt(norm_sq) <= 1.0 + 1e-12);
  }
}

TEST_CASE("logistic smoothness certificate L = 1/4") {
  Rng rng(26);
  const LabeledDataset data = random_normalized(300, 5, rng);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(5), b(5);
    for (double& t : a) t = rng.uniform(-5.0, 5.0);
    for (double& t : b) t = rng.uniform(-5.0, 5.0);
    const auto ga = logistic_gradient(a, data);
    const auto gb = logistic_gradient(b, data);
    double dg = 0.0, dt = 0.0;
    for (std::size_t d = 0; d < ga.size(); ++d) {
      dg += (ga[d] - gb[d]) * (ga[d] - gb[d]);
      dt += (a[d] - b[d]) * (a[d] - b[d]);
    }
    CHECK(std::sqrt(dg) <= 0.25 * std::sqrt(dt) * (1.0 + 1e-9));
  }
}

TEST_CASE("regularized logistic: penalty accounting") {
  Rng rng(27);
  const LabeledDataset data = random_normalized(60, 4, rng);
  const std::vector<double> zero(4, 0.0);
  const auto [loss_at_zero, grad_at_zero] = regularized_logistic(zero, data, 0.1);
  CHECK(loss_at_zero == doctest::Approx(logistic_loss(zero, data)).epsilon(1e-12));
  CHECK(grad_at_zero == logistic_gradient(zero, data));

  std::vector<double> theta{0.5, -1.0, 2.0, 0.25};
  double norm_sq = 0.0;
  for (const double t : theta) norm_sq += t * t;
  const auto [reg_loss, reg_grad] = regularized_logistic(theta, data, 0.1);
  CHECK(reg_loss - logistic_loss(theta, data) == doctest::Approx(0.05 * norm_sq).epsilon(1e-12));

  const std::vector<double> fd = oracles::finite_difference_gradient(
      [&](std::span<const double> point) {
        return regularized_logistic(point, data, 0.1).first;
      },
      theta, 1e-5);
  for (std::size_t d = 0; d < fd.size(); ++d) {
    CHECK(reg_grad[d] == doctest::Approx(fd[d]).epsilon(1e-6));
  }

  CHECK_THROWS_AS(regularized_logistic(theta, data, 0.0), ValidationError);
  CHECK_THROWS_AS(regularized_logistic(theta, data, -0.5), ValidationError);
}

TEST_CASE("regularized logistic metadata certifies lambda, L, and G on the ball") {
  const RegularizedLogisticLoss loss(0.1, 10.0);
  const LossMetadata meta = loss.metadata();
  CHECK(meta.strong_convexity.value() == doctest::Approx(0.1));
  CHECK(meta.smoothness_l == doctest::Approx(0.35));
  CHECK(meta.lipschitz_g == doctest::Approx(2.0));
  CHECK(meta.certified_radius.value() == doctest::Approx(10.0));
  CHECK(meta.smoothness_l >= meta.strong_convexity.value());

  // Per-example gradients stay within G for theta on the certified ball.
  Rng rng(28);
  const LabeledDataset data = random_normalized(200, 4, rng);
  std::vector<double> grad(4);
  std::vector<std::int32_t> one(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> theta(4);
    double norm_sq = 0.0;
    for (double& t : theta) {
      t = rng.normal(1.0);
      norm_sq += t * t;
    }
    const double scale = rng.uniform(0.0, 10.0) / std::sqrt(norm_sq);
    for (double& t : theta) t *= scale;
    for (std::int32_t i = 0; i < 200; ++i) {
      one[0] = i;
      loss.gradient(theta, data, one, grad);
      double g = 0.0;
      for (const double v : grad) g += v * v;
      REQUIRE(std::sqrt(g) <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("scalar test objective: values, slopes, smoothness") {
  const auto [f0, g0] = pl_test_function(0.0);
  CHECK(f0 == 0.0);
  CHECK(g0 == 0.0);

  const double half_pi = std::numbers::pi / 2.0;
  const auto [f1, g1] = pl_test_function(half_pi);
  CHECK(f1 == doctest::Approx(half_pi * half_pi + 3.0).epsilon(1e-12));
  CHECK(g1 == doctest::Approx(std::numbers::pi).epsilon(1e-12));

  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = rng.uniform(-10.0, 10.0);
    const double fd = (pl_test_function(t + 1e-5).first - pl_test_function(t - 1e-5).first) /
                      2e-5;
    CHECK(pl_test_function(t).second == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("gradient dominance holds for a strongly convex quadratic") {
  const QuadraticLoss loss({1.0, -2.0, 0.5});
  LabeledDataset empty;
  empty.rows = 0;
  empty.cols = 3;
  Rng rng(30);
  const std::vector<std::pair<double, double>> box(3, {-5.0, 5.0});
  const PlCheckResult result = pl_verify(loss, empty, 0.0, 1.0, box, 500, rng);
  CHECK(result.ok);
}

TEST_CASE("measured PL constant verifies; an inflated one is falsified") {
  const double infimum = oracles::pl_ratio_infimum(
      [](double t) { return pl_test_function(t); }, 0.0, -10.0, 10.0, 400001);
  CHECK(infimum > 0.0);

  const SinePlLoss loss(10.0);
  CHECK(loss.metadata().pl_constant.value() == doctest::Approx(0.95 * infimum).epsilon(1e-3));

  LabeledDataset empty;
  empty.rows = 0;
  empty.cols = 1;
  const std::vector<std::pair<double, double>> box(1, {-10.0, 10.0});
  Rng rng(31);
  const PlCheckResult pass =
      pl_verify(loss, empty, 0.0, 0.95 * infimum, box, 4000, rng);
  CHECK(pass.ok);

  Rng rng2(32);
  const PlCheckResult fail = pl_verify(loss, empty, 0.0, 10.0 * infimum, box, 4000, rng2);
  CHECK_FALSE(fail.ok);
  CHECK(fail.witness_theta.size() == 1);
  CHECK(fail.witness_lhs < fail.witness_rhs);
}

TEST_CASE("strong convexity implies gradient dominance for regularized logistic") {
  Rng rng(33);
  const LabeledDataset data = random_normalized(150, 4, rng);
  const double reg = 0.1;
  const RegularizedLogisticLoss loss(reg, 10.0);

  // Reference minimum via long plain gradient descent.
  const std::vector<double> theta_star = oracles::plain_gradient_descent(
      [&](std::span<const double> theta) { return loss.gradient_all(theta, data); }, 4,
      1.0 / loss.metadata().smoothness_l, 20000);
  const double f_star = loss.value_all(theta_star, data);

  const std::vector<std::pair<double, double>> box(4, {-2.0, 2.0});
  Rng verify_rng(34);
  const PlCheckResult result = pl_verify(loss, data, f_star, reg, box, 2000, verify_rng);
  CHECK(result.ok);
}
