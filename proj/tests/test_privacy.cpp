#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "oracles.hpp"
#include "privacy.hpp"
#include "rng.hpp"

using namespace wddp;

namespace {

MechanismParams params(double g, std::int64_t rounds, std::int64_t samples, double sigma) {
  return MechanismParams{g, rounds, samples, sigma};
}

}  // namespace

TEST_CASE("per-step log moment closed form") {
  CHECK(per_step_log_moment(params(1.0, 1, 1000, 1.0), 1.0) == doctest::Approx(4.0e-6).epsilon(1e-12));
  CHECK(per_step_log_moment(params(1.0, 1, 10, 1e9), 2.0) < 1e-16);
  CHECK(per_step_log_moment(params(1.0, 1, 1, 1.0), 1.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(per_step_log_moment(params(1.0, 1, 10, 1.0), 0.5), ValidationError);
  CHECK_THROWS_AS(per_step_log_moment(params(1.0, 1, 10, 0.0), 1.0), ValidationError);
}

TEST_CASE("per-step matches the independent formula on random tuples") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const double g = rng.uniform(0.1, 5.0);
    const auto n = static_cast<std::int64_t>(1 + rng.below(100000));
    const double sigma = rng.uniform(0.01, 50.0);
    const double lambda = 1.0 + rng.uniform01() * 200.0;
    const double expected =
        lambda * (lambda + 1.0) * std::pow(2.0 * g / static_cast<double>(n), 2) /
        (2.0 * sigma * sigma);
    CHECK(per_step_log_moment(params(g, 1, n, sigma), lambda) ==
          doctest::Approx(expected).epsilon(1e-12));
    const MomentBound bound = per_step_moment_bound(params(g, 1, n, sigma), lambda);
    CHECK(bound.order_lambda == lambda);
    CHECK(bound.log_moment >= 0.0);
    CHECK(bound.log_moment == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("composition is linear in the round count") {
  CHECK(composed_log_moment(params(1.0, 1000, 1000, 1.0), 1.0) ==
        doctest::Approx(4.0e-3).epsilon(1e-12));
  CHECK(composed_log_moment(params(1.0, 1, 17, 0.3), 2.5) ==
        doctest::Approx(per_step_log_moment(params(1.0, 1, 17, 0.3), 2.5)).epsilon(1e-15));
  // lambda=3, T=2, G=1, n=2, sigma=2 -> 2*3*4*1*2/(4*4) = 3.
  CHECK(composed_log_moment(params(1.0, 2, 2, 2.0), 3.0) == doctest::Approx(3.0).epsilon(1e-12));

  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rounds = static_cast<std::int64_t>(1 + rng.below(10000));
    const MechanismParams p = params(1.0, rounds, 100, 0.5);
    const double lambda = 1.0 + rng.uniform01() * 64.0;
    CHECK(composed_log_moment(p, lambda) ==
          doctest::Approx(static_cast<double>(rounds) * per_step_log_moment(p, lambda))
              .epsilon(1e-12));
  }
}

TEST_CASE("composition overflow returns the infinity marker") {
  const MechanismParams p = params(1.0, 1000000, 1, 1e-300);
  CHECK(std::isinf(composed_log_moment(p, 1e100)));
}

TEST_CASE("tail bound: no-leak limit and grid supersets") {
  const std::vector<double> grid = integer_lambda_grid(64);
  const double eps = 0.3;
  const double quiet = delta_for_epsilon(params(1.0, 1, 10, 1e9), eps, grid);
  CHECK(quiet == doctest::Approx(std::exp(-64.0 * eps)).epsilon(1e-9));

  const MechanismParams p = params(1.0, 100, 500, 4.0);
  const std::vector<double> single{1.0};
  CHECK(delta_for_epsilon(p, eps, grid) <= delta_for_epsilon(p, eps, single));
  CHECK_THROWS_AS(delta_for_epsilon(p, eps, std::vector<double>{}), ValidationError);
}

TEST_CASE("tail bound matches a 10x-finer grid search") {
  // G=1, T=1000, n=1000, sigma=10, eps=0.5: the optimum sits at the grid edge,
  // so the coarse and fine grids agree to rounding.
  const MechanismParams p = params(1.0, 1000, 1000, 10.0);
  const std::vector<double> grid = integer_lambda_grid(64);
  std::vector<double> fine;
  for (double l = 1.0; l <= 64.0 + 1e-9; l += 0.1) fine.push_back(l);
  const double coarse_value = delta_for_epsilon(p, 0.5, grid);
  const double fine_value = oracles::tail_delta(10.0, 0.5, 1.0, 1000, 1000, fine);
  CHECK(coarse_value == doctest::Approx(fine_value).epsilon(1e-12));
}

TEST_CASE("tail bound is monotone in sigma, epsilon, and rounds") {
  const std::vector<double> grid = integer_lambda_grid(64);
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const double g = rng.uniform(0.5, 2.0);
    const auto n = static_cast<std::int64_t>(100 + rng.below(10000));
    const double eps = rng.uniform(0.05, 1.0);
    const auto rounds = static_cast<std::int64_t>(1 + rng.below(2000));
    const double sigma = rng.uniform(0.1, 20.0);

    CHECK(delta_for_epsilon(params(g, rounds, n, sigma * 1.5), eps, grid) <=
          delta_for_epsilon(params(g, rounds, n, sigma), eps, grid));
    CHECK(delta_for_epsilon(params(g, rounds, n, sigma), eps * 1.5, grid) <=
          delta_for_epsilon(params(g, rounds, n, sigma), eps, grid));
    CHECK(delta_for_epsilon(params(g, rounds * 2, n, sigma), eps, grid) >=
          delta_for_epsilon(params(g, rounds, n, sigma), eps, grid));
  }
}

TEST_CASE("calibration matches the dense grid-search oracle within 1%") {
  const PrivacyBudget budget{0.05, 0.001};
  const auto started = std::chrono::steady_clock::now();
  const CalibrationResult result = calibrate_sigma(budget, 1.0, 1000, 10000);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  CHECK(elapsed < 1000);

  const double oracle = oracles::min_sigma_grid_search(0.05, 0.001, 1.0, 1000, 10000);
  CHECK(result.params.sigma == doctest::Approx(oracle).epsilon(0.01));
  CHECK(result.delta_achieved <= 0.001);
  CHECK(result.implied_c ==
        doctest::Approx(result.params.sigma * result.params.sigma * 1e8 * 0.05 * 0.05 /
                        (1000.0 * std::log(1000.0)))
            .epsilon(1e-12));
}

TEST_CASE("calibration scaling laws") {
  const PrivacyBudget budget{0.05, 0.001};
  const double sigma_n500 = calibrate_sigma(budget, 1.0, 1000, 500).params.sigma;
  const double sigma_n1000 = calibrate_sigma(budget, 1.0, 1000, 1000).params.sigma;
  CHECK(sigma_n500 / sigma_n1000 == doctest::Approx(2.0).epsilon(1e-9));

  const double sigma_t = calibrate_sigma(budget, 1.0, 250, 1000).params.sigma;
  const double sigma_4t = calibrate_sigma(budget, 1.0, 1000, 1000).params.sigma;
  CHECK(sigma_4t / sigma_t == doctest::Approx(2.0).epsilon(1e-6));

  // Simultaneous scaling G -> kG, n -> kn leaves sigma unchanged.
  const double base = calibrate_sigma(budget, 1.0, 200, 2000).params.sigma;
  const double scaled = calibrate_sigma(budget, 3.0, 200, 6000).params.sigma;
  CHECK(base == doctest::Approx(scaled).epsilon(1e-9));
}

TEST_CASE("calibration is minimal and self-consistent") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const double eps = rng.uniform(0.05, 1.0);
    const double delta = rng.uniform(1e-5, 1e-2);
    const auto rounds = static_cast<std::int64_t>(10 + rng.below(3000));
    const auto samples = static_cast<std::int64_t>(100 + rng.below(20000));
    const PrivacyBudget budget{eps, delta};
    const CalibrationResult result = calibrate_sigma(budget, 1.0, rounds, samples);

    const int needed = static_cast<int>(std::ceil(4.0 * std::log(1.0 / delta) / eps));
    const std::vector<double> grid = integer_lambda_grid(std::max(128, needed));
    MechanismParams check = result.params;
    CHECK(delta_for_epsilon(check, eps, grid) <= delta);
    check.sigma = result.params.sigma * 0.98;
    CHECK(delta_for_epsilon(check, eps, grid) > delta);
  }
}

TEST_CASE("an unmeetable budget reports infeasibility naming the ceiling") {
  CalibrationOptions options;
  options.sigma_ceiling_factor = 1e-4;
  const PrivacyBudget budget{0.1, 0.001};
  CHECK_THROWS_AS(calibrate_sigma(budget, 1.0, 1000, 100, options), InfeasibleError);
  try {
    calibrate_sigma(budget, 1.0, 1000, 100, options);
  } catch (const InfeasibleError& error) {
    CHECK(std::string(error.what()).find("ceiling") != std::string::npos);
  }
}

TEST_CASE("gaussian sampling: zeros, determinism, and moments") {
  Rng rng(15);
  const std::vector<double> zero = sample_gaussian_noise(0.0, 32, rng);
  for (const double z : zero) CHECK(z == 0.0);

  Rng a(99), b(99);
  CHECK(sample_gaussian_noise(1.0, 1000, a) == sample_gaussian_noise(1.0, 1000, b));

  Rng big(7);
  const int dim = 1000000;
  const std::vector<double> draw = sample_gaussian_noise(1.0, dim, big);
  double mean = 0.0;
  for (const double z : draw) mean += z;
  mean /= dim;
  double var = 0.0;
  for (const double z : draw) var += (z - mean) * (z - mean);
  var /= dim - 1;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(dim)));
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("split noise streams are uncorrelated") {
  Rng root(2024);
  Rng s1 = root.split(1);
  Rng s2 = root.split(2);
  const int n = 100000;
  double sum1 = 0.0, sum2 = 0.0, sum11 = 0.0, sum22 = 0.0, sum12 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s1.normal(1.0);
    const double y = s2.normal(1.0);
    sum1 += x;
    sum2 += y;
    sum11 += x * x;
    sum22 += y * y;
    sum12 += x * y;
  }
  const double cov = sum12 / n - (sum1 / n) * (sum2 / n);
  const double corr = cov / std::sqrt((sum11 / n - (sum1 / n) * (sum1 / n)) *
                                      (sum22 / n - (sum2 / n) * (sum2 / n)));
  CHECK(std::abs(corr) < 0.01);
}
