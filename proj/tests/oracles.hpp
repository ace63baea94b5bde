#ifndef WDDP_TESTS_ORACLES_HPP
#define WDDP_TESTS_ORACLES_HPP

// Independent reference implementations used only by tests. These compute
// expected values through a different code path than the library: dense grid
// searches instead of bisection, explicit loops instead of the production
// kernels.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace wddp::oracles {

// Tail bound min over the grid of exp(T * l(l+1) (2G/n)^2 / (2 sigma^2) - l eps).
double tail_delta(double sigma, double epsilon, double lipschitz_g, std::int64_t rounds,
                  std::int64_t samples, std::span<const double> lambda_grid);

// Smallest sigma meeting (epsilon, delta), found by a two-stage dense grid
// search over sigma with a dense integer moment-order grid.
double min_sigma_grid_search(double epsilon, double delta, double lipschitz_g,
                             std::int64_t rounds, std::int64_t samples);

// Central finite differences of a scalar function of a vector.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& value, std::span<const double> theta,
    double step);

// Plain full-batch gradient descent from zero, via a caller-supplied gradient.
std::vector<double> plain_gradient_descent(
    const std::function<std::vector<double>(std::span<const double>)>& gradient, int dimension,
    double eta, std::int64_t rounds);

// Infimum over a dense 1-D grid of f'(t)^2 / (2 (f(t) - f_star)), skipping
// points within 1e-12 of the minimum value.
double pl_ratio_infimum(const std::function<std::pair<double, double>(double)>& value_and_slope,
                        double f_star, double lo, double hi, int grid_points);

}  // namespace wddp::oracles

#endif  // WDDP_TESTS_ORACLES_HPP
