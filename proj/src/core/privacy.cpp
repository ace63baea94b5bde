#include "privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace wddp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("privacy budget: epsilon must be a positive finite real, got " +
                          std::to_string(epsilon));
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ValidationError("privacy budget: delta must lie in (0, 1), got " +
                          std::to_string(delta));
  }
}

void MechanismParams::validate(bool require_noise) const {
  if (!(lipschitz_g > 0.0) || !std::isfinite(lipschitz_g)) {
    throw ValidationError("mechanism: lipschitz_g must be positive and finite");
  }
  if (total_rounds < 1) throw ValidationError("mechanism: total_rounds must be >= 1");
  if (total_samples < 1) throw ValidationError("mechanism: total_samples must be >= 1");
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw ValidationError("mechanism: sigma must be finite and non-negative");
  }
  if (require_noise && sigma == 0.0) {
    throw ValidationError("mechanism: sigma must be positive");
  }
}

double per_step_log_moment(const MechanismParams& params, double order_lambda) {
  params.validate(/*require_noise=*/true);
  if (!(order_lambda >= 1.0)) {
    throw ValidationError("per_step_log_moment: moment order must be >= 1, got " +
                          std::to_string(order_lambda));
  }
  const double ratio = params.l2_sensitivity() / params.sigma;
  return order_lambda * (order_lambda + 1.0) * ratio * ratio / 2.0;
}

MomentBound per_step_moment_bound(const MechanismParams& params, double order_lambda) {
  return MomentBound{order_lambda, per_step_log_moment(params, order_lambda)};
}

double composed_log_moment(const MechanismParams& params, double order_lambda) {
  const double per_step = per_step_log_moment(params, order_lambda);
  const double total = static_cast<double>(params.total_rounds) * per_step;
  if (!std::isfinite(total)) return kInf;
  return total;
}

double delta_for_epsilon(const MechanismParams& params, double budget_epsilon,
                         std::span<const double> lambda_grid) {
  if (!(budget_epsilon > 0.0)) {
    throw ValidationError("delta_for_epsilon: epsilon must be positive");
  }
  if (lambda_grid.empty()) {
    throw ValidationError("delta_for_epsilon: empty moment-order grid");
  }
  double best = kInf;
  for (const double lambda : lambda_grid) {
    const double exponent = composed_log_moment(params, lambda) - lambda * budget_epsilon;
    best = std::min(best, std::exp(exponent));
  }
  return best;
}

std::vector<double> integer_lambda_grid(int max_order) {
  if (max_order < 1) throw ValidationError("lambda grid: max_order must be >= 1");
  std::vector<double> grid(static_cast<std::size_t>(max_order));
  for (int i = 0; i < max_order; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
  return grid;
}

CalibrationResult calibrate_sigma(const PrivacyBudget& budget, double lipschitz_g,
                                  std::int64_t total_rounds, std::int64_t total_samples,
                                  const CalibrationOptions& options) {
  budget.validate();
  MechanismParams params{lipschitz_g, total_rounds, total_samples, /*sigma=*/1.0};
  params.validate();

  // The tail bound cannot go below exp(-lambda_max * epsilon) no matter how
  // large sigma is, so the grid must reach past ln(1/delta)/epsilon. Extend to
  // 4x that, keeping room for the optimal interior order.
  const double log_inv_delta = std::log(1.0 / budget.delta);
  const int needed = static_cast<int>(std::ceil(4.0 * log_inv_delta / budget.epsilon));
  const int lambda_max = std::max(options.lambda_max, needed);
  const std::vector<double> grid = integer_lambda_grid(lambda_max);

  const auto delta_at = [&](double sigma) {
    params.sigma = sigma;
    return delta_for_epsilon(params, budget.epsilon, grid);
  };

  const double sigma_ceiling = options.sigma_ceiling_factor * lipschitz_g;
  // Bracket scale: sensitivity * sqrt(T). Scaling G -> kG, n -> kn, or
  // T -> 4T rescales every bisection iterate exactly, so the returned sigma
  // obeys the G/n and sqrt(T) proportionality laws to machine precision.
  const double unit = params.l2_sensitivity() * std::sqrt(static_cast<double>(total_rounds));

  double hi = unit;
  while (delta_at(hi) > budget.delta) {
    hi *= 2.0;
    if (hi > sigma_ceiling) {
      throw InfeasibleError(
          "calibration infeasible: no sigma below the ceiling " + std::to_string(sigma_ceiling) +
          " meets delta=" + std::to_string(budget.delta) + " at epsilon=" +
          std::to_string(budget.epsilon) + " (binding constraint: sigma ceiling)");
    }
  }
  double lo = hi / 2.0;
  while (delta_at(lo) <= budget.delta) {
    lo /= 2.0;
    if (lo < unit * 0x1.0p-200) break;  // delta is met even with negligible noise
  }

  while (hi - lo > options.relative_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    if (delta_at(mid) > budget.delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  CalibrationResult result;
  result.params = params;
  result.params.sigma = hi;
  result.budget = budget;
  result.delta_achieved = delta_at(hi);
  int best_lambda = 1;
  double best = kInf;
  for (const double lambda : grid) {
    const double value = std::exp(composed_log_moment(result.params, lambda) -
                                  lambda * budget.epsilon);
    if (value < best) {
      best = value;
      best_lambda = static_cast<int>(lambda);
    }
  }
  result.lambda_star = best_lambda;
  const double n = static_cast<double>(total_samples);
  result.implied_c = hi * hi * n * n * budget.epsilon * budget.epsilon /
                     (lipschitz_g * lipschitz_g * static_cast<double>(total_rounds) * log_inv_delta);
  return result;
}

std::vector<double> sample_gaussian_noise(double sigma, int dimension, Rng& rng) {
  if (sigma < 0.0) throw ValidationError("sample_gaussian_noise: sigma must be >= 0");
  if (dimension < 1) throw ValidationError("sample_gaussian_noise: dimension must be >= 1");
  std::vector<double> noise(static_cast<std::size_t>(dimension));
  for (double& z : noise) z = rng.normal(sigma);
  return noise;
}

}  // namespace wddp
