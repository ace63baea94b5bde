#ifndef WDDP_CORE_PRIVACY_HPP
#define WDDP_CORE_PRIVACY_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "rng.hpp"

namespace wddp {

// The privacy contract of a run.
struct PrivacyBudget {
  double epsilon = 0.0;  // privacy loss bound, > 0
  double delta = 0.0;    // failure probability, in (0, 1)

  void validate() const;
};

// Parameters of the composed Gaussian mechanism: T rounds of a full-batch
// gradient query over n samples with per-example gradient norm bound G,
// perturbed by per-coordinate N(0, sigma^2) noise.
struct MechanismParams {
  double lipschitz_g = 1.0;
  std::int64_t total_rounds = 1;
  std::int64_t total_samples = 1;
  double sigma = 0.0;

  // l2 distance between the query on adjacent databases: replacing one of n
  // rows moves the averaged gradient by at most 2G/n.
  double l2_sensitivity() const { return 2.0 * lipschitz_g / static_cast<double>(total_samples); }

  // `require_noise` additionally demands sigma > 0 (a calibrated mechanism);
  // sigma == 0 is the noise-free degenerate case used by baselines.
  void validate(bool require_noise = false) const;
};

// Log-moment bound alpha(lambda) at one moment order.
struct MomentBound {
  double order_lambda = 1.0;
  double log_moment = 0.0;
};

struct CalibrationOptions {
  // Integer moment orders 1..lambda_max are searched. The grid is extended
  // automatically when the tail bound needs larger orders to reach delta
  // (exp(-lambda_max * epsilon) must fall below delta to certify anything).
  int lambda_max = 128;
  // Bisection stops when the sigma bracket is this tight (relative width).
  double relative_tolerance = 1e-3;
  // Budgets needing sigma above ceiling_factor * G are reported infeasible.
  double sigma_ceiling_factor = 1e6;
};

struct CalibrationResult {
  MechanismParams params;
  PrivacyBudget budget;
  double implied_c = 0.0;       // c such that sigma^2 = c G^2 T ln(1/delta) / (n^2 eps^2)
  double delta_achieved = 0.0;  // tail-bound delta at the returned sigma
  int lambda_star = 1;          // moment order attaining the minimum
};

// Log moment of a single noisy-gradient query: lambda (lambda+1) (2G/n)^2 / (2 sigma^2).
double per_step_log_moment(const MechanismParams& params, double order_lambda);

// The same bound as a (lambda, log moment) record.
MomentBound per_step_moment_bound(const MechanismParams& params, double order_lambda);

// T-fold composition; linear in the number of rounds. Returns +infinity if
// the value exceeds the representable range.
double composed_log_moment(const MechanismParams& params, double order_lambda);

// Tail conversion: smallest delta certifiable at budget_epsilon, minimizing
// exp(alpha(lambda) - lambda * epsilon) over the supplied moment orders.
double delta_for_epsilon(const MechanismParams& params, double budget_epsilon,
                         std::span<const double> lambda_grid);

// Moment orders {1, 2, ..., max_order}.
std::vector<double> integer_lambda_grid(int max_order);

// Smallest sigma (within options.relative_tolerance) whose tail bound meets
// the budget, found by bisection. Throws InfeasibleError when no sigma below
// the ceiling satisfies the budget.
CalibrationResult calibrate_sigma(const PrivacyBudget& budget, double lipschitz_g,
                                  std::int64_t total_rounds, std::int64_t total_samples,
                                  const CalibrationOptions& options = {});

// dimension independent N(0, sigma^2) draws; deterministic given the rng state.
std::vector<double> sample_gaussian_noise(double sigma, int dimension, Rng& rng);

}  // namespace wddp

#endif  // WDDP_CORE_PRIVACY_HPP
