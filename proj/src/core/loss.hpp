#ifndef WDDP_CORE_LOSS_HPP
#define WDDP_CORE_LOSS_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "rng.hpp"

namespace wddp {

// Certified analytic constants of a loss family. strong_convexity and
// pl_constant are alternative certificates; either one feeds the
// excess-risk bound reports.
struct LossMetadata {
  double lipschitz_g = 1.0;   // per-example gradient norm bound
  double smoothness_l = 0.25; // gradient Lipschitz constant
  std::optional<double> strong_convexity;
  std::optional<double> pl_constant;
  std::optional<double> certified_radius;  // G holds on the ball of this radius
};

// Loss evaluator over a dataset or an index subset of it (a client shard).
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::string name() const = 0;
  virtual LossMetadata metadata() const = 0;
  virtual int dimension(const LabeledDataset& data) const {
    return static_cast<int>(data.cols);
  }

  virtual double value(std::span<const double> theta, const LabeledDataset& data,
                       std::span<const std::int32_t> indices) const = 0;
  virtual void gradient(std::span<const double> theta, const LabeledDataset& data,
                        std::span<const std::int32_t> indices,
                        std::span<double> out) const = 0;

  // Full-batch conveniences.
  double value_all(std::span<const double> theta, const LabeledDataset& data) const;
  std::vector<double> gradient_all(std::span<const double> theta,
                                   const LabeledDataset& data) const;
};

// Binary cross-entropy of the sigmoid model, evaluated in the log domain so
// saturated examples never produce infinities. Per-example gradient is
// x (h(x.theta) - y), norm at most 1 on the unit ball.
class LogisticLoss : public LossModel {
 public:
  std::string name() const override { return "logistic"; }
  LossMetadata metadata() const override;
  double value(std::span<const double> theta, const LabeledDataset& data,
               std::span<const std::int32_t> indices) const override;
  void gradient(std::span<const double> theta, const LabeledDataset& data,
                std::span<const std::int32_t> indices, std::span<double> out) const override;
};

// Logistic loss plus (reg_lambda/2) ||theta||^2: reg_lambda-strongly convex,
// (1/4 + reg_lambda)-smooth, and G = 1 + reg_lambda * radius on the declared
// ball (the trainer projects onto it).
class RegularizedLogisticLoss : public LossModel {
 public:
  explicit RegularizedLogisticLoss(double reg_lambda, double radius = 10.0);

  std::string name() const override { return "regularized_logistic"; }
  LossMetadata metadata() const override;
  double value(std::span<const double> theta, const LabeledDataset& data,
               std::span<const std::int32_t> indices) const override;
  void gradient(std::span<const double> theta, const LabeledDataset& data,
                std::span<const std::int32_t> indices, std::span<double> out) const override;

  double reg_lambda() const { return reg_lambda_; }

 private:
  double reg_lambda_;
  double radius_;
};

// Scalar non-convex test objective f(t) = t^2 + 3 sin^2(t), minimum 0 at 0.
// It satisfies the gradient-dominance inequality |f'|^2 >= 2 mu (f - f*); mu
// is measured numerically on [-radius, radius] at construction rather than
// claimed analytically. Ignores the dataset.
class SinePlLoss : public LossModel {
 public:
  explicit SinePlLoss(double radius = 10.0);

  std::string name() const override { return "sine_pl"; }
  LossMetadata metadata() const override;
  int dimension(const LabeledDataset&) const override { return 1; }
  double value(std::span<const double> theta, const LabeledDataset&,
               std::span<const std::int32_t>) const override;
  void gradient(std::span<const double> theta, const LabeledDataset&,
                std::span<const std::int32_t>, std::span<double> out) const override;

  double radius() const { return radius_; }

 private:
  double radius_;
  double mu_;
};

double logistic_loss(std::span<const double> theta, const LabeledDataset& data);
std::vector<double> logistic_gradient(std::span<const double> theta, const LabeledDataset& data);

// (loss, gradient) of the reg_lambda-regularized logistic objective.
std::pair<double, std::vector<double>> regularized_logistic(std::span<const double> theta,
                                                            const LabeledDataset& data,
                                                            double reg_lambda);

// (value, derivative) of the scalar test objective above.
std::pair<double, double> pl_test_function(double theta);

struct PlCheckResult {
  bool ok = false;
  std::vector<double> witness_theta;  // first falsifying point when !ok
  double witness_lhs = 0.0;           // ||grad||^2 at the witness
  double witness_rhs = 0.0;           // 2 mu (f - f*) at the witness
};

// Samples the box (half evenly along its diagonal, half uniformly at random)
// and checks ||grad f||^2 >= 2 mu (f - f_star) everywhere.
PlCheckResult pl_verify(const LossModel& loss, const LabeledDataset& data, double f_star,
                        double mu, std::span<const std::pair<double, double>> box, int samples,
                        Rng& rng);

}  // namespace wddp

#endif  // WDDP_CORE_LOSS_HPP
