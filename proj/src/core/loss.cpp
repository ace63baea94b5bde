#include "loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errors.hpp"

namespace wddp {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow at either tail.
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void check_dims(std::span<const double> theta, const LabeledDataset& data) {
  if (static_cast<std::int64_t>(theta.size()) != data.cols) {
    throw ValidationError("loss: model dimension " + std::to_string(theta.size()) +
                          " does not match feature dimension " + std::to_string(data.cols));
  }
}

std::vector<std::int32_t> iota_indices(std::int64_t n) {
  std::vector<std::int32_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

double logistic_value_impl(std::span<const double> theta, const LabeledDataset& data,
                           std::span<const std::int32_t> indices) {
  check_dims(theta, data);
  if (indices.empty()) throw ValidationError("loss: empty index subset");
  double total = 0.0;
  for (const std::int32_t i : indices) {
    const double z = dot(data.row(i), theta);
    const double y = static_cast<double>(data.labels[static_cast<std::size_t>(i)]);
    total += (1.0 - y) * z + softplus(-z);
  }
  return total / static_cast<double>(indices.size());
}

void logistic_gradient_impl(std::span<const double> theta, const LabeledDataset& data,
                            std::span<const std::int32_t> indices, std::span<double> out) {
  check_dims(theta, data);
  if (indices.empty()) throw ValidationError("loss: empty index subset");
  if (out.size() != theta.size()) throw ValidationError("loss: gradient buffer size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (const std::int32_t i : indices) {
    const auto x = data.row(i);
    const double residual =
        sigmoid(dot(x, theta)) - static_cast<double>(data.labels[static_cast<std::size_t>(i)]);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += residual * x[d];
  }
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  for (double& g : out) g *= inv_n;
}

}  // namespace

double LossModel::value_all(std::span<const double> theta, const LabeledDataset& data) const {
  const auto idx = iota_indices(data.rows);
  return value(theta, data, idx);
}

std::vector<double> LossModel::gradient_all(std::span<const double> theta,
                                            const LabeledDataset& data) const {
  const auto idx = iota_indices(data.rows);
  std::vector<double> out(static_cast<std::size_t>(dimension(data)));
  gradient(theta, data, idx, out);
  return out;
}

LossMetadata LogisticLoss::metadata() const {
  LossMetadata meta;
  meta.lipschitz_g = 1.0;
  meta.smoothness_l = 0.25;
  return meta;
}

double LogisticLoss::value(std::span<const double> theta, const LabeledDataset& data,
                           std::span<const std::int32_t> indices) const {
  return logistic_value_impl(theta, data, indices);
}

void LogisticLoss::gradient(std::span<const double> theta, const LabeledDataset& data,
                            std::span<const std::int32_t> indices, std::span<double> out) const {
  logistic_gradient_impl(theta, data, indices, out);
}

RegularizedLogisticLoss::RegularizedLogisticLoss(double reg_lambda, double radius)
    : reg_lambda_(reg_lambda), radius_(radius) {
  if (!(reg_lambda > 0.0)) {
    throw ValidationError("regularized logistic: reg_lambda must be positive");
  }
  if (!(radius > 0.0)) throw ValidationError("regularized logistic: radius must be positive");
}

LossMetadata RegularizedLogisticLoss::metadata() const {
  LossMetadata meta;
  meta.lipschitz_g = 1.0 + reg_lambda_ * radius_;
  meta.smoothness_l = 0.25 + reg_lambda_;
  meta.strong_convexity = reg_lambda_;
  meta.certified_radius = radius_;
  return meta;
}

double RegularizedLogisticLoss::value(std::span<const double> theta, const LabeledDataset& data,
                                      std::span<const std::int32_t> indices) const {
  const double base = logistic_value_impl(theta, data, indices);
  double norm_sq = 0.0;
  for (const double t : theta) norm_sq += t * t;
  return base + 0.5 * reg_lambda_ * norm_sq;
}

void RegularizedLogisticLoss::gradient(std::span<const double> theta, const LabeledDataset& data,
                                       std::span<const std::int32_t> indices,
                                       std::span<double> out) const {
  logistic_gradient_impl(theta, data, indices, out);
  for (std::size_t d = 0; d < out.size(); ++d) out[d] += reg_lambda_ * theta[d];
}

SinePlLoss::SinePlLoss(double radius) : radius_(radius) {
  if (!(radius > 0.0)) throw ValidationError("sine_pl: radius must be positive");
  // Measure the gradient-dominance constant on a dense grid and keep a 5%
  // safety margin below the observed infimum of |f'|^2 / (2 (f - f*)).
  const int grid_points = 200001;
  double inf_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double t = -radius_ + 2.0 * radius_ * static_cast<double>(k) /
                                    static_cast<double>(grid_points - 1);
    const auto [f, g] = pl_test_function(t);
    if (f < 1e-12) continue;
    inf_ratio = std::min(inf_ratio, g * g / (2.0 * f));
  }
  mu_ = 0.95 * inf_ratio;
}

LossMetadata SinePlLoss::metadata() const {
  LossMetadata meta;
  meta.lipschitz_g = 2.0 * radius_ + 3.0;  // |f'(t)| <= 2|t| + 3
  meta.smoothness_l = 8.0;                 // f''(t) = 2 + 6 cos(2t) in [-4, 8]
  meta.pl_constant = mu_;
  meta.certified_radius = radius_;
  return meta;
}

double SinePlLoss::value(std::span<const double> theta, const LabeledDataset&,
                         std::span<const std::int32_t>) const {
  if (theta.size() != 1) throw ValidationError("sine_pl: scalar objective, dimension must be 1");
  return pl_test_function(theta[0]).first;
}

void SinePlLoss::gradient(std::span<const double> theta, const LabeledDataset&,
                          std::span<const std::int32_t>, std::span<double> out) const {
  if (theta.size() != 1 || out.size() != 1) {
    throw ValidationError("sine_pl: scalar objective, dimension must be 1");
  }
  out[0] = pl_test_function(theta[0]).second;
}

double logistic_loss(std::span<const double> theta, const LabeledDataset& data) {
  return LogisticLoss{}.value_all(theta, data);
}

std::vector<double> logistic_gradient(std::span<const double> theta, const LabeledDataset& data) {
  return LogisticLoss{}.gradient_all(theta, data);
}

std::pair<double, std::vector<double>> regularized_logistic(std::span<const double> theta,
                                                            const LabeledDataset& data,
                                                            double reg_lambda) {
  const RegularizedLogisticLoss loss(reg_lambda);
  return {loss.value_all(theta, data), loss.gradient_all(theta, data)};
}

std::pair<double, double> pl_test_function(double theta) {
  const double s = std::sin(theta);
  return {theta * theta + 3.0 * s * s, 2.0 * theta + 3.0 * std::sin(2.0 * theta)};
}

PlCheckResult pl_verify(const LossModel& loss, const LabeledDataset& data, double f_star,
                        double mu, std::span<const std::pair<double, double>> box, int samples,
                        Rng& rng) {
  if (samples < 1) throw ValidationError("pl_verify: samples must be >= 1");
  if (box.empty()) throw ValidationError("pl_verify: empty sample box");
  const std::size_t dim = box.size();
  std::vector<double> theta(dim);
  std::vector<double> grad(dim);
  const auto indices = [&] {
    std::vector<std::int32_t> idx(static_cast<std::size_t>(std::max<std::int64_t>(data.rows, 0)));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }();

  const int grid_count = (samples + 1) / 2;
  PlCheckResult result;
  for (int k = 0; k < samples; ++k) {
    if (k < grid_count) {
      const double t = grid_count == 1 ? 0.5
                                       : static_cast<double>(k) / static_cast<double>(grid_count - 1);
      for (std::size_t d = 0; d < dim; ++d) {
        theta[d] = box[d].first + t * (box[d].second - box[d].first);
      }
    } else {
      for (std::size_t d = 0; d < dim; ++d) theta[d] = rng.uniform(box[d].first, box[d].second);
    }
    const double f = loss.value(theta, data, indices);
    loss.gradient(theta, data, indices, grad);
    double lhs = 0.0;
    for (const double g : grad) lhs += g * g;
    const double rhs = 2.0 * mu * (f - f_star);
    if (lhs < rhs) {
      result.ok = false;
      result.witness_theta = theta;
      result.witness_lhs = lhs;
      result.witness_rhs = rhs;
      return result;
    }
  }
  result.ok = true;
  return result;
}

}  // namespace wddp
