#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "errors.hpp"

namespace wddp {

namespace {

constexpr std::uint64_t kPartitionStream = 0x70617274ULL;
constexpr std::uint64_t kCvStream = 0x63760000ULL;

struct ResolvedEtas {
  std::vector<double> by_method;  // parallel to spec.methods
};

double median_value(const std::vector<double>& values) {
  return values[values.size() / 2];
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::weighted: return "weighted";
    case Method::uniform: return "uniform";
    case Method::centralized_dp: return "centralized_dp";
    case Method::centralized_nonprivate: return "centralized_nonprivate";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "weighted") return Method::weighted;
  if (name == "uniform") return Method::uniform;
  if (name == "centralized_dp") return Method::centralized_dp;
  if (name == "centralized_nonprivate") return Method::centralized_nonprivate;
  throw ValidationError("unknown method: " + name);
}

const char* to_string(SweepVariable variable) {
  return variable == SweepVariable::epsilon ? "epsilon" : "u";
}

std::unique_ptr<LossModel> LossSpec::make() const {
  switch (kind) {
    case Kind::logistic: return std::make_unique<LogisticLoss>();
    case Kind::regularized_logistic:
      return std::make_unique<RegularizedLogisticLoss>(reg_lambda, radius);
    case Kind::sine_pl: return std::make_unique<SinePlLoss>(radius);
  }
  throw ValidationError("unknown loss kind");
}

std::string LossSpec::name() const { return make()->name(); }

Partition PartitionSpec::build(std::int64_t train_size, int clients, double u, Rng& rng) const {
  if (clients == 1) return partition_single(train_size);
  switch (kind) {
    case Kind::two_group: {
      const int group_a = group_a_count > 0 ? group_a_count : clients / 2;
      PartitionOptions options;
      options.min_client_size = min_client_size;
      return partition_two_group(train_size, clients, u, group_a, rng, options);
    }
    case Kind::random_sizes: return partition_random(train_size, clients, min_client_size, rng);
    case Kind::single: return partition_single(train_size);
  }
  throw ValidationError("unknown partition kind");
}

void SweepSpec::validate() const {
  if (values.empty()) throw ValidationError("sweep: value list must be non-empty");
  if (!std::is_sorted(values.begin(), values.end())) {
    throw ValidationError("sweep: value list must be sorted ascending");
  }
  if (methods.empty()) throw ValidationError("sweep: methods list must be non-empty");
  if (seeds.empty()) throw ValidationError("sweep: seeds list must be non-empty");
  std::vector<std::uint64_t> sorted_seeds = seeds;
  std::sort(sorted_seeds.begin(), sorted_seeds.end());
  if (std::adjacent_find(sorted_seeds.begin(), sorted_seeds.end()) != sorted_seeds.end()) {
    throw ValidationError("sweep: seeds must be distinct");
  }
  if (rounds < 1) throw ValidationError("sweep: rounds must be >= 1");
  if (clients < 1) throw ValidationError("sweep: clients must be >= 1");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ValidationError("sweep: delta must lie in (0,1)");
  if (variable == SweepVariable::epsilon) {
    for (const double v : values) {
      if (!(v > 0.0)) throw ValidationError("sweep: epsilon values must be positive");
    }
  } else {
    if (!(epsilon > 0.0)) throw ValidationError("sweep: fixed epsilon must be positive");
    for (const double v : values) {
      if (!(v >= 1.0)) throw ValidationError("sweep: u values must be >= 1");
    }
  }
  if (!fixed_eta && eta_grid.empty()) {
    throw ValidationError("sweep: need eta_grid when eta is cross-validated");
  }
  if (cv_folds < 2) throw ValidationError("sweep: cv_folds must be >= 2");
}

double accuracy(std::span<const double> theta, const LabeledDataset& test) {
  if (test.rows == 0) throw ValidationError("accuracy: empty test set");
  if (static_cast<std::int64_t>(theta.size()) != test.cols) {
    throw ValidationError("accuracy: dimension mismatch");
  }
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < test.rows; ++i) {
    const auto x = test.row(i);
    double z = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) z += x[d] * theta[d];
    const int predicted = z >= 0.0 ? 1 : 0;
    if (predicted == test.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.rows);
}

double optimal_gap(std::span<const double> theta, std::span<const double> theta_star,
                   const LabeledDataset& train, const LossModel& loss) {
  const double gap = loss.value_all(theta, train) - loss.value_all(theta_star, train);
  if (gap < -1e-6) {
    std::cerr << "warning: optimal gap " << gap
              << " is negative; the reference optimum has not converged\n";
  }
  return gap;
}

BoundReport theoretical_bound_report(const LossMetadata& meta, const MechanismParams& mech,
                                     int dimension, std::int64_t rounds, double initial_gap) {
  if (dimension < 1) throw ValidationError("bound report: dimension must be >= 1");
  if (rounds < 0) throw ValidationError("bound report: rounds must be >= 0");
  BoundReport report;
  if (meta.strong_convexity) {
    report.rate_constant = *meta.strong_convexity;
    report.used_pl = false;
  } else if (meta.pl_constant) {
    report.rate_constant = *meta.pl_constant;
    report.used_pl = true;
  } else {
    throw ValidationError(
        "bound report: loss certifies neither strong convexity nor a PL constant");
  }
  const double rate = report.rate_constant;
  const double smooth = meta.smoothness_l;
  if (!(rate > 0.0) || rate > smooth) {
    throw ValidationError("bound report: rate constant must lie in (0, L]");
  }
  const double p = static_cast<double>(dimension);
  const double sigma_sq = mech.sigma * mech.sigma;
  const double contraction = 1.0 - rate / smooth;
  const double decay_factor = std::pow(contraction, static_cast<double>(rounds));
  report.decay_term = decay_factor * initial_gap;
  report.noise_term_tight = p * sigma_sq / (2.0 * rate) * (1.0 - decay_factor);
  report.noise_term_loose = static_cast<double>(rounds) * p * sigma_sq / (2.0 * smooth);
  report.bound_tight = report.decay_term + report.noise_term_tight;
  report.bound_loose = report.decay_term + report.noise_term_loose;
  report.ratio = report.bound_tight > 0.0 ? report.bound_loose / report.bound_tight : 1.0;
  return report;
}

NonprivateResult reference_optimum(const SweepSpec& spec, const LabeledDataset& train) {
  const auto loss = spec.loss.make();
  const double eta = 1.0 / loss->metadata().smoothness_l;
  const std::int64_t rounds =
      spec.reference_rounds > 0 ? spec.reference_rounds : 10 * spec.rounds;
  NonprivateResult reference = train_centralized_nonprivate(train, *loss, rounds, eta);
  if (!reference.converged) {
    std::cerr << "warning: reference optimum gradient norm " << reference.final_grad_norm
              << " > 1e-6 after " << rounds << " rounds\n";
  }
  return reference;
}

namespace {

struct CellContext {
  const SweepSpec& spec;
  const LabeledDataset& train;
  const LabeledDataset& test;
  const LossModel& loss;
  std::vector<double> theta_star;
  ResolvedEtas etas;
};

double cell_epsilon(const SweepSpec& spec, double value) {
  return spec.variable == SweepVariable::epsilon ? value : spec.epsilon;
}

double cell_u(const SweepSpec& spec, double value) {
  return spec.variable == SweepVariable::non_average_u ? value : spec.partition.non_average_u;
}

// The sample count the budget is enforced against: pooled n for the weighted
// query, m * n_min for the uniform one (its worst-case per-record influence).
std::int64_t effective_samples(const SweepSpec& spec, Method method, std::int64_t train_rows,
                               double u, std::uint64_t raw_seed) {
  if (method != Method::uniform || spec.clients <= 1) return train_rows;
  Rng partition_rng = Rng(raw_seed).split(kPartitionStream);
  const Partition partition = spec.partition.build(train_rows, spec.clients, u, partition_rng);
  const std::int64_t n_min =
      *std::min_element(partition.client_sizes.begin(), partition.client_sizes.end());
  return static_cast<std::int64_t>(spec.clients) * n_min;
}

std::optional<CalibrationResult> calibration_for(const SweepSpec& spec, const LossModel& loss,
                                                 Method method, double eps,
                                                 std::int64_t train_rows, double u,
                                                 std::uint64_t raw_seed) {
  if (method == Method::centralized_nonprivate) return std::nullopt;
  const std::int64_t n = effective_samples(spec, method, train_rows, u, raw_seed);
  const PrivacyBudget budget{eps, spec.delta};
  return calibrate_sigma(budget, loss.metadata().lipschitz_g, spec.rounds, n);
}

// Trains one configuration from a raw stream seed.
TrainResult train_with_seed(const SweepSpec& spec, const LabeledDataset& train,
                            const LossModel& loss, Method method, double u, double eta,
                            double sigma, std::uint64_t raw_seed, bool want_trace) {
  TrainingConfig config;
  config.rounds = spec.rounds;
  config.learning_rate = eta;
  config.protocol = spec.protocol;
  config.projection_radius = loss.metadata().certified_radius;
  config.random_init = spec.random_init;
  config.seed = raw_seed;

  switch (method) {
    case Method::weighted:
    case Method::uniform: {
      config.aggregation = method == Method::weighted ? Aggregation::weighted : Aggregation::uniform;
      Rng partition_rng = Rng(raw_seed).split(kPartitionStream);
      const Partition partition = spec.partition.build(train.rows, spec.clients, u, partition_rng);
      return train_distributed(train, partition, loss, config, sigma, want_trace);
    }
    case Method::centralized_dp:
      return train_centralized_dp(train, loss, config, sigma, want_trace);
    case Method::centralized_nonprivate:
      // Plain gradient descent, expressed as the noise-free single-party run
      // so traces come out of the same machinery.
      config.random_init = false;
      return train_centralized_dp(train, loss, config, /*sigma=*/0.0, want_trace);
  }
  throw ValidationError("unknown method");
}

SweepResult run_cell(const CellContext& ctx, std::size_t method_idx, std::size_t value_idx,
                     std::size_t seed_idx) {
  const Method method = ctx.spec.methods[method_idx];
  const double value = ctx.spec.values[value_idx];
  const std::uint64_t seed = ctx.spec.seeds[seed_idx];

  SweepResult row;
  row.method = to_string(method);
  row.protocol = (method == Method::weighted || method == Method::uniform)
                     ? to_string(ctx.spec.protocol)
                     : "centralized";
  row.sweep_var = to_string(ctx.spec.variable);
  row.sweep_value = value;
  row.seed = seed;

  const std::int64_t started = now_ms();
  try {
    const auto calibration =
        cell_calibration(ctx.spec, method, ctx.train.rows, value_idx, seed);
    const double sigma = calibration ? calibration->params.sigma : 0.0;
    const double eta = ctx.etas.by_method[method_idx];
    const std::vector<double> theta =
        train_cell(ctx.spec, ctx.train, ctx.loss, method, value_idx, seed, eta, sigma).theta;
    row.eta = eta;
    row.sigma = sigma;
    row.accuracy = accuracy(theta, ctx.test);
    row.optimal_gap = optimal_gap(theta, ctx.theta_star, ctx.train, ctx.loss);
    row.status = "ok";
  } catch (const std::exception& error) {
    std::string message = error.what();
    std::replace(message.begin(), message.end(), ',', ';');
    std::replace(message.begin(), message.end(), '\n', ' ');
    row.status = std::string("error: ") + message;
  }
  row.runtime_ms = now_ms() - started;
  return row;
}

}  // namespace

double select_eta(const SweepSpec& spec, const LabeledDataset& train, Method method) {
  if (spec.fixed_eta) return *spec.fixed_eta;

  // Cross-validate at the median sweep value so model selection never sees
  // the swept parameter's extremes.
  const double value = median_value(spec.values);
  const double eps = cell_epsilon(spec, value);
  const double u = cell_u(spec, value);
  const auto loss = spec.loss.make();

  Rng cv_root = Rng(spec.master_seed).split(kCvStream);
  std::vector<std::int32_t> order(static_cast<std::size_t>(train.rows));
  std::iota(order.begin(), order.end(), 0);
  cv_root.shuffle(order);

  const int folds = spec.cv_folds;
  double best_eta = spec.eta_grid.front();
  double best_score = -1.0;
  for (const double eta : spec.eta_grid) {
    double score_sum = 0.0;
    for (int fold = 0; fold < folds; ++fold) {
      const std::size_t begin = static_cast<std::size_t>(train.rows) * static_cast<std::size_t>(fold) /
                                static_cast<std::size_t>(folds);
      const std::size_t end = static_cast<std::size_t>(train.rows) *
                              (static_cast<std::size_t>(fold) + 1) / static_cast<std::size_t>(folds);
      std::vector<std::int32_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                        order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::int32_t> fit_idx;
      fit_idx.reserve(order.size() - val_idx.size());
      fit_idx.insert(fit_idx.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(begin));
      fit_idx.insert(fit_idx.end(), order.begin() + static_cast<std::ptrdiff_t>(end), order.end());
      const LabeledDataset fit = take_rows(train, fit_idx);
      const LabeledDataset val = take_rows(train, val_idx);

      const std::uint64_t fold_seed =
          mix_seed(spec.master_seed, mix_seed(kCvStream, static_cast<std::uint64_t>(fold)));
      const auto calibration =
          calibration_for(spec, *loss, method, eps, fit.rows, u, fold_seed);
      const double sigma = calibration ? calibration->params.sigma : 0.0;
      const std::vector<double> theta =
          train_with_seed(spec, fit, *loss, method, u, eta, sigma, fold_seed, false).theta;
      score_sum += accuracy(theta, val);
    }
    const double score = score_sum / static_cast<double>(folds);
    if (score > best_score + 1e-12) {
      best_score = score;
      best_eta = eta;
    }
  }
  return best_eta;
}

std::vector<SweepResult> run_sweep(const SweepSpec& spec, const LabeledDataset& train,
                                   const LabeledDataset& test, int jobs,
                                   const std::function<void(const SweepResult&)>& on_row) {
  spec.validate();
  const auto loss = spec.loss.make();

  CellContext ctx{spec, train, test, *loss, {}, {}};
  ctx.theta_star = reference_optimum(spec, train).theta;

  ctx.etas.by_method.reserve(spec.methods.size());
  for (const Method method : spec.methods) {
    ctx.etas.by_method.push_back(select_eta(spec, train, method));
  }

  const std::size_t cell_count = spec.methods.size() * spec.values.size() * spec.seeds.size();
  std::vector<SweepResult> results(cell_count);
  std::vector<char> done(cell_count, 0);
  std::mutex mutex;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cell_count) return;
      const std::size_t per_method = spec.values.size() * spec.seeds.size();
      const std::size_t method_idx = i / per_method;
      const std::size_t value_idx = (i % per_method) / spec.seeds.size();
      const std::size_t seed_idx = i % spec.seeds.size();
      SweepResult row = run_cell(ctx, method_idx, value_idx, seed_idx);
      {
        std::lock_guard<std::mutex> lock(mutex);
        results[i] = std::move(row);
        done[i] = 1;
      }
      cv.notify_all();
    }
  };

  const int worker_count = std::max(1, jobs);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(worker_count));
  for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);

  // Emit rows in canonical order as they complete. Workers are joined before
  // an emission failure propagates.
  std::exception_ptr emit_error;
  if (on_row) {
    try {
      for (std::size_t i = 0; i < cell_count; ++i) {
        std::unique_lock<std::mutex> lock(mutex);
        cv.wait(lock, [&] { return done[i] != 0; });
        const SweepResult row = results[i];
        lock.unlock();
        on_row(row);
      }
    } catch (...) {
      emit_error = std::current_exception();
      next.store(cell_count);
    }
  }
  for (auto& thread : pool) thread.join();
  if (emit_error) std::rethrow_exception(emit_error);
  return results;
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t value_idx, std::uint64_t seed) {
  return mix_seed(master_seed, mix_seed(static_cast<std::uint64_t>(value_idx) + 1, seed));
}

std::optional<CalibrationResult> cell_calibration(const SweepSpec& spec, Method method,
                                                  std::int64_t train_rows, std::size_t value_idx,
                                                  std::uint64_t seed) {
  const auto loss = spec.loss.make();
  const double value = spec.values.at(value_idx);
  return calibration_for(spec, *loss, method, cell_epsilon(spec, value), train_rows,
                         cell_u(spec, value), cell_seed(spec.master_seed, value_idx, seed));
}

Partition build_cell_partition(const SweepSpec& spec, std::int64_t train_rows,
                               std::size_t value_idx, std::uint64_t seed) {
  Rng partition_rng = Rng(cell_seed(spec.master_seed, value_idx, seed)).split(kPartitionStream);
  return spec.partition.build(train_rows, spec.clients,
                              cell_u(spec, spec.values.at(value_idx)), partition_rng);
}

TrainResult train_cell(const SweepSpec& spec, const LabeledDataset& train, const LossModel& loss,
                       Method method, std::size_t value_idx, std::uint64_t seed, double eta,
                       double sigma, bool want_trace) {
  const double u = cell_u(spec, spec.values.at(value_idx));
  return train_with_seed(spec, train, loss, method, u, eta, sigma,
                         cell_seed(spec.master_seed, value_idx, seed), want_trace);
}

}  // namespace wddp
