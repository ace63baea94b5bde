#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>

#include "config.hpp"
#include "errors.hpp"
#include "report.hpp"

namespace wddp {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDatasetStream = 0x64617461ULL;
constexpr std::uint64_t kSplitStream = 0x73706c69ULL;
constexpr std::uint64_t kVerifyStream = 0x76657269ULL;

}  // namespace

LoadedData load_dataset(const RunConfig& config) {
  if (!config.has_dataset()) {
    throw ValidationError("config: a dataset block (csv or synthetic) is required");
  }
  Rng master(config.master_seed);
  LoadedData data;
  double fraction = 0.8;
  if (config.csv) {
    if (!std::filesystem::exists(config.csv->path)) {
      throw ValidationError("config: dataset path does not exist: " + config.csv->path);
    }
    LoadReport report;
    data.full = load_csv(*config.csv, &report);
    fraction = config.csv->train_fraction;
    data.provenance = json{{"source", "csv"},
                           {"path", config.csv->path},
                           {"feature_names", report.feature_names},
                           {"dropped_columns", report.dropped_columns},
                           {"warnings", report.warnings}};
  } else {
    Rng data_rng = master.split(kDatasetStream);
    data.full = make_two_gaussians(*config.synthetic, data_rng);
    fraction = config.synthetic->train_fraction;
    data.provenance = json{{"source", "synthetic"},
                           {"n", config.synthetic->n},
                           {"dim", config.synthetic->dim},
                           {"separation", config.synthetic->separation},
                           {"cluster_std", config.synthetic->cluster_std},
                           {"positive_fraction", config.synthetic->positive_fraction}};
  }
  Rng split_rng = master.split(kSplitStream);
  auto [train, test] = train_test_split(data.full, fraction, split_rng);
  data.train = std::move(train);
  data.test = std::move(test);
  data.provenance["rows"] = data.full.rows;
  data.provenance["cols"] = data.full.cols;
  data.provenance["train_rows"] = data.train.rows;
  data.provenance["test_rows"] = data.test.rows;
  data.provenance["train_fraction"] = fraction;
  return data;
}

namespace {

json calibration_record(const CalibrationResult& result) {
  return json{{"epsilon", result.budget.epsilon},
              {"delta", result.budget.delta},
              {"lipschitz_g", result.params.lipschitz_g},
              {"rounds", result.params.total_rounds},
              {"samples", result.params.total_samples},
              {"sigma", result.params.sigma},
              {"implied_c", result.implied_c},
              {"lambda_star", result.lambda_star},
              {"delta_achieved", result.delta_achieved}};
}

std::filesystem::path prepare_output_dir(const RunConfig& config, const std::string& override_dir) {
  const std::filesystem::path dir = override_dir.empty() ? config.output_dir : override_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

// Sweep-shaped view of a single training run; value index 0 carries the run's
// epsilon (or a placeholder when the run is non-private).
SweepSpec single_run_spec(const RunConfig& config) {
  const auto& train = *config.train;
  SweepSpec spec;
  spec.variable = SweepVariable::epsilon;
  spec.values = {config.privacy ? config.privacy->epsilon : 1.0};
  spec.methods = {config.privacy ? Method::weighted : Method::centralized_nonprivate};
  spec.seeds = {train.seed.value_or(config.master_seed)};
  spec.delta = config.privacy ? config.privacy->delta : 0.001;
  spec.epsilon = spec.values[0];
  spec.rounds = train.rounds;
  spec.clients = train.clients;
  spec.partition = train.partition;
  spec.protocol = train.protocol;
  spec.loss = train.loss;
  spec.random_init = train.random_init;
  spec.fixed_eta = train.eta;
  spec.eta_grid = train.eta_grid;
  spec.cv_folds = train.cv_folds;
  spec.master_seed = config.master_seed;
  return spec;
}

Method single_run_method(const RunConfig& config) {
  const auto& train = *config.train;
  if (train.clients == 1) {
    return config.privacy ? Method::centralized_dp : Method::centralized_nonprivate;
  }
  return train.aggregation == Aggregation::weighted ? Method::weighted : Method::uniform;
}

}  // namespace

json cmd_calibrate(const json& config_json) {
  const RunConfig config = parse_run_config(config_json);
  if (!config.privacy) throw ValidationError("config: calibrate requires a privacy block");

  double lipschitz_g = 0.0;
  if (config.calibrate && config.calibrate->lipschitz_g) {
    lipschitz_g = *config.calibrate->lipschitz_g;
  } else if (config.train) {
    lipschitz_g = config.train->loss.make()->metadata().lipschitz_g;
  } else if (config.sweep) {
    lipschitz_g = config.sweep->loss.make()->metadata().lipschitz_g;
  } else {
    throw ValidationError("config: cannot determine lipschitz_g (set calibrate.lipschitz_g)");
  }

  std::int64_t rounds = 0;
  if (config.calibrate && config.calibrate->rounds) {
    rounds = *config.calibrate->rounds;
  } else if (config.train) {
    rounds = config.train->rounds;
  } else if (config.sweep) {
    rounds = config.sweep->rounds;
  } else {
    throw ValidationError("config: cannot determine rounds (set calibrate.rounds)");
  }

  std::int64_t samples = 0;
  if (config.calibrate && config.calibrate->samples) {
    samples = *config.calibrate->samples;
  } else if (config.has_dataset()) {
    samples = load_dataset(config).train.rows;
  } else {
    throw ValidationError("config: cannot determine samples (set calibrate.samples)");
  }

  CalibrationOptions options;
  if (config.calibrate && config.calibrate->lambda_max) options.lambda_max = *config.calibrate->lambda_max;
  if (config.calibrate && config.calibrate->tolerance) options.relative_tolerance = *config.calibrate->tolerance;
  const CalibrationResult result =
      calibrate_sigma(*config.privacy, lipschitz_g, rounds, samples, options);
  return calibration_record(result);
}

json cmd_train(const json& config_json, const std::string& out_dir) {
  const RunConfig config = parse_run_config(config_json);
  if (!config.train) throw ValidationError("config: cmd_train requires a 'train' block");
  const LoadedData data = load_dataset(config);
  const std::filesystem::path dir = prepare_output_dir(config, out_dir);

  const SweepSpec spec = single_run_spec(config);
  const Method method = single_run_method(config);
  const auto loss = spec.loss.make();

  const std::uint64_t run_seed = spec.seeds[0];
  json sigma_record;
  double sigma = 0.0;
  if (config.privacy && method != Method::centralized_nonprivate) {
    const auto calibration = cell_calibration(spec, method, data.train.rows, 0, run_seed);
    sigma = calibration->params.sigma;
    sigma_record = calibration_record(*calibration);
  }

  const double eta = spec.fixed_eta ? *spec.fixed_eta : select_eta(spec, data.train, method);

  const auto started = std::chrono::steady_clock::now();
  const TrainResult trained = train_cell(spec, data.train, *loss, method, 0, run_seed, eta, sigma,
                                         config.train->trace);
  const auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();

  const std::vector<double> theta_star = reference_optimum(spec, data.train).theta;

  SweepResult row;
  row.method = to_string(method);
  row.protocol = (method == Method::weighted || method == Method::uniform)
                     ? to_string(spec.protocol)
                     : "centralized";
  row.sweep_var = to_string(spec.variable);
  row.sweep_value = spec.values[0];
  row.seed = run_seed;
  row.eta = eta;
  row.sigma = sigma;
  row.accuracy = accuracy(trained.theta, data.test);
  row.optimal_gap = optimal_gap(trained.theta, theta_star, data.train, *loss);
  row.runtime_ms = elapsed_ms;
  row.status = "ok";

  // model.json
  write_text_file(dir / "model.json",
                  json{{"dimension", trained.theta.size()}, {"theta", trained.theta}}.dump(2) + "\n");

  // metrics.csv
  {
    std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
    if (!metrics) throw IoError("cannot open for writing: " + (dir / "metrics.csv").string());
    CsvResultWriter writer(metrics);
    writer.write_header();
    writer.write_row(row);
  }

  // provenance.json: config echo, noise record, and the exact partition.
  json provenance{{"config", config.echo},
                  {"dataset", data.provenance},
                  {"sigma", sigma_record},
                  {"eta", eta},
                  {"aggregate_noise_variance", trained.aggregate_noise_variance},
                  {"method", row.method},
                  {"protocol", row.protocol}};
  if (method == Method::weighted || method == Method::uniform) {
    provenance["partition"] =
        json::parse(build_cell_partition(spec, data.train.rows, 0, run_seed).to_json_string());
  }
  write_text_file(dir / "provenance.json", provenance.dump(2) + "\n");

  if (config.train->trace) {
    std::ofstream trace(dir / "trace.csv", std::ios::binary);
    if (!trace) throw IoError("cannot open for writing: " + (dir / "trace.csv").string());
    trace << "round,node,pooled_loss,grad_norm\n";
    for (const auto& entry : trained.trace) {
      trace << entry.round << ',' << entry.node << ',' << format_double(entry.pooled_loss) << ','
            << format_double(entry.grad_norm) << "\n";
    }
  }

  json summary = result_to_json(row);
  summary["output_dir"] = dir.string();
  return summary;
}

json cmd_sweep(const json& config_json, const std::string& out_dir, int jobs,
               bool real_csv_timing) {
  const RunConfig config = parse_run_config(config_json);
  if (!config.sweep) throw ValidationError("config: cmd_sweep requires a 'sweep' block");
  const LoadedData data = load_dataset(config);
  const std::filesystem::path dir = prepare_output_dir(config, out_dir);

  const auto wants = [&](const std::string& format) {
    return std::find(config.sweep_formats.begin(), config.sweep_formats.end(), format) !=
           config.sweep_formats.end();
  };

  std::ofstream csv;
  std::unique_ptr<CsvResultWriter> writer;
  if (wants("csv")) {
    csv.open(dir / "results.csv", std::ios::binary);
    if (!csv) throw IoError("cannot open for writing: " + (dir / "results.csv").string());
    writer = std::make_unique<CsvResultWriter>(csv, real_csv_timing);
    writer->write_header();
  }

  const std::vector<SweepResult> results =
      run_sweep(*config.sweep, data.train, data.test, jobs,
                writer ? [&writer](const SweepResult& row) { writer->write_row(row); }
                       : std::function<void(const SweepResult&)>{});
  if (writer) csv.close();

  if (wants("json")) {
    json report = sweep_report_json(config.echo, results);
    // Side report: excess-risk bounds per sweep value, when the loss carries
    // a curvature certificate and the sweep has a private method.
    const auto loss = config.sweep->loss.make();
    const LossMetadata meta = loss->metadata();
    const bool any_private =
        std::any_of(config.sweep->methods.begin(), config.sweep->methods.end(),
                    [](Method m) { return m != Method::centralized_nonprivate; });
    if (any_private && (meta.strong_convexity || meta.pl_constant)) {
      const std::vector<double> theta_star = reference_optimum(*config.sweep, data.train).theta;
      const std::vector<double> origin(static_cast<std::size_t>(loss->dimension(data.train)), 0.0);
      const double initial_gap =
          loss->value_all(origin, data.train) - loss->value_all(theta_star, data.train);
      json bounds = json::array();
      for (std::size_t v = 0; v < config.sweep->values.size(); ++v) {
        const auto calibration = cell_calibration(*config.sweep, Method::weighted,
                                                  data.train.rows, v, config.sweep->seeds[0]);
        const BoundReport side =
            theoretical_bound_report(meta, calibration->params, loss->dimension(data.train),
                                     config.sweep->rounds, initial_gap);
        bounds.push_back(json{{"sweep_value", config.sweep->values[v]},
                              {"sigma", calibration->params.sigma},
                              {"rate_constant", side.rate_constant},
                              {"used_pl", side.used_pl},
                              {"initial_gap", initial_gap},
                              {"bound_tight", side.bound_tight},
                              {"bound_loose", side.bound_loose},
                              {"ratio", side.ratio}});
      }
      report["bound_reports"] = bounds;
    }
    write_text_file(dir / "results.json", report.dump(2) + "\n");
  }

  std::size_t failed = 0;
  for (const auto& row : results) {
    if (!row.ok()) ++failed;
  }

  if (wants("svg") && failed < results.size()) {
    write_text_file(dir / "results.svg", render_sweep_svg(results));
  }

  json summary{{"cells", results.size()},
               {"failed", failed},
               {"output_dir", dir.string()}};
  if (wants("csv")) summary["csv"] = (dir / "results.csv").string();
  if (wants("json")) summary["json"] = (dir / "results.json").string();
  if (wants("svg") && failed < results.size()) summary["svg"] = (dir / "results.svg").string();

  if (failed == results.size()) {
    throw Error("all " + std::to_string(results.size()) + " sweep cells failed; see " +
                (dir / "results.csv").string());
  }
  return summary;
}

namespace {

json check_entry(const std::string& name, bool pass, const std::string& detail) {
  return json{{"name", name}, {"pass", pass}, {"detail", detail}};
}

}  // namespace

json cmd_verify(const json& config_json) {
  const RunConfig config = parse_run_config(config_json);
  LossSpec loss_spec;
  if (config.verify) {
    loss_spec = config.verify->loss;
  } else if (config.train) {
    loss_spec = config.train->loss;
  } else if (config.sweep) {
    loss_spec = config.sweep->loss;
  } else {
    throw ValidationError("config: cmd_verify requires a 'verify' (or 'train'/'sweep') block");
  }
  const int cert_samples = config.verify ? config.verify->samples : 10000;
  const int theta_samples = config.verify ? config.verify->theta_samples : 20;

  const auto loss = loss_spec.make();
  const LossMetadata meta = loss->metadata();
  const bool scalar = loss_spec.kind == LossSpec::Kind::sine_pl;

  // Certificates are checked on the configured dataset when one is given,
  // otherwise on synthetic normalized data.
  LabeledDataset data;
  if (config.has_dataset()) {
    data = load_dataset(config).full;
  } else {
    SyntheticSpec spec;
    spec.n = std::max<std::int64_t>(200, std::min<std::int64_t>(cert_samples, 5000));
    Rng data_rng = Rng(config.master_seed).split(kDatasetStream);
    data = make_two_gaussians(spec, data_rng);
  }

  Rng rng = Rng(config.master_seed).split(kVerifyStream);
  const double radius = meta.certified_radius.value_or(1.0);
  const int dim = loss->dimension(data);
  json checks = json::array();
  bool all_pass = true;

  const auto push = [&](const json& entry) {
    all_pass = all_pass && entry.at("pass").get<bool>();
    checks.push_back(entry);
  };

  // Row norms inside the unit ball (needed by the G certificate).
  if (!scalar) {
    bool pass = true;
    std::string detail = "all rows within the unit ball";
    for (std::int64_t i = 0; i < data.rows; ++i) {
      double sq = 0.0;
      for (const double v : data.row(i)) sq += v * v;
      if (std::sqrt(sq) > 1.0 + 1e-12) {
        pass = false;
        detail = "row " + std::to_string(i) + " has l2 norm " + format_double(std::sqrt(sq));
        break;
      }
    }
    push(check_entry("row_norms", pass, detail));
  }

  // Per-example gradient norm <= G.
  {
    bool pass = true;
    std::string detail = "per-example gradient norms within G = " + format_double(meta.lipschitz_g);
    std::vector<double> theta(static_cast<std::size_t>(dim));
    std::vector<double> grad(static_cast<std::size_t>(dim));
    std::vector<std::int32_t> one_index(1);
    const std::int64_t row_budget =
        std::max<std::int64_t>(1, std::min<std::int64_t>(data.rows, cert_samples));
    for (int t = 0; t < theta_samples && pass; ++t) {
      for (double& v : theta) v = rng.normal(1.0);
      double norm = 0.0;
      for (const double v : theta) norm += v * v;
      norm = std::sqrt(norm);
      const double target = rng.uniform01() * radius;
      if (norm > 0.0) {
        for (double& v : theta) v *= target / norm;
      }
      if (scalar) {
        const double slope = pl_test_function(theta[0]).second;
        if (std::abs(slope) > meta.lipschitz_g + 1e-12) {
          pass = false;
          detail = "gradient magnitude " + format_double(std::abs(slope)) + " at theta " +
                   format_double(theta[0]);
        }
        continue;
      }
      for (std::int64_t i = 0; i < row_budget; ++i) {
        one_index[0] = static_cast<std::int32_t>(i);
        loss->gradient(theta, data, one_index, grad);
        double g = 0.0;
        for (const double v : grad) g += v * v;
        g = std::sqrt(g);
        if (g > meta.lipschitz_g + 1e-12) {
          pass = false;
          detail = "per-example gradient norm " + format_double(g) + " at row " +
                   std::to_string(i) + " exceeds G = " + format_double(meta.lipschitz_g);
          break;
        }
      }
    }
    push(check_entry("per_example_lipschitz", pass, detail));
  }

  // Smoothness: ||grad(theta1) - grad(theta2)|| <= L ||theta1 - theta2||.
  {
    bool pass = true;
    std::string detail = "gradient differences within L = " + format_double(meta.smoothness_l);
    std::vector<double> theta1(static_cast<std::size_t>(dim));
    std::vector<double> theta2(static_cast<std::size_t>(dim));
    for (int t = 0; t < theta_samples && pass; ++t) {
      for (double& v : theta1) v = rng.normal(radius);
      for (double& v : theta2) v = rng.normal(radius);
      const auto g1 = loss->gradient_all(theta1, data);
      const auto g2 = loss->gradient_all(theta2, data);
      double diff_g = 0.0, diff_t = 0.0;
      for (std::size_t d = 0; d < g1.size(); ++d) {
        diff_g += (g1[d] - g2[d]) * (g1[d] - g2[d]);
        diff_t += (theta1[d] - theta2[d]) * (theta1[d] - theta2[d]);
      }
      if (std::sqrt(diff_g) > meta.smoothness_l * std::sqrt(diff_t) * (1.0 + 1e-9)) {
        pass = false;
        detail = "gradient difference " + format_double(std::sqrt(diff_g)) + " exceeds L * " +
                 format_double(std::sqrt(diff_t));
      }
    }
    push(check_entry("smoothness", pass, detail));
  }

  // Gradient against central finite differences.
  {
    bool pass = true;
    std::string detail = "analytic gradient matches central differences";
    const double step = scalar ? 1e-5 : 1e-5;
    const double tolerance = scalar ? 1e-8 : 1e-6;
    std::vector<double> theta(static_cast<std::size_t>(dim));
    for (int t = 0; t < std::min(theta_samples, 5) && pass; ++t) {
      for (double& v : theta) v = rng.uniform(-1.0, 1.0);
      const auto grad = loss->gradient_all(theta, data);
      double err_sq = 0.0, ref_sq = 0.0;
      for (int d = 0; d < dim; ++d) {
        std::vector<double> plus = theta, minus = theta;
        plus[static_cast<std::size_t>(d)] += step;
        minus[static_cast<std::size_t>(d)] -= step;
        const double fd =
            (loss->value_all(plus, data) - loss->value_all(minus, data)) / (2.0 * step);
        err_sq += (fd - grad[static_cast<std::size_t>(d)]) * (fd - grad[static_cast<std::size_t>(d)]);
        ref_sq += grad[static_cast<std::size_t>(d)] * grad[static_cast<std::size_t>(d)];
      }
      if (std::sqrt(err_sq) > tolerance * (1.0 + std::sqrt(ref_sq))) {
        pass = false;
        detail = "finite-difference mismatch " + format_double(std::sqrt(err_sq));
      }
    }
    push(check_entry("gradient_finite_difference", pass, detail));
  }

  // Gradient-dominance certificate, when one is declared.
  if (meta.strong_convexity || meta.pl_constant) {
    const double mu = meta.strong_convexity ? *meta.strong_convexity : *meta.pl_constant;
    double f_star = 0.0;
    if (!scalar) {
      const double eta = 1.0 / meta.smoothness_l;
      const NonprivateResult reference = train_centralized_nonprivate(data, *loss, 5000, eta);
      f_star = loss->value_all(reference.theta, data);
    }
    std::vector<std::pair<double, double>> box(static_cast<std::size_t>(dim),
                                               {-radius, radius});
    const PlCheckResult result =
        pl_verify(*loss, data, f_star, mu, box, std::min(cert_samples, 2000), rng);
    std::string detail = "||grad||^2 >= 2 mu (f - f*) holds at every sample, mu = " +
                         format_double(mu);
    if (!result.ok) {
      detail = "violated at theta = [";
      for (std::size_t d = 0; d < result.witness_theta.size(); ++d) {
        detail += (d ? "," : "") + format_double(result.witness_theta[d]);
      }
      detail += "]: lhs " + format_double(result.witness_lhs) + " < rhs " +
                format_double(result.witness_rhs);
    }
    push(check_entry("gradient_dominance", result.ok, detail));
  } else {
    push(check_entry("gradient_dominance", true, "no curvature certificate declared; skipped"));
  }

  return json{{"loss", loss->name()}, {"checks", checks}, {"all_pass", all_pass}};
}

}  // namespace wddp
