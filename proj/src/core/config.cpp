#include "config.hpp"

#include <algorithm>
#include <set>

#include "errors.hpp"

namespace wddp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

const json& require(const json& node, const std::string& key, const std::string& path) {
  if (!node.contains(key)) fail(path, "missing required field '" + key + "'");
  return node.at(key);
}

double number_at(const json& node, const std::string& key, const std::string& path) {
  const json& value = require(node, key, path);
  if (!value.is_number()) fail(path + "." + key, "expected a number");
  return value.get<double>();
}

double number_or(const json& node, const std::string& key, double fallback) {
  return node.contains(key) ? node.at(key).get<double>() : fallback;
}

std::int64_t integer_or(const json& node, const std::string& key, std::int64_t fallback) {
  if (!node.contains(key)) return fallback;
  if (!node.at(key).is_number_integer()) {
    fail(key, "expected an integer");
  }
  return node.at(key).get<std::int64_t>();
}

std::string string_at(const json& node, const std::string& key, const std::string& path) {
  const json& value = require(node, key, path);
  if (!value.is_string()) fail(path + "." + key, "expected a string");
  return value.get<std::string>();
}

void check_keys(const json& node, const std::set<std::string>& allowed, const std::string& path) {
  if (!node.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : node.items()) {
    if (allowed.find(key) == allowed.end()) fail(path, "unknown field '" + key + "'");
  }
}

CsvSpec parse_csv_spec(const json& node, const std::string& path) {
  check_keys(node,
             {"path", "label_column", "positive_label", "categorical_columns", "minmax_columns",
              "delimiter", "train_fraction", "normalize_rows"},
             path);
  CsvSpec spec;
  spec.path = string_at(node, "path", path);
  spec.label_column = string_at(node, "label_column", path);
  spec.positive_label = string_at(node, "positive_label", path);
  if (node.contains("categorical_columns")) {
    spec.categorical_columns = node.at("categorical_columns").get<std::vector<std::string>>();
  }
  if (node.contains("minmax_columns") && !node.at("minmax_columns").is_null()) {
    spec.minmax_columns = node.at("minmax_columns").get<std::vector<std::string>>();
  }
  if (node.contains("delimiter")) {
    const std::string d = node.at("delimiter").get<std::string>();
    if (d.size() != 1) fail(path + ".delimiter", "expected a single character");
    spec.delimiter = d[0];
  }
  spec.train_fraction = number_or(node, "train_fraction", 0.8);
  if (node.contains("normalize_rows")) spec.normalize_rows = node.at("normalize_rows").get<bool>();
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    fail(path + ".train_fraction", "must lie in (0, 1)");
  }
  return spec;
}

SyntheticSpec parse_synthetic_spec(const json& node, const std::string& path) {
  check_keys(node,
             {"n", "dim", "separation", "cluster_std", "positive_fraction", "train_fraction"},
             path);
  SyntheticSpec spec;
  spec.n = integer_or(node, "n", spec.n);
  spec.dim = static_cast<int>(integer_or(node, "dim", spec.dim));
  spec.separation = number_or(node, "separation", spec.separation);
  spec.cluster_std = number_or(node, "cluster_std", spec.cluster_std);
  spec.positive_fraction = number_or(node, "positive_fraction", spec.positive_fraction);
  spec.train_fraction = number_or(node, "train_fraction", spec.train_fraction);
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    fail(path + ".train_fraction", "must lie in (0, 1)");
  }
  return spec;
}

LossSpec parse_loss_spec(const json& node, const std::string& path) {
  if (!node.is_object() || node.size() != 1) {
    fail(path, "expected exactly one loss family key");
  }
  LossSpec spec;
  const auto entry = node.begin();
  const std::string& family = entry.key();
  const json& body = entry.value();
  if (family == "logistic") {
    check_keys(body, {}, path + ".logistic");
    spec.kind = LossSpec::Kind::logistic;
  } else if (family == "regularized_logistic") {
    check_keys(body, {"lambda", "radius"}, path + ".regularized_logistic");
    spec.kind = LossSpec::Kind::regularized_logistic;
    spec.reg_lambda = number_at(body, "lambda", path + ".regularized_logistic");
    spec.radius = number_or(body, "radius", 10.0);
  } else if (family == "sine_pl") {
    check_keys(body, {"radius"}, path + ".sine_pl");
    spec.kind = LossSpec::Kind::sine_pl;
    spec.radius = number_or(body, "radius", 10.0);
  } else {
    fail(path, "unknown loss family '" + family + "'");
  }
  return spec;
}

PartitionSpec parse_partition_spec(const json& node, const std::string& path) {
  if (!node.is_object() || node.size() != 1) {
    fail(path, "expected exactly one partition kind key");
  }
  PartitionSpec spec;
  const auto entry = node.begin();
  const std::string& kind = entry.key();
  const json& body = entry.value();
  if (kind == "two_group") {
    check_keys(body, {"u", "group_a_count", "min_client_size"}, path + ".two_group");
    spec.kind = PartitionSpec::Kind::two_group;
    spec.non_average_u = number_or(body, "u", 1.0);
    spec.group_a_count = static_cast<int>(integer_or(body, "group_a_count", 0));
    spec.min_client_size = integer_or(body, "min_client_size", 10);
  } else if (kind == "random") {
    check_keys(body, {"min_client_size"}, path + ".random");
    spec.kind = PartitionSpec::Kind::random_sizes;
    spec.min_client_size = integer_or(body, "min_client_size", 10);
  } else if (kind == "single") {
    check_keys(body, {}, path + ".single");
    spec.kind = PartitionSpec::Kind::single;
  } else {
    fail(path, "unknown partition kind '" + kind + "'");
  }
  return spec;
}

Aggregation parse_aggregation(const std::string& name, const std::string& path) {
  if (name == "weighted") return Aggregation::weighted;
  if (name == "uniform") return Aggregation::uniform;
  fail(path, "aggregation must be 'weighted' or 'uniform'");
}

Protocol parse_protocol(const std::string& name, const std::string& path) {
  if (name == "sync_every_round") return Protocol::sync_every_round;
  if (name == "local_then_aggregate") return Protocol::local_then_aggregate;
  fail(path, "protocol must be 'sync_every_round' or 'local_then_aggregate'");
}

// eta: either a number or the string "cv".
std::optional<double> parse_eta(const json& node, const std::string& path) {
  if (!node.contains("eta")) return std::nullopt;
  const json& eta = node.at("eta");
  if (eta.is_string()) {
    if (eta.get<std::string>() != "cv") fail(path + ".eta", "expected a number or \"cv\"");
    return std::nullopt;
  }
  if (!eta.is_number()) fail(path + ".eta", "expected a number or \"cv\"");
  const double value = eta.get<double>();
  if (!(value > 0.0)) fail(path + ".eta", "must be positive");
  return value;
}

}  // namespace

RunConfig parse_run_config(const json& document) {
  check_keys(document,
             {"seed", "output_dir", "dataset", "privacy", "calibrate", "train", "sweep", "verify"},
             "config");
  RunConfig config;
  config.echo = document;
  config.master_seed = static_cast<std::uint64_t>(integer_or(document, "seed", 0));
  if (document.contains("output_dir")) {
    config.output_dir = document.at("output_dir").get<std::string>();
  }

  if (document.contains("dataset")) {
    const json& dataset = document.at("dataset");
    check_keys(dataset, {"csv", "synthetic"}, "config.dataset");
    if (dataset.contains("csv") == dataset.contains("synthetic")) {
      fail("config.dataset", "expected exactly one of 'csv' or 'synthetic'");
    }
    if (dataset.contains("csv")) {
      config.csv = parse_csv_spec(dataset.at("csv"), "config.dataset.csv");
    } else {
      config.synthetic = parse_synthetic_spec(dataset.at("synthetic"), "config.dataset.synthetic");
    }
  }

  if (document.contains("privacy")) {
    const json& privacy = document.at("privacy");
    check_keys(privacy, {"epsilon", "delta"}, "config.privacy");
    PrivacyBudget budget;
    budget.epsilon = number_at(privacy, "epsilon", "config.privacy");
    budget.delta = number_at(privacy, "delta", "config.privacy");
    budget.validate();
    config.privacy = budget;
  }

  if (document.contains("calibrate")) {
    const json& block = document.at("calibrate");
    check_keys(block, {"lipschitz_g", "rounds", "samples", "lambda_max", "tolerance"},
               "config.calibrate");
    RunConfig::CalibrateBlock calibrate;
    if (block.contains("lipschitz_g")) calibrate.lipschitz_g = block.at("lipschitz_g").get<double>();
    if (block.contains("rounds")) calibrate.rounds = block.at("rounds").get<std::int64_t>();
    if (block.contains("samples")) calibrate.samples = block.at("samples").get<std::int64_t>();
    if (block.contains("lambda_max")) calibrate.lambda_max = block.at("lambda_max").get<int>();
    if (block.contains("tolerance")) calibrate.tolerance = block.at("tolerance").get<double>();
    config.calibrate = calibrate;
  }

  if (document.contains("train") && document.contains("sweep")) {
    fail("config", "'train' and 'sweep' blocks are mutually exclusive");
  }

  if (document.contains("train")) {
    const json& block = document.at("train");
    check_keys(block,
               {"rounds", "eta", "eta_grid", "cv_folds", "clients", "partition", "aggregation",
                "protocol", "loss", "random_init", "trace", "seed"},
               "config.train");
    RunConfig::TrainBlock train;
    train.rounds = integer_or(block, "rounds", 1000);
    train.eta = parse_eta(block, "config.train");
    if (block.contains("eta_grid")) train.eta_grid = block.at("eta_grid").get<std::vector<double>>();
    train.cv_folds = static_cast<int>(integer_or(block, "cv_folds", 3));
    train.clients = static_cast<int>(integer_or(block, "clients", 1));
    if (block.contains("partition")) {
      train.partition = parse_partition_spec(block.at("partition"), "config.train.partition");
    } else {
      train.partition.kind = PartitionSpec::Kind::single;
    }
    if (block.contains("aggregation")) {
      train.aggregation = parse_aggregation(block.at("aggregation").get<std::string>(),
                                            "config.train.aggregation");
    }
    if (block.contains("protocol")) {
      train.protocol =
          parse_protocol(block.at("protocol").get<std::string>(), "config.train.protocol");
    }
    if (block.contains("loss")) train.loss = parse_loss_spec(block.at("loss"), "config.train.loss");
    if (block.contains("random_init")) train.random_init = block.at("random_init").get<bool>();
    if (block.contains("trace")) train.trace = block.at("trace").get<bool>();
    if (block.contains("seed")) train.seed = block.at("seed").get<std::uint64_t>();
    if (train.rounds < 1) fail("config.train.rounds", "must be >= 1");
    if (train.clients < 1) fail("config.train.clients", "must be >= 1");
    config.train = train;
  }

  if (document.contains("sweep")) {
    const json& block = document.at("sweep");
    check_keys(block,
               {"variable", "values", "methods", "seeds", "rounds", "clients", "partition",
                "protocol", "loss", "eta", "eta_grid", "cv_folds", "random_init",
                "reference_rounds", "formats"},
               "config.sweep");
    SweepSpec sweep;
    const std::string variable = string_at(block, "variable", "config.sweep");
    if (variable == "epsilon") {
      sweep.variable = SweepVariable::epsilon;
    } else if (variable == "u") {
      sweep.variable = SweepVariable::non_average_u;
    } else {
      fail("config.sweep.variable", "must be 'epsilon' or 'u'");
    }
    sweep.values = require(block, "values", "config.sweep").get<std::vector<double>>();
    for (const auto& name : require(block, "methods", "config.sweep")) {
      sweep.methods.push_back(method_from_string(name.get<std::string>()));
    }
    sweep.seeds = require(block, "seeds", "config.sweep").get<std::vector<std::uint64_t>>();
    sweep.rounds = integer_or(block, "rounds", 1000);
    sweep.clients = static_cast<int>(integer_or(block, "clients", 16));
    if (block.contains("partition")) {
      sweep.partition = parse_partition_spec(block.at("partition"), "config.sweep.partition");
    }
    if (block.contains("protocol")) {
      sweep.protocol =
          parse_protocol(block.at("protocol").get<std::string>(), "config.sweep.protocol");
    }
    if (block.contains("loss")) sweep.loss = parse_loss_spec(block.at("loss"), "config.sweep.loss");
    sweep.fixed_eta = parse_eta(block, "config.sweep");
    if (block.contains("eta_grid")) {
      sweep.eta_grid = block.at("eta_grid").get<std::vector<double>>();
    }
    sweep.cv_folds = static_cast<int>(integer_or(block, "cv_folds", 3));
    if (block.contains("random_init")) sweep.random_init = block.at("random_init").get<bool>();
    sweep.reference_rounds = integer_or(block, "reference_rounds", 0);
    if (block.contains("formats")) {
      config.sweep_formats = block.at("formats").get<std::vector<std::string>>();
      for (const auto& format : config.sweep_formats) {
        if (format != "csv" && format != "json" && format != "svg") {
          fail("config.sweep.formats", "unknown format '" + format + "'");
        }
      }
    }
    sweep.master_seed = config.master_seed;
    const bool any_private =
        std::any_of(sweep.methods.begin(), sweep.methods.end(),
                    [](Method m) { return m != Method::centralized_nonprivate; });
    if (config.privacy) {
      sweep.epsilon = config.privacy->epsilon;
      sweep.delta = config.privacy->delta;
    } else if (any_private) {
      fail("config", "a sweep with private methods requires a privacy block");
    }
    sweep.validate();
    config.sweep = sweep;
  }

  if (document.contains("verify")) {
    const json& block = document.at("verify");
    check_keys(block, {"loss", "samples", "theta_samples"}, "config.verify");
    RunConfig::VerifyBlock verify;
    verify.loss = parse_loss_spec(require(block, "loss", "config.verify"), "config.verify.loss");
    verify.samples = static_cast<int>(integer_or(block, "samples", 10000));
    verify.theta_samples = static_cast<int>(integer_or(block, "theta_samples", 20));
    if (verify.samples < 1) fail("config.verify.samples", "must be >= 1");
    config.verify = verify;
  }

  return config;
}

RunConfig parse_run_config_text(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::exception& error) {
    throw ParseError(std::string("config is not valid JSON: ") + error.what());
  }
  return parse_run_config(document);
}

}  // namespace wddp
