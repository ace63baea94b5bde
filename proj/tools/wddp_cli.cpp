// Command-line front end. Links only the public C API; configuration files
// are JSON documents whose schema is described in the README. Flags override
// config fields and every flag can also come from a WDDP_-prefixed
// environment variable.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wddp/wddp.h"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string seed;
  int jobs = 0;
  std::vector<std::string> formats;
  std::vector<std::string> overrides;  // key.path=json_value
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonOptions& options, bool with_sweep_flags) {
  cmd->add_option("--config", options.config_path, "Path to the JSON run configuration")
      ->required()
      ->envname("WDDP_CONFIG");
  cmd->add_option("--out", options.out_dir, "Output directory (overrides config output_dir)")
      ->envname("WDDP_OUT");
  cmd->add_option("--seed", options.seed, "Master seed (overrides config seed)")
      ->envname("WDDP_SEED");
  cmd->add_option("--set", options.overrides,
                  "Override a config field, e.g. --set train.rounds=500 (repeatable)");
  if (with_sweep_flags) {
    options.jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (options.jobs < 1) options.jobs = 1;
    cmd->add_option("--jobs", options.jobs, "Parallel sweep cells (default: cores)")
        ->envname("WDDP_JOBS");
    cmd->add_option("--format", options.formats, "Report formats: csv, json, svg")
        ->envname("WDDP_FORMAT")
        ->delimiter(',');
    cmd->add_flag("--timing", options.timing,
                  "Record measured per-cell runtimes in the CSV (breaks byte-identical reruns)");
  }
}

int fail_with(int status, const std::string& context) {
  std::cerr << "error (" << wddp_status_name(status) << ") in " << context << ": "
            << wddp_last_error() << "\n";
  switch (status) {
    case WDDP_ERR_INVALID_ARGUMENT:
    case WDDP_ERR_PARSE:
    case WDDP_ERR_INFEASIBLE:
      return 2;
    default:
      return 1;
  }
}

// Loads the config file and applies --seed/--out/--format/--set overrides.
int load_config(const CommonOptions& options, std::string& out_text) {
  std::ifstream file(options.config_path);
  if (!file) {
    std::cerr << "error: cannot open config file: " << options.config_path << "\n";
    return 2;
  }
  std::stringstream buffer;
  buffer << file.rdbuf();

  json document;
  try {
    document = json::parse(buffer.str());
  } catch (const json::exception& error) {
    std::cerr << "error: config is not valid JSON: " << error.what() << "\n";
    return 2;
  }

  if (!options.seed.empty()) {
    try {
      document["seed"] = std::stoll(options.seed);
    } catch (const std::exception&) {
      std::cerr << "error: --seed expects an integer, got: " << options.seed << "\n";
      return 2;
    }
  }
  if (!options.out_dir.empty()) document["output_dir"] = options.out_dir;
  if (!options.formats.empty() && document.contains("sweep")) {
    document["sweep"]["formats"] = options.formats;
  }
  for (const std::string& entry : options.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key.path=value, got: " << entry << "\n";
      return 2;
    }
    std::string pointer = "/" + entry.substr(0, eq);
    for (auto& c : pointer) {
      if (c == '.') c = '/';
    }
    const std::string raw = entry.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // plain string
    }
    try {
      if (value.is_null()) {
        // merge-patch convention: assigning null removes the field
        const json::json_pointer at(pointer);
        if (document.contains(at)) {
          const std::string key = at.back();
          document[at.parent_pointer()].erase(key);
        }
      } else {
        document[json::json_pointer(pointer)] = value;
      }
    } catch (const json::exception& error) {
      std::cerr << "error: cannot apply --set " << entry << ": " << error.what() << "\n";
      return 2;
    }
  }
  out_text = document.dump();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted distributed differentially private ERM simulator"};
  app.require_subcommand(1);

  CommonOptions calibrate_opts, train_opts, sweep_opts, verify_opts;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate the Gaussian noise scale");
  add_common(calibrate, calibrate_opts, false);
  CLI::App* train = app.add_subcommand("train", "Run a single training job");
  add_common(train, train_opts, false);
  CLI::App* sweep = app.add_subcommand("sweep", "Run an epsilon or u sweep and emit reports");
  add_common(sweep, sweep_opts, true);
  CLI::App* verify = app.add_subcommand("verify", "Check loss certificates (G, L, gradient dominance)");
  add_common(verify, verify_opts, false);

  CLI11_PARSE(app, argc, argv);

  if (calibrate->parsed()) {
    std::string config;
    if (const int rc = load_config(calibrate_opts, config)) return rc;
    char* record = nullptr;
    const int status = wddp_calibrate_run(config.c_str(), &record);
    if (status != WDDP_OK) return fail_with(status, "calibrate");
    std::cout << record << "\n";
    wddp_string_free(record);
    return 0;
  }

  if (train->parsed()) {
    std::string config;
    if (const int rc = load_config(train_opts, config)) return rc;
    char* summary = nullptr;
    const int status = wddp_train_run(config.c_str(), train_opts.out_dir.c_str(), &summary);
    if (status != WDDP_OK) return fail_with(status, "train");
    std::cout << summary << "\n";
    wddp_string_free(summary);
    return 0;
  }

  if (sweep->parsed()) {
    std::string config;
    if (const int rc = load_config(sweep_opts, config)) return rc;
    char* summary = nullptr;
    const int status = wddp_sweep_run(config.c_str(), sweep_opts.out_dir.c_str(), sweep_opts.jobs,
                                      sweep_opts.timing ? 1 : 0, &summary);
    if (status != WDDP_OK) return fail_with(status, "sweep");
    std::cout << summary << "\n";
    wddp_string_free(summary);
    return 0;
  }

  // verify
  std::string config;
  if (const int rc = load_config(verify_opts, config)) return rc;
  char* report_text = nullptr;
  const int status = wddp_verify_run(config.c_str(), &report_text);
  if (status != WDDP_OK) return fail_with(status, "verify");
  const json report = json::parse(report_text);
  wddp_string_free(report_text);

  std::printf("loss: %s\n", report.at("loss").get<std::string>().c_str());
  for (const auto& check : report.at("checks")) {
    std::printf("[%s] %-28s %s\n", check.at("pass").get<bool>() ? "PASS" : "FAIL",
                check.at("name").get<std::string>().c_str(),
                check.at("detail").get<std::string>().c_str());
  }
  if (!report.at("all_pass").get<bool>()) {
    for (const auto& check : report.at("checks")) {
      if (!check.at("pass").get<bool>()) {
        std::cerr << "first falsification: " << check.at("name").get<std::string>() << ": "
                  << check.at("detail").get<std::string>() << "\n";
        break;
      }
    }
    return 1;
  }
  return 0;
}
