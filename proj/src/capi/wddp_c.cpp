#include "wddp/wddp.h"

#include <cstring>
#include <memory>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "privacy.hpp"
#include "runner.hpp"

namespace {

thread_local std::string g_last_error;

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

// Runs `body`, translating exceptions into status codes and recording the
// message for wddp_last_error.
template <typename Fn>
int guarded(Fn&& body) {
  try {
    body();
    g_last_error.clear();
    return WDDP_OK;
  } catch (const wddp::ValidationError& error) {
    g_last_error = error.what();
    return WDDP_ERR_INVALID_ARGUMENT;
  } catch (const wddp::ParseError& error) {
    g_last_error = error.what();
    return WDDP_ERR_PARSE;
  } catch (const wddp::IoError& error) {
    g_last_error = error.what();
    return WDDP_ERR_IO;
  } catch (const wddp::InfeasibleError& error) {
    g_last_error = error.what();
    return WDDP_ERR_INFEASIBLE;
  } catch (const std::exception& error) {
    g_last_error = error.what();
    return WDDP_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return WDDP_ERR_RUNTIME;
  }
}

nlohmann::json parse_document(const char* config_json) {
  if (config_json == nullptr) throw wddp::ValidationError("config text is NULL");
  try {
    return nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& error) {
    throw wddp::ParseError(std::string("config is not valid JSON: ") + error.what());
  }
}

}  // namespace

struct wddp_dataset {
  wddp::LoadedData data;
};

extern "C" {

const char* wddp_version(void) { return "0.1.0"; }

const char* wddp_status_name(int code) {
  switch (code) {
    case WDDP_OK: return "WDDP_OK";
    case WDDP_ERR_RUNTIME: return "WDDP_ERR_RUNTIME";
    case WDDP_ERR_INVALID_ARGUMENT: return "WDDP_ERR_INVALID_ARGUMENT";
    case WDDP_ERR_PARSE: return "WDDP_ERR_PARSE";
    case WDDP_ERR_IO: return "WDDP_ERR_IO";
    case WDDP_ERR_INFEASIBLE: return "WDDP_ERR_INFEASIBLE";
    default: return "WDDP_ERR_UNKNOWN";
  }
}

const char* wddp_last_error(void) { return g_last_error.c_str(); }

void wddp_string_free(char* text) { delete[] text; }

int wddp_dataset_open(const char* config_json, wddp_dataset** out) {
  return guarded([&] {
    if (out == nullptr) throw wddp::ValidationError("out handle is NULL");
    const wddp::RunConfig config = wddp::parse_run_config(parse_document(config_json));
    auto handle = std::make_unique<wddp_dataset>();
    handle->data = wddp::load_dataset(config);
    *out = handle.release();
  });
}

int wddp_dataset_rows(const wddp_dataset* dataset, int64_t* out) {
  return guarded([&] {
    if (dataset == nullptr || out == nullptr) throw wddp::ValidationError("NULL argument");
    *out = dataset->data.full.rows;
  });
}

int wddp_dataset_features(const wddp_dataset* dataset, int64_t* out) {
  return guarded([&] {
    if (dataset == nullptr || out == nullptr) throw wddp::ValidationError("NULL argument");
    *out = dataset->data.full.cols;
  });
}

int wddp_dataset_train_rows(const wddp_dataset* dataset, int64_t* out) {
  return guarded([&] {
    if (dataset == nullptr || out == nullptr) throw wddp::ValidationError("NULL argument");
    *out = dataset->data.train.rows;
  });
}

int wddp_dataset_test_rows(const wddp_dataset* dataset, int64_t* out) {
  return guarded([&] {
    if (dataset == nullptr || out == nullptr) throw wddp::ValidationError("NULL argument");
    *out = dataset->data.test.rows;
  });
}

void wddp_dataset_free(wddp_dataset* dataset) { delete dataset; }

int wddp_calibrate(double epsilon, double delta, double lipschitz_g, int64_t rounds,
                   int64_t samples, wddp_calibration_result* out) {
  return guarded([&] {
    if (out == nullptr) throw wddp::ValidationError("out parameter is NULL");
    const wddp::PrivacyBudget budget{epsilon, delta};
    const wddp::CalibrationResult result =
        wddp::calibrate_sigma(budget, lipschitz_g, rounds, samples);
    out->sigma = result.params.sigma;
    out->implied_c = result.implied_c;
    out->delta_achieved = result.delta_achieved;
    out->lambda_star = result.lambda_star;
  });
}

int wddp_calibrate_run(const char* config_json, char** record_json) {
  return guarded([&] {
    if (record_json == nullptr) throw wddp::ValidationError("out parameter is NULL");
    *record_json = copy_string(wddp::cmd_calibrate(parse_document(config_json)).dump(2));
  });
}

int wddp_train_run(const char* config_json, const char* out_dir, char** summary_json) {
  return guarded([&] {
    if (summary_json == nullptr) throw wddp::ValidationError("out parameter is NULL");
    const std::string dir = out_dir ? out_dir : "";
    *summary_json = copy_string(wddp::cmd_train(parse_document(config_json), dir).dump(2));
  });
}

int wddp_sweep_run(const char* config_json, const char* out_dir, int jobs, int csv_timing,
                   char** summary_json) {
  return guarded([&] {
    if (summary_json == nullptr) throw wddp::ValidationError("out parameter is NULL");
    const std::string dir = out_dir ? out_dir : "";
    *summary_json = copy_string(
        wddp::cmd_sweep(parse_document(config_json), dir, jobs, csv_timing != 0).dump(2));
  });
}

int wddp_verify_run(const char* config_json, char** report_json) {
  return guarded([&] {
    if (report_json == nullptr) throw wddp::ValidationError("out parameter is NULL");
    *report_json = copy_string(wddp::cmd_verify(parse_document(config_json)).dump(2));
  });
}

}  // extern "C"
