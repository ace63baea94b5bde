#ifndef WDDP_WDDP_H
#define WDDP_WDDP_H

/*
 * C interface to the weighted distributed differentially private ERM
 * simulator. All entry points return a wddp_status code; on failure a
 * human-readable message is available from wddp_last_error() (thread-local,
 * valid until the next failing call on the same thread).
 *
 * Configuration documents are JSON text; the schema is described in the
 * project README. Strings returned through char** out-parameters are
 * allocated by the library and must be released with wddp_string_free().
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wddp_status {
  WDDP_OK = 0,
  WDDP_ERR_RUNTIME = 1,          /* training or reporting failed */
  WDDP_ERR_INVALID_ARGUMENT = 2, /* bad parameter or configuration */
  WDDP_ERR_PARSE = 3,            /* malformed JSON or CSV input */
  WDDP_ERR_IO = 4,               /* filesystem failure */
  WDDP_ERR_INFEASIBLE = 5        /* privacy budget cannot be met */
} wddp_status;

/* Library semantic version, e.g. "0.1.0". */
const char* wddp_version(void);

/* Stable name of a status code, e.g. "WDDP_ERR_PARSE". */
const char* wddp_status_name(int code);

/* Message of the last failure on this thread; empty string if none. */
const char* wddp_last_error(void);

/* Releases a string returned by this library. NULL is a no-op. */
void wddp_string_free(char* text);

/*
 * Datasets. A handle owns the loaded table and its train/test split, resolved
 * from the "dataset" block (and "seed") of a configuration document.
 */
typedef struct wddp_dataset wddp_dataset;

int wddp_dataset_open(const char* config_json, wddp_dataset** out);
int wddp_dataset_rows(const wddp_dataset* dataset, int64_t* out);
int wddp_dataset_features(const wddp_dataset* dataset, int64_t* out);
int wddp_dataset_train_rows(const wddp_dataset* dataset, int64_t* out);
int wddp_dataset_test_rows(const wddp_dataset* dataset, int64_t* out);
void wddp_dataset_free(wddp_dataset* dataset);

/*
 * Gaussian-mechanism calibration: the smallest per-coordinate noise scale
 * whose composed moments-accountant tail bound meets (epsilon, delta) for
 * `rounds` full-batch gradient queries over `samples` examples with
 * per-example gradient norm bound `lipschitz_g`.
 */
typedef struct wddp_calibration_result {
  double sigma;
  double implied_c; /* c with sigma^2 = c G^2 T ln(1/delta) / (n^2 eps^2) */
  double delta_achieved;
  int32_t lambda_star; /* moment order attaining the tail minimum */
} wddp_calibration_result;

int wddp_calibrate(double epsilon, double delta, double lipschitz_g, int64_t rounds,
                   int64_t samples, wddp_calibration_result* out);

/* Calibration driven by a configuration document; returns the JSON record. */
int wddp_calibrate_run(const char* config_json, char** record_json);

/*
 * Runs one training job. Writes model.json, metrics.csv, and provenance.json
 * (plus trace.csv when enabled) under out_dir (empty/NULL: the config's
 * output_dir). Returns the metrics row as JSON.
 */
int wddp_train_run(const char* config_json, const char* out_dir, char** summary_json);

/*
 * Runs a sweep with up to `jobs` parallel cells, writing results.csv /
 * results.json / results.svg per the configured formats. The CSV is
 * byte-identical across reruns unless csv_timing is nonzero (which records
 * measured per-cell times in the CSV instead of zeros). Fails with
 * WDDP_ERR_RUNTIME only if every cell failed.
 */
int wddp_sweep_run(const char* config_json, const char* out_dir, int jobs, int csv_timing,
                   char** summary_json);

/*
 * Runs the loss-certificate suite (row norms, per-example Lipschitz bound,
 * smoothness, finite-difference agreement, gradient dominance). Returns
 * {"checks": [{name, pass, detail}...], "all_pass": bool}; the status is
 * WDDP_OK even when checks fail -- inspect the report.
 */
int wddp_verify_run(const char* config_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* WDDP_WDDP_H */
