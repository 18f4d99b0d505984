#ifndef THZ_NOMA_H
#define THZ_NOMA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum ThzStatus {
  THZ_STATUS_OK = 0,
  // A required pointer argument was null.
  THZ_STATUS_NULL = 1,
  // An argument lies outside its mathematical domain.
  THZ_STATUS_DOMAIN = 2,
  // The scenario could not be parsed or validated.
  THZ_STATUS_CONFIG = 3,
  // An output buffer or index was out of range.
  THZ_STATUS_RANGE = 4,
  // Sampling or evaluation failed.
  THZ_STATUS_SAMPLING = 5,
  // A Rust panic was caught at the boundary.
  THZ_STATUS_PANIC = 6,
} ThzStatus;

// Parsed scenario.
typedef struct ThzScenario ThzScenario;

// Rows produced by running a scenario.
typedef struct ThzSweep ThzSweep;

// Numeric fields of one sweep row. Absent values are NaN.
typedef struct ThzRow {
  double sweep_value;
  double estimate;
  double std_error;
  // 1 near, 2 far.
  uint32_t user;
  // 1 NOMA, 2 OMA.
  uint32_t mode;
  // Nonzero when the row status is "ok".
  uint32_t ok;
} ThzRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length of the last error message in bytes, including the NUL; 0 if none.
size_t thz_last_error_length(void);

// Copies the last error message into `buf`. Returns the required size
// including the NUL; nothing is written when `len` is too small.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t thz_last_error_message(char *buf, size_t len);

// Near-user pairing threshold R_th1 in metres.
//
// # Safety
// `out` must be null or valid for writing one double.
enum ThzStatus thz_threshold_near(double a1, double k, double *out);

// Far-user pairing threshold R_th2 in metres.
//
// # Safety
// `out` must be null or valid for writing one double.
enum ThzStatus thz_threshold_far(double a1, double k, double *out);

// Parses a scenario from a NUL-terminated JSON string.
//
// # Safety
// `json` must be null or a valid C string; `out` must be null or writable.
enum ThzStatus thz_scenario_from_json(const char *json, struct ThzScenario **out);

// Loads a built-in scenario by name ("fig2", "fig3", "fig4").
//
// # Safety
// `name` must be null or a valid C string; `out` must be null or writable.
enum ThzStatus thz_scenario_preset(const char *name, struct ThzScenario **out);

// Overrides the Monte Carlo trial count.
//
// # Safety
// `scenario` must be null or a live handle.
enum ThzStatus thz_scenario_set_trials(struct ThzScenario *scenario, uint64_t trials);

// Overrides the Monte Carlo seed.
//
// # Safety
// `scenario` must be null or a live handle.
enum ThzStatus thz_scenario_set_seed(struct ThzScenario *scenario, uint64_t seed);

// # Safety
// `scenario` must be null or a handle not yet freed.
void thz_scenario_free(struct ThzScenario *scenario);

// Evaluates every grid point, scheme, user, mode and method.
//
// # Safety
// `scenario` must be null or a live handle; `out` must be null or writable.
enum ThzStatus thz_sweep_run(const struct ThzScenario *scenario, struct ThzSweep **out);

// Number of rows; 0 for a null handle.
//
// # Safety
// `sweep` must be null or a live handle.
size_t thz_sweep_len(const struct ThzSweep *sweep);

// Numeric fields of row `index`.
//
// # Safety
// `sweep` must be null or a live handle; `out` must be null or writable.
enum ThzStatus thz_sweep_row(const struct ThzSweep *sweep, size_t index, struct ThzRow *out);

// Writes row `index` as "scheme,method,status" into `buf`. `needed`
// receives the size including the NUL; `Range` is returned if it does
// not fit.
//
// # Safety
// `sweep` must be null or a live handle; `buf` must be null or valid for
// `len` bytes; `needed` must be null or writable.
enum ThzStatus thz_sweep_row_labels(const struct ThzSweep *sweep,
                                    size_t index,
                                    char *buf,
                                    size_t len,
                                    size_t *needed);

// Renders the rows as CSV (with header) into `buf`. Same sizing protocol
// as [`thz_sweep_row_labels`].
//
// # Safety
// As for [`thz_sweep_row_labels`].
enum ThzStatus thz_sweep_csv(const struct ThzSweep *sweep, char *buf, size_t len, size_t *needed);

// # Safety
// `sweep` must be null or a handle not yet freed.
void thz_sweep_free(struct ThzSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THZ_NOMA_H */
