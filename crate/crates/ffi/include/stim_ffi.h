#ifndef STIM_FFI_H
#define STIM_FFI_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible entry point.
 */
typedef enum StimStatus {
  STIM_STATUS_OK = 0,
  STIM_STATUS_NULL_POINTER = 1,
  STIM_STATUS_INVALID_UTF8 = 2,
  STIM_STATUS_CONFIG_ERROR = 3,
  STIM_STATUS_RUNTIME_ERROR = 4,
} StimStatus;

/**
 * Opaque encoder handle.
 */
typedef struct StimEncoder StimEncoder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Pointer to the calling thread's last error message; valid until the next
 * failing call on the same thread.
 */
const char *stim_last_error(void);

/**
 * Free a string returned by this library. Null is ignored.
 */
void stim_string_free(char *s);

/**
 * Build a deterministic encoder from a model-config JSON document.
 * Returns null on error; see `stim_last_error`.
 */
struct StimEncoder *stim_encoder_new(const char *model_json, uint64_t seed);

void stim_encoder_free(struct StimEncoder *handle);

/**
 * Tokenize a raw `[T][H][W][3]` f64 clip and run the encoder under a merge
 * schedule. `frame_len` must equal `T*H*W*3` for the handle's model config.
 * On success the merged token counts are written to `out_n_t` / `out_n_s`.
 */
enum StimStatus stim_encoder_forward(const struct StimEncoder *handle,
                                     const double *frames,
                                     uintptr_t frame_len,
                                     const char *schedule_json,
                                     const char *options_json,
                                     uintptr_t *out_n_t,
                                     uintptr_t *out_n_s);

/**
 * Run a full experiment from an `ExperimentConfig` JSON document and return
 * the JSON report. The caller owns the string (`stim_string_free`).
 */
enum StimStatus stim_run_experiment(const char *config_json, char **out_report);

/**
 * Evaluate the analytic cost model for a model + schedule pair (both JSON)
 * and return the cost report as JSON.
 */
enum StimStatus stim_cost_report(const char *model_json,
                                 const char *schedule_json,
                                 char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STIM_FFI_H */
