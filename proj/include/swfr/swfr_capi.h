#ifndef SWFR_CAPI_H
#define SWFR_CAPI_H

/* C interface to the geodesic-flow library. All entry points return a status
 * code; swfr_last_error() describes the most recent failure on the calling
 * thread. Handles are opaque and must be released with their close call. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SWFR_API __declspec(dllexport)
#else
#define SWFR_API __attribute__((visibility("default")))
#endif

typedef enum swfr_status {
  SWFR_OK = 0,
  SWFR_ERR_INVALID_ARGUMENT = 1,
  SWFR_ERR_SHAPE_MISMATCH = 2,
  SWFR_ERR_NON_FINITE = 3,
  SWFR_ERR_IO = 4,
  SWFR_ERR_CONFIG = 5,
  SWFR_ERR_NUMERIC = 6,
  SWFR_ERR_INTERNAL = 7
} swfr_status;

/* Message of the last error on this thread; empty string if none. The
 * pointer stays valid until the next failing call on the same thread. */
SWFR_API const char* swfr_last_error(void);

/* Run a command against a JSON config file, writing artifacts to the
 * directory named in the config. These back the CLI subcommands. */
SWFR_API swfr_status swfr_run_train(const char* config_path);
SWFR_API swfr_status swfr_run_bayes(const char* config_path);
SWFR_API swfr_status swfr_run_sweep(const char* config_path);

/* Property suites; *failures receives the number of failing checks. */
SWFR_API swfr_status swfr_selftest(int* failures);

/* Trained-model handle loaded from a checkpoint file. */
typedef struct swfr_model swfr_model;

SWFR_API swfr_status swfr_model_open(const char* checkpoint_path, swfr_model** out);
SWFR_API void swfr_model_close(swfr_model* model);
SWFR_API swfr_status swfr_model_dim(const swfr_model* model, int* out_dim);

/* Weighted generation: writes count rows into x (count*dim doubles, row
 * major) and w (count doubles, mean 1). The reference distribution is read
 * from the checkpoint's stored config. */
SWFR_API swfr_status swfr_model_generate(swfr_model* model, int count, uint64_t seed, double* x,
                                         double* w);

/* Convenience: generation straight to a CSV file (x0..x{d-1},w header). */
SWFR_API swfr_status swfr_model_generate_csv(swfr_model* model, int count, uint64_t seed,
                                             const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* SWFR_CAPI_H */
