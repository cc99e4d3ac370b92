/* meltcast C interface.
 *
 * Every function returning mc_status reports failure through the code and
 * leaves a message for mc_last_error() on the calling thread. Handles are
 * opaque; release each with its matching *_free function (NULL is fine).
 */
#ifndef MELTCAST_MELTCAST_H
#define MELTCAST_MELTCAST_H

#include <stddef.h>

#if defined(MELTCAST_BUILDING_LIBRARY)
#define MC_API __attribute__((visibility("default")))
#else
#define MC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mc_status {
    MC_OK = 0,
    MC_ERR_FORMAT = 1,
    MC_ERR_EMPTY_INPUT = 2,
    MC_ERR_BOUNDARY_DATA = 3,
    MC_ERR_CONFIG = 4,
    MC_ERR_DOMAIN = 5,
    MC_ERR_RANGE = 6,
    MC_ERR_INSUFFICIENT_DATA = 7,
    MC_ERR_DEGENERATE = 8,
    MC_ERR_IO = 9,
    MC_ERR_ALPHA_CHANGE_REFUSED = 10,
    MC_ERR_MISSING_ARTIFACT = 11,
    MC_ERR_INTERNAL = 12,
    MC_ERR_INVALID_ARGUMENT = 13
} mc_status;

/* Warning bits returned by the stage functions. */
#define MC_WARN_WHITENESS 0x1u
#define MC_WARN_DEGENERATE_REGIME 0x2u
#define MC_WARN_EARLY_STOPPING 0x4u
#define MC_WARN_INTERVAL_SWAP 0x8u

/* Stage flags. */
#define MC_RUN_OVERRIDE_ALPHA_CHANGE 0x1u

/* Log levels passed to mc_log_fn. */
#define MC_LOG_INFO 0
#define MC_LOG_WARNING 1
#define MC_LOG_ERROR 2

#define MC_REGIME_WARM 0
#define MC_REGIME_COOL 1

typedef struct mc_config mc_config;
typedef struct mc_booster mc_booster;
typedef struct mc_calibrator mc_calibrator;

typedef void (*mc_log_fn)(int level, const char* message, void* user);

MC_API const char* mc_version(void);
/* Message for the last failure on this thread; "" if none. */
MC_API const char* mc_last_error(void);
MC_API const char* mc_status_name(mc_status status);

/* ---- configuration ---- */
MC_API mc_status mc_config_new(mc_config** out);
MC_API mc_status mc_config_load(const char* path, mc_config** out);
/* Same keys as the config file. */
MC_API mc_status mc_config_set(mc_config* cfg, const char* key, const char* value);
/* Copies the canonical value of `key` into buf (NUL-terminated). `needed`,
 * if non-NULL, receives the required size including the terminator. */
MC_API mc_status mc_config_get(const mc_config* cfg, const char* key, char* buf, size_t buf_size, size_t* needed);
MC_API mc_status mc_config_validate(const mc_config* cfg);
MC_API void mc_config_free(mc_config* cfg);

/* ---- pipeline stages ---- */
/* `log` may be NULL. `warnings` may be NULL; otherwise receives MC_WARN_* bits. */
MC_API mc_status mc_run_ingest(const mc_config* cfg, unsigned flags, mc_log_fn log, void* user, unsigned* warnings);
MC_API mc_status mc_run_train(const mc_config* cfg, unsigned flags, mc_log_fn log, void* user, unsigned* warnings);
MC_API mc_status mc_run_calibrate(const mc_config* cfg, unsigned flags, mc_log_fn log, void* user, unsigned* warnings);
MC_API mc_status mc_run_forecast(const mc_config* cfg, unsigned flags, mc_log_fn log, void* user, unsigned* warnings);
MC_API mc_status mc_run_evaluate(const mc_config* cfg, unsigned flags, mc_log_fn log, void* user, unsigned* warnings);
MC_API mc_status mc_run_simulate(const mc_config* cfg, unsigned flags, mc_log_fn log, void* user, unsigned* warnings);

/* ---- trained models ---- */
MC_API mc_status mc_booster_load(const char* path, mc_booster** out);
MC_API mc_status mc_booster_save(const mc_booster* booster, const char* path);
MC_API size_t mc_booster_feature_count(const mc_booster* booster);
MC_API int mc_booster_best_iter(const mc_booster* booster);
/* rows: n_rows x n_cols row-major; out: n_rows values. */
MC_API mc_status mc_booster_predict(const mc_booster* booster, const double* rows, size_t n_rows, size_t n_cols,
                                    double* out);
MC_API void mc_booster_free(mc_booster* booster);

MC_API mc_status mc_calibrator_load(const char* path, mc_calibrator** out);
MC_API double mc_calibrator_alpha(const mc_calibrator* calibrator);
/* Adaptive region for one feature row at miscoverage `alpha`. */
MC_API mc_status mc_calibrator_region(const mc_calibrator* calibrator, const mc_booster* booster, const double* row,
                                      size_t n_cols, double alpha, double* forecast, double* lower, double* upper,
                                      int* regime);
MC_API void mc_calibrator_free(mc_calibrator* calibrator);

/* ---- numerics ---- */
MC_API mc_status mc_quantile_loss(double y, double y_hat, double tau, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MELTCAST_MELTCAST_H */
