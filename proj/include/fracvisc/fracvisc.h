/*
 * C interface to the fractional viscoelastic membrane solver.
 *
 * Every function returns an fv_status. On failure a description is stored
 * per thread and can be read with fv_last_error() until the next call.
 * Handles are opaque and must be released with the matching *_free().
 */
#ifndef FRACVISC_H
#define FRACVISC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FRACVISC_BUILDING)
#    define FV_API __declspec(dllexport)
#  else
#    define FV_API __declspec(dllimport)
#  endif
#else
#  define FV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fv_status {
    FV_OK = 0,
    FV_ERR_INVALID_ARGUMENT = 1,
    FV_ERR_NUMERIC = 2,
    FV_ERR_LINE_SEARCH = 3,
    FV_ERR_CONFIG = 4,
    FV_ERR_IO = 5,
    FV_ERR_INTERNAL = 6
} fv_status;

typedef enum fv_stop_reason {
    FV_STOP_GRADIENT_TOLERANCE = 0,
    FV_STOP_MAX_ITERATIONS = 1,
    FV_STOP_LINE_SEARCH_FAILURE = 2
} fv_stop_reason;

typedef struct fv_config fv_config;
typedef struct fv_run fv_run;

typedef struct fv_metrics {
    double rel_error;
    double final_cost;
    double final_grad_norm;
    int iterations;
    uint64_t seed;
    fv_stop_reason stop_reason;
} fv_metrics;

FV_API const char* fv_version(void);
FV_API const char* fv_status_name(fv_status status);
FV_API const char* fv_last_error(void);

/* configuration */
FV_API fv_status fv_config_default(fv_config** out);
FV_API fv_status fv_config_load(const char* path, fv_config** out);
FV_API fv_status fv_config_parse(const char* ini_text, fv_config** out);
/* key is "section.key", e.g. "noise.delta" */
FV_API fv_status fv_config_set(fv_config* cfg, const char* key, const char* value);
/* writes a NUL-terminated value; *needed receives the full length incl. NUL */
FV_API fv_status fv_config_get(const fv_config* cfg, const char* key, char* buf, size_t len, size_t* needed);
FV_API fv_status fv_config_validate(const fv_config* cfg);
FV_API void fv_config_free(fv_config* cfg);

/* experiments; out_dir may be NULL to skip file output */
FV_API fv_status fv_forward(const fv_config* cfg, const char* out_dir, int write_vtk, double* max_abs_u);
FV_API fv_status fv_invert(const fv_config* cfg, const char* out_dir, int write_vtk, fv_run** out);
FV_API fv_status fv_figure3(const fv_config* cfg, const char* out_dir, int write_vtk, fv_run** out);
/* writes table<id>.csv into out_dir; *failed_rows counts rows with failed runs */
FV_API fv_status fv_table(const fv_config* cfg, int table_id, const uint64_t* seeds, size_t n_seeds,
                          const char* out_dir, size_t* failed_rows);
FV_API fv_status fv_gradcheck(const fv_config* cfg, const char* out_dir, double* max_rel_diff);

/* results of fv_invert / fv_figure3 */
FV_API fv_status fv_run_metrics(const fv_run* run, fv_metrics* out);
FV_API size_t fv_run_history_length(const fv_run* run);
FV_API fv_status fv_run_cost_history(const fv_run* run, double* out, size_t len);
FV_API size_t fv_run_ndof(const fv_run* run);
FV_API fv_status fv_run_reconstruction(const fv_run* run, double* out, size_t len);
FV_API void fv_run_free(fv_run* run);

/* kernels */
FV_API fv_status fv_gl_weights(double alpha, int n, double* out); /* n+1 entries */
FV_API fv_status fv_rl_power(double beta_exp, double alpha, double t, double* out);

#ifdef __cplusplus
}
#endif

#endif /* FRACVISC_H */
