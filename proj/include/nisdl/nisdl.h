/* C interface to the skin-temperature pipeline. Every call returns a
 * nisdl_status; on failure nisdl_last_error() describes it (per thread). */
#ifndef NISDL_H
#define NISDL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NISDL_API __declspec(dllexport)
#else
#define NISDL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nisdl_status {
  NISDL_OK = 0,
  NISDL_ERR_CONFIG = 1,
  NISDL_ERR_IO = 2,
  NISDL_ERR_SHAPE = 3,
  NISDL_ERR_BOUNDS = 4,
  NISDL_ERR_INSUFFICIENT_DATA = 5,
  NISDL_ERR_DEGENERATE_DESIGN = 6,
  NISDL_ERR_OUT_OF_RANGE = 7,
  NISDL_ERR_DOMAIN = 8,
  NISDL_ERR_STATE = 9,
  NISDL_ERR_DIVERGENCE = 10,
  NISDL_ERR_SPLIT = 11,
  NISDL_ERR_PROFILE = 12,
  NISDL_ERR_EMPTY_DATA = 13,
  NISDL_ERR_INVALID_ARGUMENT = 98,
  NISDL_ERR_INTERNAL = 99
} nisdl_status;

typedef struct nisdl_config nisdl_config;
typedef struct nisdl_ssi_table nisdl_ssi_table;
typedef struct nisdl_report nisdl_report;

NISDL_API const char* nisdl_version(void);
NISDL_API const char* nisdl_last_error(void);
NISDL_API const char* nisdl_status_name(nisdl_status status);

/* profile: "paper" or "desk". */
NISDL_API nisdl_status nisdl_config_default(const char* profile, nisdl_config** out);
/* path may be NULL (defaults only); profile may be NULL (taken from file). */
NISDL_API nisdl_status nisdl_config_load(const char* path, const char* profile, nisdl_config** out);
NISDL_API nisdl_status nisdl_config_merge_json(nisdl_config* cfg, const char* json_text);
NISDL_API nisdl_status nisdl_config_set_seed(nisdl_config* cfg, uint64_t seed);
NISDL_API nisdl_status nisdl_config_set_variant(nisdl_config* cfg, const char* variant);
NISDL_API nisdl_status nisdl_config_validate(const nisdl_config* cfg);
/* Writes the effective config as JSON. *needed receives the byte count
 * including the terminator; buf may be NULL to query it. */
NISDL_API nisdl_status nisdl_config_to_json(const nisdl_config* cfg, char* buf, size_t capacity, size_t* needed);
NISDL_API void nisdl_config_free(nisdl_config* cfg);

NISDL_API nisdl_status nisdl_synth(const nisdl_config* cfg, const char* data_root);
/* roi_side <= 0 magnifies the whole frame; otherwise crops (x, y, side). */
NISDL_API nisdl_status nisdl_magnify_clip(const nisdl_config* cfg, const char* manifest, int roi_x, int roi_y,
                                          int roi_side, const char* out_dir);
NISDL_API nisdl_status nisdl_magnify_dataset(const nisdl_config* cfg, const char* data_root,
                                             const char* magnified_root);
/* out may be NULL. */
NISDL_API nisdl_status nisdl_fit_ssi(const nisdl_config* cfg, const char* data_root, const char* ssi_path,
                                     nisdl_ssi_table** out);
/* variant NULL uses the config's model.variant. */
NISDL_API nisdl_status nisdl_train(const nisdl_config* cfg, const char* variant, const char* data_root,
                                   const char* magnified_root, const char* ssi_path, const char* out_dir);
/* split_path and csv_path may be NULL; out may be NULL. */
NISDL_API nisdl_status nisdl_evaluate(const nisdl_config* cfg, const char* checkpoint, const char* data_root,
                                      const char* magnified_root, const char* ssi_path, const char* split_path,
                                      const char* json_path, const char* csv_path, nisdl_report** out);
NISDL_API nisdl_status nisdl_pipeline(const nisdl_config* cfg, const char* out_root);

NISDL_API nisdl_status nisdl_ssi_read(const char* path, nisdl_ssi_table** out);
NISDL_API size_t nisdl_ssi_count(const nisdl_ssi_table* table);
/* Calibration-prefix record of the i-th subject (sorted by id). Any output
 * pointer may be NULL. subject_id stays valid until the table is freed. */
NISDL_API nisdl_status nisdl_ssi_get(const nisdl_ssi_table* table, size_t index, const char** subject_id, double* k,
                                     double* b, double* residual_rmse, size_t* n_points);
NISDL_API void nisdl_ssi_free(nisdl_ssi_table* table);
NISDL_API nisdl_status nisdl_ssi_fit(const double* saturation, const double* temperature, size_t n, double* k,
                                     double* b);

NISDL_API nisdl_status nisdl_report_read(const char* path, nisdl_report** out);
NISDL_API const char* nisdl_report_model_id(const nisdl_report* report);
NISDL_API nisdl_status nisdl_report_summary(const nisdl_report* report, double* mean, double* median,
                                            double quartiles[3], size_t* n);
NISDL_API nisdl_status nisdl_report_bins(const nisdl_report* report, double bins[5]);
NISDL_API void nisdl_report_free(nisdl_report* report);

NISDL_API nisdl_status nisdl_bin_errors(const double* errors, size_t n, double bins[5]);
NISDL_API nisdl_status nisdl_summarize(const double* errors, size_t n, double* mean, double* median,
                                       double quartiles[3]);

#ifdef __cplusplus
}
#endif

#endif
