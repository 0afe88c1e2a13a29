/* moundcount C API.
 *
 * All objects are opaque handles released with their *_free function.
 * Functions return an mc_status; on failure mc_last_error() describes the
 * problem for the calling thread until its next API call. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * mc_string_free.
 */
#ifndef MOUNDCOUNT_MOUNDCOUNT_H
#define MOUNDCOUNT_MOUNDCOUNT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MC_API __declspec(dllexport)
#else
#define MC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mc_status {
  MC_OK = 0,
  MC_ERR_INVALID_ARGUMENT = 1,
  MC_ERR_INDEX = 2,
  MC_ERR_PARSE = 3,
  MC_ERR_VALIDATION = 4,
  MC_ERR_IO = 5,
  MC_ERR_DEGENERATE_GEOMETRY = 6,
  MC_ERR_INSUFFICIENT_DATA = 7,
  MC_ERR_CONSISTENCY = 8,
  MC_ERR_UNSUPPORTED_VERSION = 9,
  MC_ERR_UNDEFINED_METRIC = 10,
  MC_ERR_GENERATION = 11,
  MC_ERR_INTERNAL = 99
} mc_status;

typedef struct mc_raster mc_raster;
typedef struct mc_grid mc_grid;
typedef struct mc_annotations mc_annotations;
typedef struct mc_dataset mc_dataset;
typedef struct mc_bundle mc_bundle;
typedef struct mc_report mc_report;

MC_API const char* mc_version(void);
MC_API const char* mc_last_error(void);
MC_API const char* mc_status_name(mc_status status);
MC_API void mc_string_free(char* s);
/* "error", "warn", "info" or "debug". */
MC_API mc_status mc_set_log_level(const char* level);
MC_API unsigned mc_default_jobs(void);

/* Rasters ---------------------------------------------------------------- */

MC_API mc_status mc_raster_load(const char* path, mc_raster** out);
MC_API void mc_raster_free(mc_raster* raster);
MC_API int64_t mc_raster_width(const mc_raster* raster);
MC_API int64_t mc_raster_height(const mc_raster* raster);
MC_API int mc_raster_channels(const mc_raster* raster);

/* Patch grids ------------------------------------------------------------ */

MC_API mc_status mc_grid_create(const char* block_id, int64_t source_width, int64_t source_height,
                                int64_t patch_size, int include_partial, mc_grid** out);
MC_API mc_status mc_grid_load(const char* manifest_path, mc_grid** out);
MC_API mc_status mc_grid_save(const mc_grid* grid, const char* manifest_path);
MC_API void mc_grid_free(mc_grid* grid);
MC_API int64_t mc_grid_rows(const mc_grid* grid);
MC_API int64_t mc_grid_cols(const mc_grid* grid);
MC_API int64_t mc_grid_source_width(const mc_grid* grid);
MC_API int64_t mc_grid_source_height(const mc_grid* grid);
MC_API const char* mc_grid_block_id(const mc_grid* grid);
MC_API mc_status mc_grid_patch_bounds(const mc_grid* grid, int64_t row, int64_t col, int64_t* x0,
                                      int64_t* y0, int64_t* width, int64_t* height);
/* Writes one PNG per patch plus the grid manifest into out_dir. */
MC_API mc_status mc_tile(const mc_raster* raster, const mc_grid* grid, const char* out_dir,
                         unsigned jobs, int64_t* patches_written);

/* Annotations ------------------------------------------------------------ */

MC_API mc_status mc_annotations_load(const char* path, int64_t image_width, int64_t image_height,
                                     double score_threshold, mc_annotations** out);
MC_API void mc_annotations_free(mc_annotations* ann);
/* cls: "mound", "tree", "water" or "debris". */
MC_API int64_t mc_annotations_count(const mc_annotations* ann, const char* cls);

/* Feature datasets ------------------------------------------------------- */

/* ground_truth may be NULL (inference); patches without ground truth get a
 * zero target only when ground_truth is given. */
MC_API mc_status mc_dataset_build(const mc_annotations* ground_truth,
                                  const mc_annotations* detections, const mc_grid* grid,
                                  unsigned jobs, mc_dataset** out);
MC_API mc_status mc_dataset_load_csv(const char* path, mc_dataset** out);
MC_API mc_status mc_dataset_save_csv(const mc_dataset* ds, const char* path);
/* Appends the samples of src to dst. */
MC_API mc_status mc_dataset_append(mc_dataset* dst, const mc_dataset* src);
MC_API void mc_dataset_free(mc_dataset* ds);
MC_API size_t mc_dataset_size(const mc_dataset* ds);
MC_API int mc_dataset_has_targets(const mc_dataset* ds);
MC_API double mc_dataset_local_count(const mc_dataset* ds);
MC_API mc_status mc_dataset_target_total(const mc_dataset* ds, double* out);
/* Block id of the first sample, or "" for an empty set. */
MC_API const char* mc_dataset_block_id(const mc_dataset* ds);

/* Models ----------------------------------------------------------------- */

typedef struct mc_fit_options {
  double svr_c;
  double svr_epsilon;
  double svr_gamma;
  int svr_linear_kernel;  /* 0: RBF, 1: linear */
  int svr_tune;           /* cross-validate gamma and epsilon */
  double lasso_lambda;    /* < 0: choose by cross-validation */
  int mlp_hidden[8];
  int mlp_hidden_count;
  double mlp_learning_rate;
  int mlp_epochs;
  uint64_t mlp_seed;
} mc_fit_options;

MC_API void mc_fit_options_default(mc_fit_options* opt);

/* model: "linear", "svr", "lasso" or "mlp". */
MC_API mc_status mc_bundle_fit(const char* model, const mc_dataset* train,
                               const mc_fit_options* opt, mc_bundle** out);
MC_API mc_status mc_bundle_load(const char* path, mc_bundle** out);
MC_API mc_status mc_bundle_save(const mc_bundle* bundle, const char* path);
MC_API mc_status mc_bundle_to_json(const mc_bundle* bundle, char** out);
MC_API void mc_bundle_free(mc_bundle* bundle);
MC_API const char* mc_bundle_model_type(const mc_bundle* bundle);
/* features: count, tree ratio, water ratio, debris ratio. Clamped to >= 0. */
MC_API mc_status mc_bundle_predict(const mc_bundle* bundle, const double features[4], double* out);
/* Per-patch predictions for every sample of ds, in dataset order. */
MC_API mc_status mc_bundle_predict_dataset(const mc_bundle* bundle, const mc_dataset* ds,
                                           double* out, size_t out_len);

/* Scores each candidate on the validation set by block-level RCP. rcps and
 * counts, when non-NULL, receive n values. */
MC_API mc_status mc_select(const mc_bundle* const* candidates, size_t n,
                           const mc_dataset* validation, size_t* best, double* rcps,
                           int64_t* counts, int64_t* ground_truth);

/* Metrics and reports ---------------------------------------------------- */

MC_API mc_status mc_block_count(const double* predictions, size_t n, int64_t* out);
MC_API mc_status mc_rcp(double predicted, double ground_truth, double* out);
MC_API mc_status mc_format_percent(double rcp, char** out);

/* An empty report with the given corrected-count model columns. */
MC_API mc_status mc_report_create(const char* const* models, size_t n_models, mc_report** out);
/* corrected: one count per model column. */
MC_API mc_status mc_report_add_block(mc_report* report, const char* block_id,
                                     int64_t ground_truth, int64_t local_count,
                                     const int64_t* corrected);
/* Block counts CSV: block_id,ground_truth,local_count[,<model>_count...] */
MC_API mc_status mc_report_load_counts(const char* path, mc_report** out);
MC_API mc_status mc_report_render_text(const mc_report* report, char** out);
MC_API mc_status mc_report_to_csv(const mc_report* report, char** out);
MC_API void mc_report_free(mc_report* report);

/* Synthetic data --------------------------------------------------------- */

/* Default generator parameters as JSON. */
MC_API mc_status mc_synth_default_params(char** out_json);
/* params_json may be NULL for defaults; missing keys keep defaults. Writes
 * n_blocks blocks into out_dir and returns their ids, one per line. */
MC_API mc_status mc_synth_write_suite(const char* params_json, size_t n_blocks, uint64_t seed,
                                      const char* out_dir, unsigned jobs, char** out_ids);

/* Seeds ------------------------------------------------------------------ */

/* Sub-seed for a named component of a run. */
MC_API uint64_t mc_derive_seed(uint64_t base, const char* component);

#ifdef __cplusplus
}
#endif

#endif /* MOUNDCOUNT_MOUNDCOUNT_H */
