#include "moundcount/moundcount.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "core/annotations.hpp"
#include "core/error.hpp"
#include "core/evaluate.hpp"
#include "core/features.hpp"
#include "core/image_io.hpp"
#include "core/log.hpp"
#include "core/manifest.hpp"
#include "core/parallel.hpp"
#include "core/regress.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"
#include "core/tiling.hpp"

struct mc_raster {
  mc::Raster value;
};
struct mc_grid {
  mc::GridManifest value;
};
struct mc_annotations {
  mc::AnnotationSet value;
};
struct mc_dataset {
  mc::TrainingSet value;
};
struct mc_bundle {
  mc::ModelBundle value;
};
struct mc_report {
  std::vector<std::string> models;
  std::vector<mc::BlockInput> blocks;
};

namespace {

thread_local std::string g_last_error;

mc_status to_status(mc::ErrorKind kind) {
  switch (kind) {
    case mc::ErrorKind::InvalidArgument: return MC_ERR_INVALID_ARGUMENT;
    case mc::ErrorKind::Index: return MC_ERR_INDEX;
    case mc::ErrorKind::Parse: return MC_ERR_PARSE;
    case mc::ErrorKind::Validation: return MC_ERR_VALIDATION;
    case mc::ErrorKind::Io: return MC_ERR_IO;
    case mc::ErrorKind::DegenerateGeometry: return MC_ERR_DEGENERATE_GEOMETRY;
    case mc::ErrorKind::InsufficientData: return MC_ERR_INSUFFICIENT_DATA;
    case mc::ErrorKind::Consistency: return MC_ERR_CONSISTENCY;
    case mc::ErrorKind::UnsupportedVersion: return MC_ERR_UNSUPPORTED_VERSION;
    case mc::ErrorKind::UndefinedMetric: return MC_ERR_UNDEFINED_METRIC;
    case mc::ErrorKind::Generation: return MC_ERR_GENERATION;
  }
  return MC_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes and the thread-local
// error message.
template <typename Fn>
mc_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return MC_OK;
  } catch (const mc::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown exception";
  }
  return MC_ERR_INTERNAL;
}

void need(const void* p, const char* name) {
  if (!p) mc::fail(mc::ErrorKind::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mc::ObjectClass class_arg(const char* cls) {
  need(cls, "cls");
  const auto parsed = mc::parse_class(cls);
  if (!parsed) mc::fail(mc::ErrorKind::InvalidArgument, std::string("unknown class '") + cls + "'");
  return *parsed;
}

}  // namespace

extern "C" {

const char* mc_version(void) { return "0.1.0"; }

const char* mc_last_error(void) { return g_last_error.c_str(); }

const char* mc_status_name(mc_status status) {
  switch (status) {
    case MC_OK: return "ok";
    case MC_ERR_INVALID_ARGUMENT: return mc::error_kind_name(mc::ErrorKind::InvalidArgument);
    case MC_ERR_INDEX: return mc::error_kind_name(mc::ErrorKind::Index);
    case MC_ERR_PARSE: return mc::error_kind_name(mc::ErrorKind::Parse);
    case MC_ERR_VALIDATION: return mc::error_kind_name(mc::ErrorKind::Validation);
    case MC_ERR_IO: return mc::error_kind_name(mc::ErrorKind::Io);
    case MC_ERR_DEGENERATE_GEOMETRY: return mc::error_kind_name(mc::ErrorKind::DegenerateGeometry);
    case MC_ERR_INSUFFICIENT_DATA: return mc::error_kind_name(mc::ErrorKind::InsufficientData);
    case MC_ERR_CONSISTENCY: return mc::error_kind_name(mc::ErrorKind::Consistency);
    case MC_ERR_UNSUPPORTED_VERSION: return mc::error_kind_name(mc::ErrorKind::UnsupportedVersion);
    case MC_ERR_UNDEFINED_METRIC: return mc::error_kind_name(mc::ErrorKind::UndefinedMetric);
    case MC_ERR_GENERATION: return mc::error_kind_name(mc::ErrorKind::Generation);
    case MC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void mc_string_free(char* s) { std::free(s); }

mc_status mc_set_log_level(const char* level) {
  return guarded([&] {
    need(level, "level");
    mc::log::Level parsed;
    if (!mc::log::parse_level(level, parsed))
      mc::fail(mc::ErrorKind::InvalidArgument,
               std::string("unknown log level '") + level + "' (expected error, warn, info or debug)");
    mc::log::set_threshold(parsed);
  });
}

unsigned mc_default_jobs(void) { return mc::default_jobs(); }

// Rasters

mc_status mc_raster_load(const char* path, mc_raster** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mc_raster{mc::read_raster(path)};
  });
}

void mc_raster_free(mc_raster* raster) { delete raster; }
int64_t mc_raster_width(const mc_raster* raster) { return raster ? raster->value.width() : 0; }
int64_t mc_raster_height(const mc_raster* raster) { return raster ? raster->value.height() : 0; }
int mc_raster_channels(const mc_raster* raster) { return raster ? raster->value.channels() : 0; }

// Grids

mc_status mc_grid_create(const char* block_id, int64_t source_width, int64_t source_height,
                         int64_t patch_size, int include_partial, mc_grid** out) {
  return guarded([&] {
    need(block_id, "block_id");
    need(out, "out");
    mc::require(*block_id != '\0', mc::ErrorKind::InvalidArgument, "block id must not be empty");
    *out = new mc_grid{
        {block_id, mc::build_grid(source_width, source_height, patch_size, include_partial != 0)}};
  });
}

mc_status mc_grid_load(const char* manifest_path, mc_grid** out) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(out, "out");
    *out = new mc_grid{mc::load_grid_manifest(manifest_path)};
  });
}

mc_status mc_grid_save(const mc_grid* grid, const char* manifest_path) {
  return guarded([&] {
    need(grid, "grid");
    need(manifest_path, "manifest_path");
    mc::save_grid_manifest(grid->value, manifest_path);
  });
}

void mc_grid_free(mc_grid* grid) { delete grid; }
int64_t mc_grid_rows(const mc_grid* grid) { return grid ? grid->value.grid.rows() : 0; }
int64_t mc_grid_cols(const mc_grid* grid) { return grid ? grid->value.grid.cols() : 0; }
int64_t mc_grid_source_width(const mc_grid* grid) { return grid ? grid->value.grid.source_width() : 0; }
int64_t mc_grid_source_height(const mc_grid* grid) { return grid ? grid->value.grid.source_height() : 0; }
const char* mc_grid_block_id(const mc_grid* grid) { return grid ? grid->value.block_id.c_str() : ""; }

mc_status mc_grid_patch_bounds(const mc_grid* grid, int64_t row, int64_t col, int64_t* x0,
                               int64_t* y0, int64_t* width, int64_t* height) {
  return guarded([&] {
    need(grid, "grid");
    const auto b = grid->value.grid.bounds(row, col);
    if (x0) *x0 = b.x0;
    if (y0) *y0 = b.y0;
    if (width) *width = b.width;
    if (height) *height = b.height;
  });
}

mc_status mc_tile(const mc_raster* raster, const mc_grid* grid, const char* out_dir, unsigned jobs,
                  int64_t* patches_written) {
  return guarded([&] {
    need(raster, "raster");
    need(grid, "grid");
    need(out_dir, "out_dir");
    const auto paths = mc::write_tiles(raster->value, grid->value, out_dir, jobs);
    if (patches_written) *patches_written = static_cast<int64_t>(paths.size());
  });
}

// Annotations

mc_status mc_annotations_load(const char* path, int64_t image_width, int64_t image_height,
                              double score_threshold, mc_annotations** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    mc::require(score_threshold >= 0.0 && score_threshold <= 1.0, mc::ErrorKind::InvalidArgument,
                "score threshold must be in [0, 1]");
    mc::ViaParseOptions opt;
    opt.image_width = image_width;
    opt.image_height = image_height;
    opt.score_threshold = score_threshold;
    *out = new mc_annotations{mc::load_via(path, opt)};
  });
}

void mc_annotations_free(mc_annotations* ann) { delete ann; }

int64_t mc_annotations_count(const mc_annotations* ann, const char* cls) {
  if (!ann) return -1;
  try {
    return static_cast<int64_t>(ann->value.count(class_arg(cls)));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1;
  }
}

// Datasets

mc_status mc_dataset_build(const mc_annotations* ground_truth, const mc_annotations* detections,
                           const mc_grid* grid, unsigned jobs, mc_dataset** out) {
  return guarded([&] {
    need(detections, "detections");
    need(grid, "grid");
    need(out, "out");
    const mc::AnnotationSet* gt = ground_truth ? &ground_truth->value : nullptr;
    *out = new mc_dataset{
        mc::build_dataset(gt, detections->value, grid->value.grid, grid->value.block_id, jobs)};
  });
}

mc_status mc_dataset_load_csv(const char* path, mc_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mc_dataset{mc::read_features_csv(path)};
  });
}

mc_status mc_dataset_save_csv(const mc_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "ds");
    need(path, "path");
    mc::write_features_csv(ds->value, path);
  });
}

mc_status mc_dataset_append(mc_dataset* dst, const mc_dataset* src) {
  return guarded([&] {
    need(dst, "dst");
    need(src, "src");
    const auto copy = src->value.samples;
    dst->value.samples.insert(dst->value.samples.end(), copy.begin(), copy.end());
  });
}

void mc_dataset_free(mc_dataset* ds) { delete ds; }
size_t mc_dataset_size(const mc_dataset* ds) { return ds ? ds->value.size() : 0; }
int mc_dataset_has_targets(const mc_dataset* ds) {
  return ds && !ds->value.empty() && ds->value.all_targets() ? 1 : 0;
}
double mc_dataset_local_count(const mc_dataset* ds) { return ds ? ds->value.local_count() : 0.0; }

mc_status mc_dataset_target_total(const mc_dataset* ds, double* out) {
  return guarded([&] {
    need(ds, "ds");
    need(out, "out");
    *out = ds->value.target_total();
  });
}

const char* mc_dataset_block_id(const mc_dataset* ds) {
  return ds && !ds->value.empty() ? ds->value.samples.front().block_id.c_str() : "";
}

// Models

void mc_fit_options_default(mc_fit_options* opt) {
  if (!opt) return;
  const mc::FitOptions d;
  std::memset(opt, 0, sizeof *opt);
  opt->svr_c = d.svr.c;
  opt->svr_epsilon = d.svr.epsilon;
  opt->svr_gamma = d.svr.kernel.gamma;
  opt->svr_linear_kernel = d.svr.kernel.type == mc::KernelType::Linear ? 1 : 0;
  opt->svr_tune = d.tune_svr ? 1 : 0;
  opt->lasso_lambda = d.lasso_lambda;
  opt->mlp_hidden_count = static_cast<int>(d.mlp.hidden_sizes.size());
  for (std::size_t i = 0; i < d.mlp.hidden_sizes.size(); ++i) opt->mlp_hidden[i] = d.mlp.hidden_sizes[i];
  opt->mlp_learning_rate = d.mlp.learning_rate;
  opt->mlp_epochs = d.mlp.epochs;
  opt->mlp_seed = d.mlp.seed;
}

mc_status mc_bundle_fit(const char* model, const mc_dataset* train, const mc_fit_options* opt,
                        mc_bundle** out) {
  return guarded([&] {
    need(model, "model");
    need(train, "train");
    need(out, "out");
    mc_fit_options defaults;
    mc_fit_options_default(&defaults);
    const mc_fit_options& o = opt ? *opt : defaults;
    mc::require(o.mlp_hidden_count >= 0 && o.mlp_hidden_count <= 8, mc::ErrorKind::InvalidArgument,
                "MLP takes at most 8 hidden layers");
    mc::FitOptions fo;
    fo.svr.c = o.svr_c;
    fo.svr.epsilon = o.svr_epsilon;
    fo.svr.kernel = {o.svr_linear_kernel ? mc::KernelType::Linear : mc::KernelType::Rbf, o.svr_gamma};
    fo.tune_svr = o.svr_tune != 0;
    fo.lasso_lambda = o.lasso_lambda;
    fo.mlp.hidden_sizes.assign(o.mlp_hidden, o.mlp_hidden + o.mlp_hidden_count);
    fo.mlp.learning_rate = o.mlp_learning_rate;
    fo.mlp.epochs = o.mlp_epochs;
    fo.mlp.seed = o.mlp_seed;
    fo.training_block = train->value.empty() ? "" : train->value.samples.front().block_id;
    *out = new mc_bundle{mc::fit_bundle(mc::parse_model_kind(model), train->value, fo)};
  });
}

mc_status mc_bundle_load(const char* path, mc_bundle** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mc_bundle{mc::load_bundle(path)};
  });
}

mc_status mc_bundle_save(const mc_bundle* bundle, const char* path) {
  return guarded([&] {
    need(bundle, "bundle");
    need(path, "path");
    mc::save_bundle(bundle->value, path);
  });
}

mc_status mc_bundle_to_json(const mc_bundle* bundle, char** out) {
  return guarded([&] {
    need(bundle, "bundle");
    need(out, "out");
    *out = dup_string(mc::bundle_to_json(bundle->value));
  });
}

void mc_bundle_free(mc_bundle* bundle) { delete bundle; }

const char* mc_bundle_model_type(const mc_bundle* bundle) {
  return bundle ? mc::model_kind_name(bundle->value.kind()) : "";
}

mc_status mc_bundle_predict(const mc_bundle* bundle, const double features[4], double* out) {
  return guarded([&] {
    need(bundle, "bundle");
    need(features, "features");
    need(out, "out");
    *out = mc::predict(bundle->value,
                       mc::FeatureVector{features[0], features[1], features[2], features[3]});
  });
}

mc_status mc_bundle_predict_dataset(const mc_bundle* bundle, const mc_dataset* ds, double* out,
                                    size_t out_len) {
  return guarded([&] {
    need(bundle, "bundle");
    need(ds, "ds");
    mc::require(out_len >= ds->value.size(), mc::ErrorKind::InvalidArgument,
                "output buffer holds fewer values than the dataset has samples");
    if (ds->value.empty()) return;
    need(out, "out");
    for (std::size_t i = 0; i < ds->value.size(); ++i)
      out[i] = mc::predict(bundle->value, ds->value.samples[i].features);
  });
}

mc_status mc_select(const mc_bundle* const* candidates, size_t n, const mc_dataset* validation,
                    size_t* best, double* rcps, int64_t* counts, int64_t* ground_truth) {
  return guarded([&] {
    need(validation, "validation");
    mc::require(n == 0 || candidates != nullptr, mc::ErrorKind::InvalidArgument,
                "candidates must not be NULL");
    std::vector<mc::ModelBundle> list;
    for (size_t i = 0; i < n; ++i) {
      need(candidates[i], "candidate");
      list.push_back(candidates[i]->value);
    }
    const auto sel = mc::select_best(list, validation->value);
    if (best) *best = sel.best;
    for (size_t i = 0; i < n; ++i) {
      if (rcps) rcps[i] = sel.rcps[i];
      if (counts) counts[i] = sel.counts[i];
    }
    if (ground_truth) *ground_truth = sel.ground_truth;
  });
}

// Metrics and reports

mc_status mc_block_count(const double* predictions, size_t n, int64_t* out) {
  return guarded([&] {
    need(out, "out");
    mc::require(n == 0 || predictions != nullptr, mc::ErrorKind::InvalidArgument,
                "predictions must not be NULL");
    *out = mc::block_count(std::span<const double>(predictions, n));
  });
}

mc_status mc_rcp(double predicted, double ground_truth, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = mc::rcp(predicted, ground_truth);
  });
}

mc_status mc_format_percent(double rcp, char** out) {
  return guarded([&] {
    need(out, "out");
    *out = dup_string(mc::format_percent(rcp));
  });
}

mc_status mc_report_create(const char* const* models, size_t n_models, mc_report** out) {
  return guarded([&] {
    need(out, "out");
    mc::require(n_models == 0 || models != nullptr, mc::ErrorKind::InvalidArgument,
                "models must not be NULL");
    auto* r = new mc_report;
    for (size_t i = 0; i < n_models; ++i) {
      if (!models[i]) {
        delete r;
        mc::fail(mc::ErrorKind::InvalidArgument, "model name must not be NULL");
      }
      r->models.emplace_back(models[i]);
    }
    *out = r;
  });
}

mc_status mc_report_add_block(mc_report* report, const char* block_id, int64_t ground_truth,
                              int64_t local_count, const int64_t* corrected) {
  return guarded([&] {
    need(report, "report");
    need(block_id, "block_id");
    mc::require(report->models.empty() || corrected != nullptr, mc::ErrorKind::InvalidArgument,
                "corrected counts must not be NULL");
    mc::BlockInput b;
    b.block_id = block_id;
    b.ground_truth = ground_truth;
    b.local_count = local_count;
    if (!report->models.empty()) b.corrected.assign(corrected, corrected + report->models.size());
    // Validate eagerly so errors point at the offending block.
    auto trial = report->blocks;
    trial.push_back(b);
    mc::build_report(report->models, trial);
    report->blocks.push_back(std::move(b));
  });
}

mc_status mc_report_load_counts(const char* path, mc_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto r = std::make_unique<mc_report>();
    r->blocks = mc::parse_block_counts_csv(mc::read_text_file(path), &r->models);
    mc::build_report(r->models, r->blocks);
    *out = r.release();
  });
}

mc_status mc_report_render_text(const mc_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(mc::render_report_text(mc::build_report(report->models, report->blocks)));
  });
}

mc_status mc_report_to_csv(const mc_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(mc::report_csv(mc::build_report(report->models, report->blocks)));
  });
}

void mc_report_free(mc_report* report) { delete report; }

// Synthetic data

mc_status mc_synth_default_params(char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    *out_json = dup_string(mc::synth_params_json(mc::SynthParams{}));
  });
}

mc_status mc_synth_write_suite(const char* params_json, size_t n_blocks, uint64_t seed,
                               const char* out_dir, unsigned jobs, char** out_ids) {
  return guarded([&] {
    need(out_dir, "out_dir");
    const mc::SynthParams templ =
        params_json ? mc::parse_synth_params(params_json) : mc::SynthParams{};
    const auto blocks = mc::generate_suite(n_blocks, templ, seed, jobs);
    std::string ids;
    for (const auto& b : blocks) {
      mc::write_block(b, out_dir);
      ids += b.block_id + "\n";
    }
    if (out_ids) *out_ids = dup_string(ids);
  });
}

uint64_t mc_derive_seed(uint64_t base, const char* component) {
  return mc::derive_seed(base, component ? std::string_view(component) : std::string_view());
}

}  // extern "C"
