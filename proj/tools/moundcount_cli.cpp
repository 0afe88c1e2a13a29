// moundcount command-line front end. Talks to the library only through the
// C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "moundcount/moundcount.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CliError {
  int code;
  std::string message;
};

int exit_code_for(mc_status s) {
  switch (s) {
    case MC_OK: return kExitOk;
    case MC_ERR_INVALID_ARGUMENT:
    case MC_ERR_INDEX:
    case MC_ERR_PARSE:
    case MC_ERR_VALIDATION:
    case MC_ERR_IO:
    case MC_ERR_UNSUPPORTED_VERSION:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void check(mc_status s) {
  if (s != MC_OK) throw CliError{exit_code_for(s), mc_last_error()};
}

[[noreturn]] void invalid(const std::string& message) { throw CliError{kExitValidation, message}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using RasterPtr = std::unique_ptr<mc_raster, Deleter<mc_raster, mc_raster_free>>;
using GridPtr = std::unique_ptr<mc_grid, Deleter<mc_grid, mc_grid_free>>;
using AnnPtr = std::unique_ptr<mc_annotations, Deleter<mc_annotations, mc_annotations_free>>;
using DatasetPtr = std::unique_ptr<mc_dataset, Deleter<mc_dataset, mc_dataset_free>>;
using BundlePtr = std::unique_ptr<mc_bundle, Deleter<mc_bundle, mc_bundle_free>>;
using ReportPtr = std::unique_ptr<mc_report, Deleter<mc_report, mc_report_free>>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  mc_string_free(s);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) invalid("cannot write '" + path + "'");
  out << text;
  if (!out) throw CliError{kExitRuntime, "write failed for '" + path + "'"};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration: built-in defaults, overridden by a JSON config file,
// overridden by explicit flags.

struct Settings {
  unsigned jobs = 0;  // 0: one per processor
  std::uint64_t seed = 0;
  std::int64_t patch_size = 608;
  bool include_partial = true;
  double score_threshold = 0.5;
  std::string models = "linear,svr,lasso,mlp";
  mc_fit_options fit{};
  std::string mlp_hidden = "16,8";
  std::size_t n_blocks = 18;
};

const std::set<std::string> kConfigKeys = {
    "jobs",        "seed",          "patch_size",     "include_partial", "score_threshold",
    "models",      "svr_c",         "svr_epsilon",    "svr_gamma",       "svr_kernel",
    "svr_tune",    "lasso_lambda",  "mlp_hidden",     "mlp_learning_rate", "mlp_epochs",
    "n_blocks",    "synth_params"};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    invalid("config file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) invalid("config file '" + path + "' must hold a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!kConfigKeys.count(it.key())) invalid("config file '" + path + "': unknown key '" + it.key() + "'");
  return doc;
}

template <typename T>
void apply_config(const json& cfg, const char* key, const CLI::Option* flag, T& target) {
  if ((flag && flag->count() > 0) || !cfg.contains(key)) return;
  try {
    target = cfg[key].get<T>();
  } catch (const json::exception&) {
    invalid(std::string("config key '") + key + "' has the wrong type");
  }
}

std::string hidden_to_string(const mc_fit_options& o) {
  std::string s;
  for (int i = 0; i < o.mlp_hidden_count; ++i) s += (i ? "," : "") + std::to_string(o.mlp_hidden[i]);
  return s;
}

void parse_hidden(const std::string& text, mc_fit_options& o) {
  // "none" (or an empty list) leaves no hidden layer: a linear model.
  const auto parts = text == "none" ? std::vector<std::string>{} : split_list(text);
  if (parts.size() > 8) invalid("--mlp-hidden takes at most 8 comma-separated sizes");
  o.mlp_hidden_count = static_cast<int>(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      std::size_t used = 0;
      o.mlp_hidden[i] = std::stoi(parts[i], &used);
      if (used != parts[i].size() || o.mlp_hidden[i] < 1) throw std::invalid_argument("size");
    } catch (const std::exception&) {
      invalid("--mlp-hidden: '" + parts[i] + "' is not a positive integer");
    }
  }
}

GridPtr load_grid(const std::string& path) {
  mc_grid* g = nullptr;
  check(mc_grid_load(path.c_str(), &g));
  return GridPtr(g);
}

AnnPtr load_annotations(const std::string& path, const mc_grid* grid, double threshold) {
  mc_annotations* a = nullptr;
  check(mc_annotations_load(path.c_str(), mc_grid_source_width(grid), mc_grid_source_height(grid),
                            threshold, &a));
  return AnnPtr(a);
}

DatasetPtr load_dataset(const std::string& path) {
  mc_dataset* d = nullptr;
  check(mc_dataset_load_csv(path.c_str(), &d));
  return DatasetPtr(d);
}

DatasetPtr load_datasets(const std::vector<std::string>& paths) {
  DatasetPtr all = load_dataset(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) {
    DatasetPtr more = load_dataset(paths[i]);
    check(mc_dataset_append(all.get(), more.get()));
  }
  return all;
}

BundlePtr load_bundle(const std::string& path) {
  mc_bundle* b = nullptr;
  check(mc_bundle_load(path.c_str(), &b));
  return BundlePtr(b);
}

std::string percent(double rcp) {
  char* s = nullptr;
  check(mc_format_percent(rcp, &s));
  return take_string(s);
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  mc_fit_options_default(&s.fit);
  s.mlp_hidden = hidden_to_string(s.fit);

  CLI::App app{"Mound counting with patch-level regression correction"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  std::string config_path, log_level;
  app.add_option("--config", config_path, "JSON config file; explicit flags take precedence")
      ->check(CLI::ExistingFile);
  auto* jobs_opt = app.add_option("--jobs", s.jobs, "Worker threads (0: one per processor)");
  app.add_option("--log-level", log_level, "error, warn, info or debug (default: $MOUND_LOG or warn)");

  // tile
  auto* tile = app.add_subcommand("tile", "Cut an orthomosaic into patch PNGs plus a grid manifest");
  std::string tile_image, tile_out, tile_block;
  tile->add_option("image", tile_image, "Input PNG or TIFF")->required();
  tile->add_option("-o,--out", tile_out, "Output directory")->required();
  auto* tile_patch = tile->add_option("--patch-size", s.patch_size, "Patch edge length in pixels");
  auto* tile_partial = tile->add_option("--partial", s.include_partial,
                                        "Keep clipped edge patches (true/false)");
  tile->add_option("--block-id", tile_block, "Block id (default: image file stem)");

  // features
  auto* feat = app.add_subcommand("features", "Compute the per-patch feature CSV");
  std::string feat_gt, feat_det, feat_grid, feat_out;
  feat->add_option("--det", feat_det, "Detections (VIA JSON)")->required();
  feat->add_option("--gt", feat_gt, "Ground truth (VIA JSON); omit for an inference set");
  feat->add_option("--grid", feat_grid, "Grid manifest JSON")->required();
  feat->add_option("-o,--out", feat_out, "Output CSV")->required();
  auto* feat_thresh = feat->add_option("--score-threshold", s.score_threshold,
                                       "Drop detections scoring below this");

  // fit
  auto* fit = app.add_subcommand("fit", "Train regression bundles on feature CSVs");
  std::vector<std::string> fit_inputs;
  std::string fit_out;
  fit->add_option("features", fit_inputs, "Training feature CSV(s)")->required();
  fit->add_option("-o,--out", fit_out, "Output directory for <model>.json bundles")->required();
  auto* fit_models = fit->add_option("--models", s.models, "Comma-separated models to train");
  auto* fit_seed = fit->add_option("--seed", s.seed, "Run seed; sub-seeds are derived by component name");
  auto* svr_c = fit->add_option("--svr-c", s.fit.svr_c, "SVR box constraint C");
  auto* svr_eps = fit->add_option("--svr-epsilon", s.fit.svr_epsilon, "SVR tube half-width (target units)");
  auto* svr_gamma = fit->add_option("--svr-gamma", s.fit.svr_gamma, "RBF gamma (standardized features)");
  std::string svr_kernel = "rbf";
  auto* svr_kernel_opt = fit->add_option("--svr-kernel", svr_kernel, "rbf or linear");
  bool svr_tune = s.fit.svr_tune != 0;
  auto* svr_tune_opt = fit->add_option("--svr-tune", svr_tune,
                                       "Cross-validate SVR gamma and epsilon (true/false)");
  auto* lasso_lambda = fit->add_option("--lasso-lambda", s.fit.lasso_lambda,
                                       "Lasso penalty; negative selects it by 5-fold CV");
  auto* mlp_hidden = fit->add_option("--mlp-hidden", s.mlp_hidden, "MLP hidden layer sizes");
  auto* mlp_lr = fit->add_option("--mlp-learning-rate", s.fit.mlp_learning_rate, "MLP initial step size");
  auto* mlp_epochs = fit->add_option("--mlp-epochs", s.fit.mlp_epochs, "MLP full-batch epochs");

  // select
  auto* sel = app.add_subcommand("select", "Pick the bundle with the best validation RCP");
  std::vector<std::string> sel_bundles;
  std::string sel_validation, sel_out;
  sel->add_option("bundles", sel_bundles, "Candidate bundle files")->required();
  sel->add_option("--validation", sel_validation, "Validation feature CSV")->required();
  sel->add_option("-o,--out", sel_out, "Copy the winning bundle here");

  // count
  auto* count = app.add_subcommand("count", "Local and corrected mound count for one block");
  std::string count_det, count_grid, count_bundle, count_features, count_out;
  std::int64_t count_gt = 0;
  count->add_option("--det", count_det, "Detections (VIA JSON)");
  count->add_option("--grid", count_grid, "Grid manifest JSON");
  count->add_option("--features", count_features, "Feature CSV instead of --det/--grid");
  count->add_option("--bundle", count_bundle, "Model bundle JSON")->required();
  auto* count_gt_opt = count->add_option("--gt", count_gt, "Ground-truth block count; enables RCP");
  count->add_option("-o,--out", count_out, "Write the report CSV here");
  auto* count_thresh = count->add_option("--score-threshold", s.score_threshold,
                                         "Drop detections scoring below this");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic suite of planting blocks");
  std::string synth_out, synth_params;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  auto* synth_n = synth->add_option("-n,--n", s.n_blocks, "Number of blocks");
  auto* synth_seed = synth->add_option("--seed", s.seed, "Suite seed");
  synth->add_option("--params", synth_params, "Generator parameters JSON (missing keys use defaults)");

  // report
  auto* report = app.add_subcommand("report", "Render a block report from a counts CSV");
  std::string report_in, report_out;
  report->add_option("counts", report_in, "CSV: block_id,ground_truth,local_count[,<model>_count...]")
      ->required();
  report->add_option("-o,--out", report_out, "Write the report CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (!log_level.empty()) check(mc_set_log_level(log_level.c_str()));

    json cfg = json::object();
    if (!config_path.empty()) cfg = load_config(config_path);
    apply_config(cfg, "jobs", jobs_opt, s.jobs);
    if (s.jobs == 0) s.jobs = mc_default_jobs();

    if (*tile) {
      apply_config(cfg, "patch_size", tile_patch, s.patch_size);
      apply_config(cfg, "include_partial", tile_partial, s.include_partial);
      if (tile_block.empty()) tile_block = fs::path(tile_image).stem().string();
      mc_raster* r = nullptr;
      check(mc_raster_load(tile_image.c_str(), &r));
      RasterPtr raster(r);
      mc_grid* g = nullptr;
      check(mc_grid_create(tile_block.c_str(), mc_raster_width(r), mc_raster_height(r), s.patch_size,
                           s.include_partial ? 1 : 0, &g));
      GridPtr grid(g);
      std::int64_t written = 0;
      check(mc_tile(r, g, tile_out.c_str(), s.jobs, &written));
      std::cout << "block " << tile_block << ": " << mc_grid_rows(g) << " rows x " << mc_grid_cols(g)
                << " cols, " << written << " patches written to " << tile_out << "\n";
    } else if (*feat) {
      apply_config(cfg, "score_threshold", feat_thresh, s.score_threshold);
      GridPtr grid = load_grid(feat_grid);
      AnnPtr det = load_annotations(feat_det, grid.get(), s.score_threshold);
      AnnPtr gt;
      if (!feat_gt.empty()) gt = load_annotations(feat_gt, grid.get(), s.score_threshold);
      mc_dataset* d = nullptr;
      check(mc_dataset_build(gt.get(), det.get(), grid.get(), s.jobs, &d));
      DatasetPtr ds(d);
      check(mc_dataset_save_csv(d, feat_out.c_str()));
      std::cout << mc_dataset_size(d) << " patches written to " << feat_out << "\n";
    } else if (*fit) {
      apply_config(cfg, "models", fit_models, s.models);
      apply_config(cfg, "seed", fit_seed, s.seed);
      apply_config(cfg, "svr_c", svr_c, s.fit.svr_c);
      apply_config(cfg, "svr_epsilon", svr_eps, s.fit.svr_epsilon);
      apply_config(cfg, "svr_gamma", svr_gamma, s.fit.svr_gamma);
      apply_config(cfg, "svr_kernel", svr_kernel_opt, svr_kernel);
      apply_config(cfg, "svr_tune", svr_tune_opt, svr_tune);
      apply_config(cfg, "lasso_lambda", lasso_lambda, s.fit.lasso_lambda);
      apply_config(cfg, "mlp_hidden", mlp_hidden, s.mlp_hidden);
      apply_config(cfg, "mlp_learning_rate", mlp_lr, s.fit.mlp_learning_rate);
      apply_config(cfg, "mlp_epochs", mlp_epochs, s.fit.mlp_epochs);
      if (svr_kernel != "rbf" && svr_kernel != "linear")
        invalid("--svr-kernel must be rbf or linear, got '" + svr_kernel + "'");
      s.fit.svr_linear_kernel = svr_kernel == "linear" ? 1 : 0;
      s.fit.svr_tune = svr_tune ? 1 : 0;
      parse_hidden(s.mlp_hidden, s.fit);
      s.fit.mlp_seed = mc_derive_seed(s.seed, "mlp");
      const auto models = split_list(s.models);
      if (models.empty()) invalid("--models must name at least one model");
      DatasetPtr train = load_datasets(fit_inputs);
      std::error_code ec;
      fs::create_directories(fit_out, ec);
      if (ec) invalid("cannot create directory '" + fit_out + "': " + ec.message());
      for (const auto& m : models) {
        mc_bundle* b = nullptr;
        check(mc_bundle_fit(m.c_str(), train.get(), &s.fit, &b));
        BundlePtr bundle(b);
        const std::string path = (fs::path(fit_out) / (m + ".json")).string();
        check(mc_bundle_save(b, path.c_str()));
        std::cout << m << ": " << path << "\n";
      }
    } else if (*sel) {
      DatasetPtr val = load_dataset(sel_validation);
      std::vector<BundlePtr> owned;
      std::vector<const mc_bundle*> raw;
      for (const auto& p : sel_bundles) {
        owned.push_back(load_bundle(p));
        raw.push_back(owned.back().get());
      }
      std::size_t best = 0;
      std::vector<double> rcps(raw.size());
      std::vector<std::int64_t> counts(raw.size());
      std::int64_t gt = 0;
      check(mc_select(raw.data(), raw.size(), val.get(), &best, rcps.data(), counts.data(), &gt));
      std::printf("%-8s %-40s %10s %10s %8s\n", "model", "bundle", "count", "truth", "RCP");
      for (std::size_t i = 0; i < raw.size(); ++i)
        std::printf("%-8s %-40s %10lld %10lld %8s\n", mc_bundle_model_type(raw[i]),
                    sel_bundles[i].c_str(), static_cast<long long>(counts[i]),
                    static_cast<long long>(gt), percent(rcps[i]).c_str());
      std::printf("selected: %s (%s)\n", mc_bundle_model_type(raw[best]), sel_bundles[best].c_str());
      if (!sel_out.empty()) {
        std::error_code ec;
        fs::copy_file(sel_bundles[best], sel_out, fs::copy_options::overwrite_existing, ec);
        if (ec) throw CliError{kExitRuntime, "cannot copy bundle to '" + sel_out + "': " + ec.message()};
      }
    } else if (*count) {
      apply_config(cfg, "score_threshold", count_thresh, s.score_threshold);
      DatasetPtr ds;
      std::string block_id;
      if (!count_features.empty()) {
        if (!count_det.empty() || !count_grid.empty()) invalid("use either --features or --det/--grid");
        ds = load_dataset(count_features);
        block_id = mc_dataset_block_id(ds.get());
      } else {
        if (count_det.empty() || count_grid.empty()) invalid("count needs --det and --grid, or --features");
        GridPtr grid = load_grid(count_grid);
        AnnPtr det = load_annotations(count_det, grid.get(), s.score_threshold);
        mc_dataset* d = nullptr;
        check(mc_dataset_build(nullptr, det.get(), grid.get(), s.jobs, &d));
        ds.reset(d);
        block_id = mc_grid_block_id(grid.get());
      }
      BundlePtr bundle = load_bundle(count_bundle);
      std::vector<double> preds(mc_dataset_size(ds.get()));
      check(mc_bundle_predict_dataset(bundle.get(), ds.get(), preds.data(), preds.size()));
      std::int64_t corrected = 0;
      check(mc_block_count(preds.data(), preds.size(), &corrected));
      const auto local = static_cast<std::int64_t>(mc_dataset_local_count(ds.get()));
      const std::string model = mc_bundle_model_type(bundle.get());
      if (count_gt_opt->count() == 0) {
        std::cout << "block " << block_id << ": local count " << local << ", corrected count ("
                  << model << ") " << corrected << "\n";
        if (!count_out.empty()) invalid("--out needs --gt to compute RCP");
      } else {
        const char* names[] = {model.c_str()};
        mc_report* r = nullptr;
        check(mc_report_create(names, 1, &r));
        ReportPtr rep(r);
        check(mc_report_add_block(r, block_id.c_str(), count_gt, local, &corrected));
        char* text = nullptr;
        check(mc_report_render_text(r, &text));
        std::cout << take_string(text);
        if (!count_out.empty()) {
          char* csv = nullptr;
          check(mc_report_to_csv(r, &csv));
          write_file(count_out, take_string(csv));
        }
      }
    } else if (*synth) {
      apply_config(cfg, "n_blocks", synth_n, s.n_blocks);
      apply_config(cfg, "seed", synth_seed, s.seed);
      std::string params_text;
      if (!synth_params.empty()) {
        std::ifstream in(synth_params);
        if (!in) invalid("cannot open params file '" + synth_params + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        params_text = ss.str();
      } else if (cfg.contains("synth_params")) {
        params_text = cfg["synth_params"].dump();
      }
      if (s.n_blocks < 1) invalid("--n must be >= 1");
      char* ids = nullptr;
      check(mc_synth_write_suite(params_text.empty() ? nullptr : params_text.c_str(), s.n_blocks,
                                 s.seed, synth_out.c_str(), s.jobs, &ids));
      std::cout << take_string(ids);
    } else if (*report) {
      mc_report* r = nullptr;
      check(mc_report_load_counts(report_in.c_str(), &r));
      ReportPtr rep(r);
      char* text = nullptr;
      check(mc_report_render_text(r, &text));
      std::cout << take_string(text);
      if (!report_out.empty()) {
        char* csv = nullptr;
        check(mc_report_to_csv(r, &csv));
        write_file(report_out, take_string(csv));
      }
    }
  } catch (const CliError& e) {
    std::cerr << "moundcount: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "moundcount: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
