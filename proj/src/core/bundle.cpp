#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/evaluate.hpp"
#include "core/log.hpp"
#include "core/regress.hpp"

namespace mc {

using json = nlohmann::ordered_json;

const char* model_kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Svr: return "svr";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::Linear, ModelKind::Svr, ModelKind::Lasso, ModelKind::Mlp})
    if (name == model_kind_name(k)) return k;
  fail(ErrorKind::InvalidArgument,
       "unknown model type '" + name + "' (expected linear, svr, lasso or mlp)");
}

namespace {

double svr_cv_error(const Design& d, const SvrOptions& opt, std::size_t folds) {
  const std::size_t n = d.x.size();
  double sse = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<FeatureRow> xtr;
    std::vector<double> ytr;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % folds == f) {
        test.push_back(i);
      } else {
        xtr.push_back(d.x[i]);
        ytr.push_back(d.y[i]);
      }
    }
    const Standardizer s = fit_standardizer(xtr);
    std::vector<FeatureRow> ztr;
    for (const auto& row : xtr) ztr.push_back(s.apply(row));
    const SvrSolution sol = solve_svr_dual(ztr, ytr, opt);
    for (std::size_t i : test) {
      const FeatureRow z = s.apply(d.x[i]);
      double f_val = sol.bias;
      for (std::size_t k = 0; k < ztr.size(); ++k)
        if (sol.coeffs[k] != 0.0) f_val += sol.coeffs[k] * opt.kernel(ztr[k], z);
      sse += (f_val - d.y[i]) * (f_val - d.y[i]);
    }
  }
  return sse / static_cast<double>(n);
}

SvrOptions tune_svr(const Design& d, const SvrOptions& base) {
  const std::size_t n = d.x.size();
  const std::size_t folds = std::min<std::size_t>(5, n);
  if (folds < 2 || n - (n + folds - 1) / folds < 2) {
    log::info("too few samples for SVR cross-validation; using the base settings");
    return base;
  }
  std::vector<double> gammas = {base.kernel.gamma};
  if (base.kernel.type == KernelType::Rbf)
    gammas = {0.1 * base.kernel.gamma, base.kernel.gamma, 10.0 * base.kernel.gamma};
  SvrOptions best = base;
  double best_err = std::numeric_limits<double>::infinity();
  for (double g : gammas) {
    for (double eps : {0.1, 0.5, 1.0}) {
      SvrOptions trial = base;
      trial.kernel.gamma = g;
      trial.epsilon = eps;
      const double err = svr_cv_error(d, trial, folds);
      log::debug("svr cv gamma=", g, " epsilon=", eps, " mse=", err);
      if (err < best_err) {
        best_err = err;
        best = trial;
      }
    }
  }
  return best;
}

}  // namespace

ModelBundle fit_bundle(ModelKind kind, const TrainingSet& train, const FitOptions& opt) {
  require(!train.empty(), ErrorKind::InsufficientData, "training set is empty");
  const Design d = design_from(train);
  ModelBundle b;
  b.metadata.training_block = opt.training_block;
  b.metadata.n_samples = static_cast<std::int64_t>(d.x.size());
  switch (kind) {
    case ModelKind::Linear: {
      b.model = fit_ols(d);
      b.standardizer = fit_standardizer(d.x);
      break;
    }
    case ModelKind::Lasso: {
      double lambda = opt.lasso_lambda;
      if (lambda < 0.0) {
        require(d.x.size() >= 2, ErrorKind::InsufficientData, "lasso needs at least 2 samples");
        lambda = select_lasso_lambda(d, default_lambda_grid(), 5);
      }
      b.model = fit_lasso(d, lambda);
      b.standardizer = fit_standardizer(d.x);
      b.metadata.hyperparameters = {{"lambda", lambda}};
      break;
    }
    case ModelKind::Svr: {
      require(d.x.size() >= 2, ErrorKind::InsufficientData,
              "SVR needs at least 2 samples, got " + std::to_string(d.x.size()));
      require(opt.svr.c > 0.0, ErrorKind::InvalidArgument, "SVR C must be > 0");
      const SvrOptions chosen = opt.tune_svr ? tune_svr(d, opt.svr) : opt.svr;
      auto [model, scaler] = fit_svr(train, chosen);
      b.model = std::move(model);
      b.standardizer = scaler;
      b.metadata.hyperparameters = {{"C", chosen.c}, {"epsilon", chosen.epsilon}};
      if (chosen.kernel.type == KernelType::Rbf)
        b.metadata.hyperparameters.emplace_back("gamma", chosen.kernel.gamma);
      break;
    }
    case ModelKind::Mlp: {
      auto [model, scaler] = fit_mlp(train, opt.mlp);
      b.model = std::move(model);
      b.standardizer = scaler;
      b.metadata.hyperparameters = {{"learning_rate", opt.mlp.learning_rate},
                                    {"epochs", static_cast<double>(opt.mlp.epochs)}};
      break;
    }
  }
  return b;
}

double predict_raw(const ModelBundle& b, const FeatureRow& x) {
  for (double v : x)
    require(std::isfinite(v), ErrorKind::InvalidArgument, "feature values must be finite");
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel> || std::is_same_v<M, LassoModel>) {
          return m.predict_raw(x);
        } else {
          return m.predict_std(b.standardizer.apply(x));
        }
      },
      b.model);
}

double predict(const ModelBundle& b, const FeatureVector& features) {
  const double raw = predict_raw(b, features.as_array());
  require(!std::isnan(raw), ErrorKind::InvalidArgument, "model produced NaN");
  return std::max(0.0, raw);
}

Selection select_best(const std::vector<ModelBundle>& candidates, const TrainingSet& validation) {
  require(!candidates.empty(), ErrorKind::InvalidArgument, "no candidate models to select from");
  require(!validation.empty(), ErrorKind::InsufficientData, "validation set is empty");
  Selection sel;
  std::vector<double> targets;
  for (const auto& s : validation.samples) {
    require(s.target.has_value(), ErrorKind::Validation,
            "validation sample " + s.patch_id() + " has no target");
    targets.push_back(*s.target);
  }
  sel.ground_truth = block_count(targets);
  for (const auto& c : candidates) {
    std::vector<double> preds;
    preds.reserve(validation.size());
    for (const auto& s : validation.samples) preds.push_back(predict(c, s.features));
    const auto count = block_count(preds);
    sel.counts.push_back(count);
    sel.rcps.push_back(rcp(static_cast<double>(count), static_cast<double>(sel.ground_truth)));
  }
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& best = candidates[sel.best];
    if (sel.rcps[i] > sel.rcps[sel.best] ||
        (sel.rcps[i] == sel.rcps[sel.best] &&
         static_cast<int>(candidates[i].kind()) < static_cast<int>(best.kind())))
      sel.best = i;
  }
  return sel;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorKind::Validation, "bundle field '" + field + "': " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) bad(where, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) bad(where + "." + it.key(), "unknown field");
  for (const char* k : keys)
    if (!obj.contains(k)) bad(where + "." + k, "missing");
}

double num(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(field, "not finite");
  return d;
}

std::vector<double> vec(const json& v, const std::string& field) {
  if (!v.is_array()) bad(field, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(num(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

FeatureRow row4(const json& v, const std::string& field) {
  const auto values = vec(v, field);
  if (values.size() != kFeatureDim)
    bad(field, "expected " + std::to_string(kFeatureDim) + " values, got " + std::to_string(values.size()));
  FeatureRow r;
  std::copy(values.begin(), values.end(), r.begin());
  return r;
}

json row_json(const FeatureRow& r) { return json(std::vector<double>(r.begin(), r.end())); }

}  // namespace

std::string bundle_to_json(const ModelBundle& b) {
  json doc;
  doc["format_version"] = kBundleFormatVersion;
  doc["model_type"] = model_kind_name(b.kind());
  json st;
  st["means"] = row_json(b.standardizer.means);
  st["stddevs"] = row_json(b.standardizer.stddevs);
  st["zero_variance"] = std::vector<bool>(b.standardizer.zero_variance.begin(), b.standardizer.zero_variance.end());
  doc["standardizer"] = std::move(st);

  json params;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          params["weights"] = row_json(m.weights);
          params["intercept"] = m.intercept;
        } else if constexpr (std::is_same_v<M, LassoModel>) {
          params["weights"] = row_json(m.weights);
          params["intercept"] = m.intercept;
          params["lambda"] = m.lambda;
          params["standardized_weights"] = row_json(m.std_weights);
          params["sweeps"] = m.sweeps;
        } else if constexpr (std::is_same_v<M, SvrModel>) {
          params["kernel"] = m.kernel.type == KernelType::Rbf ? "rbf" : "linear";
          params["gamma"] = m.kernel.gamma;
          params["C"] = m.c;
          params["epsilon"] = m.epsilon;
          params["bias"] = m.bias;
          json svs = json::array();
          for (const auto& sv : m.support_vectors) svs.push_back(row_json(sv));
          params["support_vectors"] = std::move(svs);
          params["dual_coeffs"] = m.dual_coeffs;
        } else {
          params["layer_sizes"] = m.layer_sizes;
          params["activation"] = "tanh";
          params["weights"] = m.weights;
          params["biases"] = m.biases;
          params["target_mean"] = m.target_mean;
          params["target_scale"] = m.target_scale;
          params["seed"] = m.seed;
        }
      },
      b.model);
  doc["params"] = std::move(params);

  json meta;
  meta["training_block"] = b.metadata.training_block;
  meta["n_samples"] = b.metadata.n_samples;
  json hp = json::object();
  for (const auto& [k, v] : b.metadata.hyperparameters) hp[k] = v;
  meta["hyperparameters"] = std::move(hp);
  doc["metadata"] = std::move(meta);
  return doc.dump(2) + "\n";
}

ModelBundle bundle_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("malformed bundle JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("<root>", "expected an object");
  if (!doc.contains("format_version")) bad("format_version", "missing");
  const auto& version = doc["format_version"];
  const std::string v = version.is_string() ? version.get<std::string>() : version.dump();
  require(v == kBundleFormatVersion, ErrorKind::UnsupportedVersion,
          "unsupported bundle format version '" + v + "' (this build reads version " +
              kBundleFormatVersion + ")");
  only_keys(doc, "<root>", {"format_version", "model_type", "standardizer", "params", "metadata"});
  if (!doc["model_type"].is_string()) bad("model_type", "expected a string");
  const auto type_name = doc["model_type"].get<std::string>();
  ModelKind kind;
  try {
    kind = parse_model_kind(type_name);
  } catch (const Error&) {
    bad("model_type", "unknown model type '" + type_name + "'");
  }

  ModelBundle b;
  const auto& st = doc["standardizer"];
  only_keys(st, "standardizer", {"means", "stddevs", "zero_variance"});
  b.standardizer.means = row4(st["means"], "standardizer.means");
  b.standardizer.stddevs = row4(st["stddevs"], "standardizer.stddevs");
  for (double sd : b.standardizer.stddevs)
    if (!(sd > 0.0)) bad("standardizer.stddevs", "must be > 0");
  const auto& zv = st["zero_variance"];
  if (!zv.is_array() || zv.size() != kFeatureDim) bad("standardizer.zero_variance", "expected 4 booleans");
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    if (!zv[j].is_boolean()) bad("standardizer.zero_variance", "expected booleans");
    b.standardizer.zero_variance[j] = zv[j].get<bool>();
  }

  const auto& p = doc["params"];
  switch (kind) {
    case ModelKind::Linear: {
      only_keys(p, "params", {"weights", "intercept"});
      LinearModel m;
      m.weights = row4(p["weights"], "params.weights");
      m.intercept = num(p["intercept"], "params.intercept");
      b.model = m;
      break;
    }
    case ModelKind::Lasso: {
      only_keys(p, "params", {"weights", "intercept", "lambda", "standardized_weights", "sweeps"});
      LassoModel m;
      m.weights = row4(p["weights"], "params.weights");
      m.intercept = num(p["intercept"], "params.intercept");
      m.lambda = num(p["lambda"], "params.lambda");
      if (m.lambda < 0.0) bad("params.lambda", "must be >= 0");
      m.std_weights = row4(p["standardized_weights"], "params.standardized_weights");
      if (!p["sweeps"].is_number_integer()) bad("params.sweeps", "expected an integer");
      m.sweeps = p["sweeps"].get<int>();
      b.model = m;
      break;
    }
    case ModelKind::Svr: {
      only_keys(p, "params", {"kernel", "gamma", "C", "epsilon", "bias", "support_vectors", "dual_coeffs"});
      SvrModel m;
      if (!p["kernel"].is_string()) bad("params.kernel", "expected a string");
      const auto kname = p["kernel"].get<std::string>();
      if (kname == "rbf") m.kernel.type = KernelType::Rbf;
      else if (kname == "linear") m.kernel.type = KernelType::Linear;
      else bad("params.kernel", "unknown kernel '" + kname + "'");
      m.kernel.gamma = num(p["gamma"], "params.gamma");
      m.c = num(p["C"], "params.C");
      if (!(m.c > 0.0)) bad("params.C", "must be > 0");
      m.epsilon = num(p["epsilon"], "params.epsilon");
      m.bias = num(p["bias"], "params.bias");
      const auto& svs = p["support_vectors"];
      if (!svs.is_array()) bad("params.support_vectors", "expected an array");
      for (std::size_t i = 0; i < svs.size(); ++i)
        m.support_vectors.push_back(row4(svs[i], "params.support_vectors[" + std::to_string(i) + "]"));
      m.dual_coeffs = vec(p["dual_coeffs"], "params.dual_coeffs");
      if (m.dual_coeffs.size() != m.support_vectors.size())
        bad("params.dual_coeffs", "length differs from support_vectors");
      for (double a : m.dual_coeffs)
        if (std::abs(a) > m.c * (1.0 + 1e-12)) bad("params.dual_coeffs", "coefficient outside [-C, C]");
      b.model = std::move(m);
      break;
    }
    case ModelKind::Mlp: {
      only_keys(p, "params", {"layer_sizes", "activation", "weights", "biases", "target_mean",
                              "target_scale", "seed"});
      MlpModel m;
      if (!p["activation"].is_string() || p["activation"].get<std::string>() != "tanh")
        bad("params.activation", "only 'tanh' is supported");
      if (!p["layer_sizes"].is_array()) bad("params.layer_sizes", "expected an array");
      for (const auto& v : p["layer_sizes"]) {
        if (!v.is_number_integer()) bad("params.layer_sizes", "expected integers");
        m.layer_sizes.push_back(v.get<int>());
      }
      const auto& ws = p["weights"];
      const auto& bs = p["biases"];
      if (!ws.is_array() || !bs.is_array()) bad("params.weights", "expected arrays of layers");
      for (std::size_t l = 0; l < ws.size(); ++l)
        m.weights.push_back(vec(ws[l], "params.weights[" + std::to_string(l) + "]"));
      for (std::size_t l = 0; l < bs.size(); ++l)
        m.biases.push_back(vec(bs[l], "params.biases[" + std::to_string(l) + "]"));
      m.target_mean = num(p["target_mean"], "params.target_mean");
      m.target_scale = num(p["target_scale"], "params.target_scale");
      if (!p["seed"].is_number_unsigned() && !p["seed"].is_number_integer()) bad("params.seed", "expected an integer");
      m.seed = p["seed"].get<std::uint64_t>();
      try {
        m.validate();
      } catch (const Error& e) {
        bad("params", e.what());
      }
      b.model = std::move(m);
      break;
    }
  }

  const auto& meta = doc["metadata"];
  only_keys(meta, "metadata", {"training_block", "n_samples", "hyperparameters"});
  if (!meta["training_block"].is_string()) bad("metadata.training_block", "expected a string");
  b.metadata.training_block = meta["training_block"].get<std::string>();
  if (!meta["n_samples"].is_number_integer()) bad("metadata.n_samples", "expected an integer");
  b.metadata.n_samples = meta["n_samples"].get<std::int64_t>();
  const auto& hp = meta["hyperparameters"];
  if (!hp.is_object()) bad("metadata.hyperparameters", "expected an object");
  for (auto it = hp.begin(); it != hp.end(); ++it)
    b.metadata.hyperparameters.emplace_back(it.key(), num(it.value(), "metadata.hyperparameters." + it.key()));
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  const auto text = bundle_to_json(bundle);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write bundle '" + path + "'");
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open bundle '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return bundle_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace mc
