#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "core/features.hpp"

namespace mc {

using FeatureRow = std::array<double, kFeatureDim>;

struct Design {
  std::vector<FeatureRow> x;
  std::vector<double> y;
};

// Requires every sample to carry a target.
Design design_from(const TrainingSet& set);

// ---------------------------------------------------------------------------
// Standardization

struct Standardizer {
  FeatureRow means{};
  FeatureRow stddevs{1.0, 1.0, 1.0, 1.0};
  std::array<bool, kFeatureDim> zero_variance{};

  static Standardizer identity() { return {}; }
  FeatureRow apply(const FeatureRow& x) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

// Population statistics; a column with (near) zero spread keeps stddev 1 and
// is flagged.
Standardizer fit_standardizer(const std::vector<FeatureRow>& x);

// ---------------------------------------------------------------------------
// Models. Linear and lasso weights are stored in original feature units.

struct LinearModel {
  FeatureRow weights{};
  double intercept = 0.0;

  double predict_raw(const FeatureRow& x) const;
  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct LassoModel {
  FeatureRow weights{};
  double intercept = 0.0;
  double lambda = 0.0;
  // Standardized-space solution (what the penalty acts on).
  FeatureRow std_weights{};
  int sweeps = 0;

  double predict_raw(const FeatureRow& x) const;
  friend bool operator==(const LassoModel&, const LassoModel&) = default;
};

enum class KernelType { Rbf, Linear };

struct Kernel {
  KernelType type = KernelType::Rbf;
  double gamma = 0.25;

  double operator()(const FeatureRow& a, const FeatureRow& b) const;
  friend bool operator==(const Kernel&, const Kernel&) = default;
};

// Operates on standardized rows.
struct SvrModel {
  std::vector<FeatureRow> support_vectors;
  std::vector<double> dual_coeffs;  // alpha - alpha*, one per support vector
  double bias = 0.0;
  Kernel kernel;
  double c = 10.0;
  double epsilon = 0.5;

  double predict_std(const FeatureRow& z) const;
  friend bool operator==(const SvrModel&, const SvrModel&) = default;
};

// Operates on standardized rows; the output is de-standardized with the
// stored target mean/scale.
struct MlpModel {
  std::vector<int> layer_sizes;                    // 4, hidden..., 1
  std::vector<std::vector<double>> weights;        // layer l: out x in, row-major
  std::vector<std::vector<double>> biases;         // layer l: out
  double target_mean = 0.0;
  double target_scale = 1.0;
  std::uint64_t seed = 0;

  double forward_std(const FeatureRow& z) const;  // standardized target units
  double predict_std(const FeatureRow& z) const { return target_mean + target_scale * forward_std(z); }

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& flat);
  void validate() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

// Declaration order is the fixed tie-break order used by select_best.
enum class ModelKind { Linear = 0, Svr = 1, Lasso = 2, Mlp = 3 };

const char* model_kind_name(ModelKind kind) noexcept;
ModelKind parse_model_kind(const std::string& name);

struct BundleMetadata {
  std::string training_block;
  std::int64_t n_samples = 0;
  std::vector<std::pair<std::string, double>> hyperparameters;

  friend bool operator==(const BundleMetadata&, const BundleMetadata&) = default;
};

inline constexpr const char* kBundleFormatVersion = "1";

struct ModelBundle {
  std::variant<LinearModel, SvrModel, LassoModel, MlpModel> model;
  Standardizer standardizer;
  BundleMetadata metadata;

  ModelKind kind() const { return static_cast<ModelKind>(model.index()); }
  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

// ---------------------------------------------------------------------------
// Fitting

LinearModel fit_ols(const TrainingSet& train);
LinearModel fit_ols(const Design& d);

// Smallest lambda for which every standardized weight is exactly zero.
double lasso_lambda_max(const Design& d);

inline constexpr double kLassoTolerance = 1e-8;
inline constexpr int kLassoMaxSweeps = 10000;

LassoModel fit_lasso(const TrainingSet& train, double lambda);
LassoModel fit_lasso(const Design& d, double lambda);

// 13 log-spaced values from 1e-4 to 10.
std::vector<double> default_lambda_grid();
// Mean squared error under k-fold cross-validation (fold = index mod k).
double lasso_cv_error(const Design& d, double lambda, int folds);
double select_lasso_lambda(const Design& d, const std::vector<double>& grid, int folds = 5);

struct SvrOptions {
  double c = 10.0;
  double epsilon = 0.5;
  Kernel kernel{KernelType::Rbf, 0.25};
  double tolerance = 1e-4;
  long max_iterations = 10'000'000;
};

// Full dual solution over the training rows, for inspection and testing.
struct SvrSolution {
  std::vector<double> coeffs;  // alpha_i - alpha*_i per training row
  double bias = 0.0;
  long iterations = 0;
  double max_violation = 0.0;
};

// epsilon-SVR dual by SMO with second-order working-set selection.
SvrSolution solve_svr_dual(const std::vector<FeatureRow>& z, const std::vector<double>& y,
                           const SvrOptions& opt);

// Standardizes internally; returns the model in standardized coordinates
// together with the standardizer it was fit under.
std::pair<SvrModel, Standardizer> fit_svr(const TrainingSet& train, const SvrOptions& opt);

struct MlpOptions {
  std::vector<int> hidden_sizes{16, 8};
  double learning_rate = 0.01;
  int epochs = 5000;
  std::uint64_t seed = 0;
  int max_halvings = 20;
};

struct MlpTrace {
  std::vector<double> loss;  // loss after each accepted epoch, loss[0] = initial
  int halvings = 0;
};

MlpModel init_mlp(const std::vector<int>& hidden_sizes, std::uint64_t seed);
// Mean squared error on standardized targets and its gradient with respect
// to the flat parameter vector.
double mlp_loss_and_gradient(const MlpModel& model, const std::vector<FeatureRow>& z,
                             const std::vector<double>& t, std::vector<double>* gradient);
std::pair<MlpModel, Standardizer> fit_mlp(const TrainingSet& train, const MlpOptions& opt,
                                          MlpTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Bundles

struct FitOptions {
  SvrOptions svr;
  bool tune_svr = true;       // CV over gamma x epsilon grid
  double lasso_lambda = -1.0; // < 0: choose by 5-fold CV on the default grid
  MlpOptions mlp;
  std::string training_block;
};

ModelBundle fit_bundle(ModelKind kind, const TrainingSet& train, const FitOptions& opt);

// Standardize, evaluate, clamp to >= 0.
double predict(const ModelBundle& bundle, const FeatureVector& features);
double predict_raw(const ModelBundle& bundle, const FeatureRow& x);

struct Selection {
  std::size_t best = 0;
  std::vector<double> rcps;
  std::vector<std::int64_t> counts;
  std::int64_t ground_truth = 0;
};

Selection select_best(const std::vector<ModelBundle>& candidates, const TrainingSet& validation);

std::string bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const std::string& text);
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace mc
