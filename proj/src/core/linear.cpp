#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/log.hpp"
#include "core/regress.hpp"

namespace mc {

Design design_from(const TrainingSet& set) {
  Design d;
  d.x.reserve(set.size());
  d.y.reserve(set.size());
  for (const auto& s : set.samples) {
    require(s.target.has_value(), ErrorKind::Validation,
            "training sample " + s.patch_id() + " has no target");
    d.x.push_back(s.features.as_array());
    d.y.push_back(*s.target);
  }
  return d;
}

FeatureRow Standardizer::apply(const FeatureRow& x) const {
  FeatureRow z;
  for (std::size_t j = 0; j < kFeatureDim; ++j) z[j] = (x[j] - means[j]) / stddevs[j];
  return z;
}

Standardizer fit_standardizer(const std::vector<FeatureRow>& x) {
  require(!x.empty(), ErrorKind::InsufficientData, "cannot standardize an empty matrix");
  const auto n = static_cast<double>(x.size());
  Standardizer s;
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    double mean = 0.0;
    for (const auto& row : x) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (const auto& row : x) var += (row[j] - mean) * (row[j] - mean);
    var /= n;
    const double sd = std::sqrt(var);
    s.means[j] = mean;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      s.stddevs[j] = 1.0;
      s.zero_variance[j] = true;
    } else {
      s.stddevs[j] = sd;
    }
  }
  return s;
}

double LinearModel::predict_raw(const FeatureRow& x) const {
  double f = intercept;
  for (std::size_t j = 0; j < kFeatureDim; ++j) f += weights[j] * x[j];
  return f;
}

double LassoModel::predict_raw(const FeatureRow& x) const {
  double f = intercept;
  for (std::size_t j = 0; j < kFeatureDim; ++j) f += weights[j] * x[j];
  return f;
}

namespace {

using Mat4 = std::array<std::array<double, kFeatureDim>, kFeatureDim>;

// In-place Cholesky; false when a pivot is not clearly positive.
bool cholesky(Mat4& a, double pivot_floor) {
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > pivot_floor)) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < kFeatureDim; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  return true;
}

FeatureRow cholesky_solve(const Mat4& l, const FeatureRow& b) {
  FeatureRow y{};
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * y[k];
    y[i] = s / l[i][i];
  }
  FeatureRow x{};
  for (std::size_t ii = kFeatureDim; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < kFeatureDim; ++k) s -= l[k][ii] * x[k];
    x[ii] = s / l[ii][ii];
  }
  return x;
}

struct Centered {
  Standardizer scaler;
  std::vector<FeatureRow> z;  // standardized and exactly re-centred
  FeatureRow z_mean{};        // column means removed after standardization
  double y_mean = 0.0;
  std::vector<double> yc;     // y - y_mean
};

Centered center(const Design& d) {
  Centered c;
  c.scaler = fit_standardizer(d.x);
  const auto n = static_cast<double>(d.x.size());
  c.z.reserve(d.x.size());
  for (const auto& row : d.x) c.z.push_back(c.scaler.apply(row));
  for (const auto& row : c.z)
    for (std::size_t j = 0; j < kFeatureDim; ++j) c.z_mean[j] += row[j] / n;
  for (auto& row : c.z)
    for (std::size_t j = 0; j < kFeatureDim; ++j) row[j] -= c.z_mean[j];
  for (double v : d.y) c.y_mean += v / n;
  c.yc.reserve(d.y.size());
  for (double v : d.y) c.yc.push_back(v - c.y_mean);
  return c;
}

// Map standardized-space weights (on re-centred z) back to raw units.
void to_original(const Centered& c, const FeatureRow& w_std, FeatureRow& w, double& b) {
  b = c.y_mean;
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    w[j] = w_std[j] / c.scaler.stddevs[j];
    // z_centred = (x - mean)/sd - z_mean
    b -= w[j] * c.scaler.means[j] + w_std[j] * c.z_mean[j];
  }
}

void require_finite(const FeatureRow& w, double b, const char* what) {
  for (double v : w) require(std::isfinite(v), ErrorKind::InsufficientData, std::string(what) + " produced non-finite weights");
  require(std::isfinite(b), ErrorKind::InsufficientData, std::string(what) + " produced a non-finite intercept");
}

}  // namespace

LinearModel fit_ols(const Design& d) {
  require(d.x.size() >= 2, ErrorKind::InsufficientData,
          "ordinary least squares needs at least 2 samples, got " + std::to_string(d.x.size()));
  const Centered c = center(d);
  const auto n = static_cast<double>(c.z.size());

  Mat4 gram{};
  FeatureRow rhs{};
  for (std::size_t i = 0; i < c.z.size(); ++i) {
    const auto& z = c.z[i];
    for (std::size_t a = 0; a < kFeatureDim; ++a) {
      rhs[a] += z[a] * c.yc[i] / n;
      for (std::size_t b = 0; b < kFeatureDim; ++b) gram[a][b] += z[a] * z[b] / n;
    }
  }
  double max_diag = 0.0;
  for (std::size_t j = 0; j < kFeatureDim; ++j) max_diag = std::max(max_diag, gram[j][j]);
  Mat4 system = gram;
  Mat4 factor = system;
  if (!cholesky(factor, 1e-12 * std::max(1.0, max_diag))) {
    for (std::size_t j = 0; j < kFeatureDim; ++j) system[j][j] += 1e-10;
    factor = system;
    require(cholesky(factor, 0.0), ErrorKind::InsufficientData,
            "least-squares system is singular even with ridge jitter");
  }
  FeatureRow w = cholesky_solve(factor, rhs);
  // Two rounds of iterative refinement against the (possibly jittered) system.
  for (int round = 0; round < 2; ++round) {
    FeatureRow resid = rhs;
    for (std::size_t a = 0; a < kFeatureDim; ++a)
      for (std::size_t b = 0; b < kFeatureDim; ++b) resid[a] -= system[a][b] * w[b];
    const FeatureRow dw = cholesky_solve(factor, resid);
    for (std::size_t j = 0; j < kFeatureDim; ++j) w[j] += dw[j];
  }
  for (std::size_t j = 0; j < kFeatureDim; ++j)
    if (c.scaler.zero_variance[j]) w[j] = 0.0;

  LinearModel m;
  to_original(c, w, m.weights, m.intercept);
  require_finite(m.weights, m.intercept, "least squares");
  return m;
}

LinearModel fit_ols(const TrainingSet& train) { return fit_ols(design_from(train)); }

double lasso_lambda_max(const Design& d) {
  require(d.x.size() >= 2, ErrorKind::InsufficientData, "lasso needs at least 2 samples");
  const Centered c = center(d);
  const auto n = static_cast<double>(c.z.size());
  double best = 0.0;
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    if (c.scaler.zero_variance[j]) continue;
    double rho = 0.0;
    for (std::size_t i = 0; i < c.z.size(); ++i) rho += c.z[i][j] * c.yc[i];
    best = std::max(best, std::abs(rho / n));
  }
  return best;
}

LassoModel fit_lasso(const Design& d, double lambda) {
  require(d.x.size() >= 2, ErrorKind::InsufficientData,
          "lasso needs at least 2 samples, got " + std::to_string(d.x.size()));
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument,
          "lasso lambda must be finite and >= 0");
  const Centered c = center(d);
  const std::size_t n = c.z.size();
  const auto nd = static_cast<double>(n);

  FeatureRow col_sq{};
  for (const auto& row : c.z)
    for (std::size_t j = 0; j < kFeatureDim; ++j) col_sq[j] += row[j] * row[j] / nd;

  // Minimizes (1/2N)||yc - Z w||^2 + lambda ||w||_1; the intercept is the
  // (unpenalized) mean because Z and yc are centred.
  FeatureRow w{};
  std::vector<double> r = c.yc;
  int sweep = 0;
  for (; sweep < kLassoMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      if (c.scaler.zero_variance[j] || col_sq[j] <= 0.0) continue;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += c.z[i][j] * r[i];
      rho = rho / nd + col_sq[j] * w[j];
      double updated = 0.0;
      if (rho > lambda) updated = (rho - lambda) / col_sq[j];
      else if (rho < -lambda) updated = (rho + lambda) / col_sq[j];
      const double delta = updated - w[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) r[i] -= delta * c.z[i][j];
        w[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change <= kLassoTolerance) {
      ++sweep;
      break;
    }
  }
  if (sweep >= kLassoMaxSweeps) log::debug("lasso stopped at the sweep limit (lambda=", lambda, ")");

  LassoModel m;
  m.lambda = lambda;
  m.std_weights = w;
  m.sweeps = sweep;
  to_original(c, w, m.weights, m.intercept);
  require_finite(m.weights, m.intercept, "lasso");
  return m;
}

LassoModel fit_lasso(const TrainingSet& train, double lambda) {
  return fit_lasso(design_from(train), lambda);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 13; ++k) grid.push_back(std::pow(10.0, -4.0 + 5.0 * k / 12.0));
  return grid;
}

double lasso_cv_error(const Design& d, double lambda, int folds) {
  const std::size_t n = d.x.size();
  folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(folds), n));
  double sse = 0.0;
  for (int f = 0; f < folds; ++f) {
    Design train, test;
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = (static_cast<int>(i % static_cast<std::size_t>(folds)) == f) ? test : train;
      dst.x.push_back(d.x[i]);
      dst.y.push_back(d.y[i]);
    }
    const LassoModel m = fit_lasso(train, lambda);
    for (std::size_t i = 0; i < test.x.size(); ++i) {
      const double e = m.predict_raw(test.x[i]) - test.y[i];
      sse += e * e;
    }
  }
  return sse / static_cast<double>(n);
}

double select_lasso_lambda(const Design& d, const std::vector<double>& grid, int folds) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "lambda grid is empty");
  const std::size_t n = d.x.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(folds), n);
  // Each training fold must keep at least two samples.
  if (k < 2 || n - (n + k - 1) / k < 2) {
    log::info("too few samples for lasso cross-validation; using lambda=", grid.front());
    return grid.front();
  }
  double best_lambda = grid.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    const double err = lasso_cv_error(d, lambda, static_cast<int>(k));
    if (err < best_err) {
      best_err = err;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace mc
