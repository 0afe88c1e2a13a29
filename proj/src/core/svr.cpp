#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/log.hpp"
#include "core/regress.hpp"

namespace mc {

double Kernel::operator()(const FeatureRow& a, const FeatureRow& b) const {
  if (type == KernelType::Linear) {
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatureDim; ++j) s += a[j] * b[j];
    return s;
  }
  double d2 = 0.0;
  for (std::size_t j = 0; j < kFeatureDim; ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
  return std::exp(-gamma * d2);
}

double SvrModel::predict_std(const FeatureRow& z) const {
  double f = bias;
  for (std::size_t i = 0; i < support_vectors.size(); ++i)
    f += dual_coeffs[i] * kernel(support_vectors[i], z);
  return f;
}

namespace {

constexpr double kTau = 1e-12;

}  // namespace

// The dual is posed over 2N variables beta = (alpha, alpha*) with signs
// s = (+1..., -1...):
//   min 1/2 beta' Q beta + p' beta,  Q_ij = s_i s_j K(i mod N, j mod N),
//   p = (eps - y, eps + y),  s' beta = 0,  0 <= beta <= C.
// Pairs are chosen by maximal violation for i and second-order gain for j;
// the loop ends once the KKT gap m(beta) - M(beta) drops below tolerance.
SvrSolution solve_svr_dual(const std::vector<FeatureRow>& z, const std::vector<double>& y,
                           const SvrOptions& opt) {
  const std::size_t n = z.size();
  require(n >= 2, ErrorKind::InsufficientData,
          "SVR needs at least 2 samples, got " + std::to_string(n));
  require(y.size() == n, ErrorKind::InvalidArgument, "SVR targets and rows differ in length");
  require(opt.c > 0.0 && std::isfinite(opt.c), ErrorKind::InvalidArgument, "SVR C must be > 0");
  require(opt.epsilon >= 0.0 && std::isfinite(opt.epsilon), ErrorKind::InvalidArgument,
          "SVR epsilon must be >= 0");
  require(opt.kernel.type == KernelType::Linear || opt.kernel.gamma > 0.0,
          ErrorKind::InvalidArgument, "RBF gamma must be > 0");

  std::vector<double> k(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) k[a * n + b] = k[b * n + a] = opt.kernel(z[a], z[b]);

  const std::size_t l = 2 * n;
  const double c = opt.c;
  std::vector<double> beta(l, 0.0), grad(l);
  std::vector<signed char> sign(l);
  for (std::size_t t = 0; t < n; ++t) {
    sign[t] = 1;
    sign[t + n] = -1;
    grad[t] = opt.epsilon - y[t];
    grad[t + n] = opt.epsilon + y[t];
  }
  auto kij = [&](std::size_t i, std::size_t j) { return k[(i % n) * n + (j % n)]; };
  auto q = [&](std::size_t i, std::size_t j) { return sign[i] * sign[j] * kij(i, j); };
  auto upper = [&](std::size_t t) { return beta[t] >= c; };
  auto lower = [&](std::size_t t) { return beta[t] <= 0.0; };

  SvrSolution sol;
  long iter = 0;
  double gap = 0.0;
  for (; iter < opt.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i_sel = -1;
    for (std::size_t t = 0; t < l; ++t) {
      if (sign[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i_sel = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t j_sel = -1;
    double best_gain = std::numeric_limits<double>::infinity();
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(i_sel, 0));
    const double qii = kij(i, i);
    for (std::size_t t = 0; t < l; ++t) {
      if (sign[t] == 1) {
        if (lower(t)) continue;
        const double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (i_sel >= 0 && diff > 0.0) {
          const double quad = std::max(qii + kij(t, t) - 2.0 * sign[i] * q(i, t), kTau);
          const double gain = -(diff * diff) / quad;
          if (gain <= best_gain) {
            best_gain = gain;
            j_sel = static_cast<std::ptrdiff_t>(t);
          }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (i_sel >= 0 && diff > 0.0) {
          const double quad = std::max(qii + kij(t, t) + 2.0 * sign[i] * q(i, t), kTau);
          const double gain = -(diff * diff) / quad;
          if (gain <= best_gain) {
            best_gain = gain;
            j_sel = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (i_sel < 0 || j_sel < 0 || gap < opt.tolerance) break;

    const auto j = static_cast<std::size_t>(j_sel);
    const double old_i = beta[i], old_j = beta[j];
    if (sign[i] != sign[j]) {
      const double quad = std::max(kij(i, i) + kij(j, j) + 2.0 * q(i, j), kTau);
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = beta[i] - beta[j];
      beta[i] += delta;
      beta[j] += delta;
      if (diff > 0.0) {
        if (beta[j] < 0.0) {
          beta[j] = 0.0;
          beta[i] = diff;
        }
      } else if (beta[i] < 0.0) {
        beta[i] = 0.0;
        beta[j] = -diff;
      }
      if (diff > 0.0) {
        if (beta[i] > c) {
          beta[i] = c;
          beta[j] = c - diff;
        }
      } else if (beta[j] > c) {
        beta[j] = c;
        beta[i] = c + diff;
      }
    } else {
      const double quad = std::max(kij(i, i) + kij(j, j) - 2.0 * q(i, j), kTau);
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = beta[i] + beta[j];
      beta[i] -= delta;
      beta[j] += delta;
      if (sum > c) {
        if (beta[i] > c) {
          beta[i] = c;
          beta[j] = sum - c;
        }
      } else if (beta[j] < 0.0) {
        beta[j] = 0.0;
        beta[i] = sum;
      }
      if (sum > c) {
        if (beta[j] > c) {
          beta[j] = c;
          beta[i] = sum - c;
        }
      } else if (beta[i] < 0.0) {
        beta[i] = 0.0;
        beta[j] = sum;
      }
    }
    const double di = beta[i] - old_i, dj = beta[j] - old_j;
    for (std::size_t t = 0; t < l; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }
  if (iter >= opt.max_iterations)
    log::warn("SVR solver hit the iteration limit with KKT gap ", gap);

  // Bias: average over free variables, else the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (std::size_t t = 0; t < l; ++t) {
    const double yg = sign[t] * grad[t];
    if (upper(t)) {
      if (sign[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);

  sol.coeffs.resize(n);
  for (std::size_t t = 0; t < n; ++t) sol.coeffs[t] = beta[t] - beta[t + n];
  sol.bias = -rho;
  sol.iterations = iter;
  sol.max_violation = std::max(gap, 0.0);
  return sol;
}

namespace {

SvrModel svr_from_solution(const std::vector<FeatureRow>& z, const SvrSolution& sol,
                           const SvrOptions& opt) {
  SvrModel m;
  m.kernel = opt.kernel;
  m.c = opt.c;
  m.epsilon = opt.epsilon;
  m.bias = sol.bias;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (sol.coeffs[i] == 0.0) continue;
    m.support_vectors.push_back(z[i]);
    m.dual_coeffs.push_back(sol.coeffs[i]);
  }
  return m;
}

}  // namespace

std::pair<SvrModel, Standardizer> fit_svr(const TrainingSet& train, const SvrOptions& opt) {
  const Design d = design_from(train);
  require(d.x.size() >= 2, ErrorKind::InsufficientData,
          "SVR needs at least 2 samples, got " + std::to_string(d.x.size()));
  require(opt.c > 0.0, ErrorKind::InvalidArgument, "SVR C must be > 0");
  const Standardizer s = fit_standardizer(d.x);
  std::vector<FeatureRow> z;
  z.reserve(d.x.size());
  for (const auto& row : d.x) z.push_back(s.apply(row));
  const SvrSolution sol = solve_svr_dual(z, d.y, opt);
  return {svr_from_solution(z, sol, opt), s};
}

}  // namespace mc
