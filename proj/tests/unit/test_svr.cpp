#include <gtest/gtest.h>

#include <random>

#include "core/error.hpp"
#include "core/regress.hpp"
#include "oracles.hpp"

namespace {

std::vector<std::vector<double>> gram(const std::vector<mc::FeatureRow>& z, const mc::Kernel& k) {
  std::vector<std::vector<double>> g(z.size(), std::vector<double>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < z.size(); ++j) g[i][j] = k(z[i], z[j]);
  return g;
}

mc::TrainingSet linear_set(double slope, double icpt, int n) {
  mc::TrainingSet t;
  for (int i = 0; i < n; ++i) {
    mc::PatchSample s;
    s.block_id = "b";
    s.col = i;
    s.features = {static_cast<double>(i), 0, 0, 0};
    s.target = slope * i + icpt;
    t.samples.push_back(s);
  }
  return t;
}

}  // namespace

TEST(Svr, ConstantTargetIsAllInsideTube) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<mc::FeatureRow> z(12);
  for (auto& r : z) r = {u(gen), u(gen), u(gen), u(gen)};
  const std::vector<double> y(12, 3.0);
  mc::SvrOptions opt;
  opt.epsilon = 0.1;
  const auto sol = mc::solve_svr_dual(z, y, opt);
  for (double c : sol.coeffs) EXPECT_EQ(c, 0.0);
  EXPECT_NEAR(sol.bias, 3.0, 1e-9);
}

TEST(Svr, DualMatchesBruteForceOnSmallFixtures) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5), uy(-2.0, 2.0);
  for (int n = 2; n <= 5; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<mc::FeatureRow> z(static_cast<std::size_t>(n));
      std::vector<double> y(static_cast<std::size_t>(n));
      for (auto& r : z) r = {u(gen), u(gen), u(gen), u(gen)};
      for (auto& v : y) v = uy(gen);
      for (auto type : {mc::KernelType::Linear, mc::KernelType::Rbf}) {
        mc::SvrOptions opt;
        opt.c = 1.0;
        opt.epsilon = 0.2;
        opt.kernel = {type, 0.5};
        opt.tolerance = 1e-8;
        const auto sol = mc::solve_svr_dual(z, y, opt);
        const auto k = gram(z, opt.kernel);
        const double got = oracle::svr_dual(k, y, opt.epsilon, sol.coeffs);
        const double ref = oracle::svr_dual_brute_force(k, y, opt.epsilon, opt.c);
        EXPECT_NEAR(got, ref, 1e-3) << "n=" << n << " rep=" << rep;
        EXPECT_GE(got, ref - 1e-9);
      }
    }
  }
}

TEST(Svr, BoxAndEqualityConstraints) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-2, 2);
  std::normal_distribution<double> e(0, 3);
  std::vector<mc::FeatureRow> z(80);
  std::vector<double> y;
  for (auto& r : z) {
    r = {u(gen), u(gen), u(gen), u(gen)};
    y.push_back(4 * r[0] - r[1] + e(gen));
  }
  mc::SvrOptions opt;
  opt.c = 2.0;
  const auto sol = mc::solve_svr_dual(z, y, opt);
  double sum = 0;
  for (double c : sol.coeffs) {
    EXPECT_LE(std::abs(c), opt.c + 1e-12);
    sum += c;
  }
  EXPECT_NEAR(sum, 0.0, 1e-9);
  EXPECT_LE(sol.max_violation, opt.tolerance);
}

TEST(Svr, TubeFeasibilityOnExactLinearData) {
  auto train = linear_set(2.0, 1.0, 10);
  mc::SvrOptions opt;
  opt.epsilon = 0.05;
  opt.c = 100.0;
  opt.kernel = {mc::KernelType::Linear, 0.0};
  opt.tolerance = 1e-9;
  const auto [model, scaler] = mc::fit_svr(train, opt);
  for (const auto& s : train.samples) {
    const double f = model.predict_std(scaler.apply(s.features.as_array()));
    EXPECT_LE(std::abs(f - *s.target), opt.epsilon + 1e-6);
  }
}

TEST(Svr, RejectsBadOptions) {
  const auto train = linear_set(1, 0, 5);
  mc::SvrOptions opt;
  opt.c = 0.0;
  try {
    mc::fit_svr(train, opt);
    FAIL();
  } catch (const mc::Error& e) {
    EXPECT_EQ(e.kind(), mc::ErrorKind::InvalidArgument);
  }
  opt = {};
  opt.epsilon = -1;
  EXPECT_THROW(mc::fit_svr(train, opt), mc::Error);
  EXPECT_THROW(mc::fit_svr(linear_set(1, 0, 1), {}), mc::Error);
}

TEST(Svr, RbfFitsNonlinearShape) {
  mc::TrainingSet t;
  for (int i = 0; i < 40; ++i) {
    mc::PatchSample s;
    s.block_id = "b";
    s.col = i;
    const double x = i / 4.0;
    s.features = {x, 0, 0, 0};
    s.target = 10 + 5 * std::sin(x);
    t.samples.push_back(s);
  }
  mc::SvrOptions opt;
  opt.c = 100;
  opt.epsilon = 0.1;
  opt.kernel = {mc::KernelType::Rbf, 5.0};
  const auto [model, scaler] = mc::fit_svr(t, opt);
  double worst = 0;
  for (const auto& s : t.samples)
    worst = std::max(worst, std::abs(model.predict_std(scaler.apply(s.features.as_array())) - *s.target));
  EXPECT_LT(worst, 0.5);
}
