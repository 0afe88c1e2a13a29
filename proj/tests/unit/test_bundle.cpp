#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "json.hpp"

#include "core/error.hpp"
#include "core/evaluate.hpp"
#include "core/regress.hpp"
#include "core/synth.hpp"

namespace {

mc::TrainingSet noisy_set(std::uint64_t seed, int n) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> count(0, 30), ratio(0, 0.5);
  std::normal_distribution<double> e(0, 1.0);
  mc::TrainingSet t;
  for (int i = 0; i < n; ++i) {
    mc::PatchSample s;
    s.block_id = "b";
    s.row = i / 10;
    s.col = i % 10;
    s.features = {count(gen), ratio(gen), ratio(gen), ratio(gen)};
    s.target = std::max(0.0, 1.2 * s.features.mound_count + 10 * s.features.water_ratio + e(gen));
    t.samples.push_back(s);
  }
  return t;
}

mc::FitOptions quick_options() {
  mc::FitOptions opt;
  opt.mlp.epochs = 200;
  opt.training_block = "b";
  return opt;
}

mc::ModelBundle linear_bundle(mc::FeatureRow w, double b) {
  mc::ModelBundle bundle;
  bundle.model = mc::LinearModel{w, b};
  return bundle;
}

mc::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const mc::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return mc::ErrorKind::Generation;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Bundle, RoundTripAllKindsGivesBitEqualPredictions) {
  const auto train = noisy_set(1, 60);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> count(0, 40), ratio(0, 1);
  for (auto kind : {mc::ModelKind::Linear, mc::ModelKind::Svr, mc::ModelKind::Lasso, mc::ModelKind::Mlp}) {
    const auto bundle = mc::fit_bundle(kind, train, quick_options());
    EXPECT_EQ(bundle.kind(), kind);
    EXPECT_EQ(bundle.metadata.training_block, "b");
    EXPECT_EQ(bundle.metadata.n_samples, 60);
    const auto path = temp_path(std::string("mc_bundle_") + mc::model_kind_name(kind) + ".json");
    mc::save_bundle(bundle, path);
    const auto loaded = mc::load_bundle(path);
    EXPECT_EQ(loaded, bundle) << mc::model_kind_name(kind);
    for (int i = 0; i < 100; ++i) {
      const mc::FeatureVector f{count(gen), ratio(gen), ratio(gen), ratio(gen)};
      EXPECT_EQ(mc::predict(loaded, f), mc::predict(bundle, f));
    }
  }
}

TEST(Bundle, SameDataSameBundleText) {
  const auto train = noisy_set(3, 40);
  for (auto kind : {mc::ModelKind::Linear, mc::ModelKind::Svr, mc::ModelKind::Lasso, mc::ModelKind::Mlp})
    EXPECT_EQ(mc::bundle_to_json(mc::fit_bundle(kind, train, quick_options())),
              mc::bundle_to_json(mc::fit_bundle(kind, train, quick_options())));
}

TEST(Bundle, TruncatedFileIsParseError) {
  const auto text = mc::bundle_to_json(mc::fit_bundle(mc::ModelKind::Linear, noisy_set(1, 20), {}));
  EXPECT_EQ(kind_of([&] { mc::bundle_from_json(text.substr(0, text.size() / 2)); }), mc::ErrorKind::Parse);
  const auto path = temp_path("mc_truncated.json");
  std::ofstream(path) << text.substr(0, 10);
  EXPECT_EQ(kind_of([&] { mc::load_bundle(path); }), mc::ErrorKind::Parse);
}

TEST(Bundle, VersionAndFieldChecks) {
  auto j = nlohmann::json::parse(mc::bundle_to_json(mc::fit_bundle(mc::ModelKind::Lasso, noisy_set(1, 20), {})));
  auto v = j;
  v["format_version"] = "99";
  EXPECT_EQ(kind_of([&] { mc::bundle_from_json(v.dump()); }), mc::ErrorKind::UnsupportedVersion);
  auto extra = j;
  extra["params"]["surprise"] = 1;
  EXPECT_EQ(kind_of([&] { mc::bundle_from_json(extra.dump()); }), mc::ErrorKind::Validation);
  auto missing = j;
  missing.erase("standardizer");
  EXPECT_EQ(kind_of([&] { mc::bundle_from_json(missing.dump()); }), mc::ErrorKind::Validation);
  auto bad_type = j;
  bad_type["model_type"] = "forest";
  EXPECT_THROW(mc::bundle_from_json(bad_type.dump()), mc::Error);
  EXPECT_EQ(kind_of([] { mc::load_bundle("/nonexistent/bundle.json"); }), mc::ErrorKind::Io);
}

TEST(Predict, IdentityLinearBundle) {
  EXPECT_DOUBLE_EQ(mc::predict(linear_bundle({1, 0, 0, 0}, 0), {7, 0, 0, 0}), 7.0);
}

TEST(Predict, NegativeOutputClampsToZero) {
  EXPECT_EQ(mc::predict(linear_bundle({0, 0, 0, 0}, -3.2), {7, 0.1, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(mc::predict_raw(linear_bundle({0, 0, 0, 0}, -3.2), {7, 0.1, 0, 0}), -3.2);
}

TEST(Predict, SvrOnExactLine) {
  mc::TrainingSet t;
  for (int i = 0; i < 10; ++i) {
    mc::PatchSample s;
    s.block_id = "b";
    s.col = i;
    s.features = {static_cast<double>(i), 0, 0, 0};
    s.target = 2.0 * i + 1.0;
    t.samples.push_back(s);
  }
  mc::FitOptions opt;
  opt.tune_svr = false;
  opt.svr.kernel = {mc::KernelType::Linear, 0.0};
  opt.svr.epsilon = 0.05;
  opt.svr.c = 100;
  const auto b = mc::fit_bundle(mc::ModelKind::Svr, t, opt);
  EXPECT_NEAR(mc::predict(b, {5, 0, 0, 0}), 11.0, 0.05 + 1e-6);
}

TEST(SelectBest, SingleCandidate) {
  const auto val = noisy_set(5, 30);
  const auto sel = mc::select_best({linear_bundle({1, 0, 0, 0}, 0)}, val);
  EXPECT_EQ(sel.best, 0u);
  ASSERT_EQ(sel.rcps.size(), 1u);
}

TEST(SelectBest, PerfectBeatsZero) {
  mc::TrainingSet val;
  for (int i = 0; i < 10; ++i) {
    mc::PatchSample s;
    s.block_id = "v";
    s.col = i;
    s.features = {static_cast<double>(i + 1), 0, 0, 0};
    s.target = i + 1;
    val.samples.push_back(s);
  }
  const auto sel = mc::select_best({linear_bundle({0, 0, 0, 0}, 0), linear_bundle({1, 0, 0, 0}, 0)}, val);
  EXPECT_EQ(sel.best, 1u);
  EXPECT_DOUBLE_EQ(sel.rcps[0], 0.0);
  EXPECT_DOUBLE_EQ(sel.rcps[1], 1.0);
  EXPECT_EQ(sel.ground_truth, 55);
}

TEST(SelectBest, TiesGoToFixedModelOrder) {
  mc::TrainingSet val = noisy_set(6, 10);
  mc::ModelBundle lasso;
  lasso.model = mc::LassoModel{{1, 0, 0, 0}, 0, 0, {}, 0};
  const auto lin = linear_bundle({1, 0, 0, 0}, 0);
  EXPECT_EQ(mc::select_best({lasso, lin}, val).best, 1u);
  EXPECT_EQ(mc::select_best({lin, lasso}, val).best, 0u);
}

TEST(SelectBest, Errors) {
  EXPECT_THROW(mc::select_best({}, noisy_set(1, 5)), mc::Error);
  EXPECT_THROW(mc::select_best({linear_bundle({1, 0, 0, 0}, 0)}, {}), mc::Error);
}

TEST(SelectBest, MatchesRecomputedRcpsOnSyntheticBlock) {
  mc::SynthParams p;
  p.seed = 42;
  const auto blk = mc::generate_block(p, "s42");
  const auto grid = mc::build_grid(p.block_width, p.block_height, p.patch_size, true);
  const auto val = mc::build_dataset(&blk.truth, blk.detections, grid, "s42");
  mc::SynthParams q = p;
  q.seed = 43;
  const auto tb = mc::generate_block(q, "s43");
  const auto train = mc::build_dataset(&tb.truth, tb.detections, grid, "s43");
  std::vector<mc::ModelBundle> cands;
  for (auto kind : {mc::ModelKind::Linear, mc::ModelKind::Svr, mc::ModelKind::Lasso, mc::ModelKind::Mlp})
    cands.push_back(mc::fit_bundle(kind, train, quick_options()));
  const auto sel = mc::select_best(cands, val);
  double gt = 0;
  for (const auto& s : val.samples) gt += *s.target;
  std::vector<double> recomputed;
  for (const auto& c : cands) {
    double total = 0;
    for (const auto& s : val.samples) total += std::max(0.0, mc::predict_raw(c, s.features.as_array()));
    const double count = std::floor(total + 0.5);
    recomputed.push_back(1.0 - std::abs(count - gt) / gt);
  }
  const auto best = static_cast<std::size_t>(std::max_element(recomputed.begin(), recomputed.end()) - recomputed.begin());
  EXPECT_EQ(sel.best, best);
  for (std::size_t i = 0; i < cands.size(); ++i) EXPECT_DOUBLE_EQ(sel.rcps[i], recomputed[i]);
}

TEST(Correction, RaisesMeanCountOnHeldOutBlock) {
  mc::SynthParams p;
  p.seed = 11;
  const auto grid = mc::build_grid(p.block_width, p.block_height, p.patch_size, true);
  const auto a = mc::generate_block(p, "a");
  p.seed = 12;
  const auto b = mc::generate_block(p, "b");
  const auto train = mc::build_dataset(&a.truth, a.detections, grid, "a");
  const auto test = mc::build_dataset(&b.truth, b.detections, grid, "b");
  for (auto kind : {mc::ModelKind::Linear, mc::ModelKind::Svr, mc::ModelKind::Lasso}) {
    const auto bundle = mc::fit_bundle(kind, train, quick_options());
    double pred = 0, local = 0;
    for (const auto& s : test.samples) {
      pred += mc::predict(bundle, s.features);
      local += s.features.mound_count;
    }
    EXPECT_GE(pred, local) << mc::model_kind_name(kind);
  }
}
