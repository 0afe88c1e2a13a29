#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "core/annotations.hpp"
#include "core/error.hpp"
#include "core/features.hpp"
#include "core/synth.hpp"
#include "oracles.hpp"

namespace {

mc::AnnotationSet image(std::int64_t w, std::int64_t h) {
  mc::AnnotationSet s;
  s.image_id = "img";
  s.image_width = w;
  s.image_height = h;
  return s;
}

mc::Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

mc::Polygon square_mound(double cx, double cy) { return rect(cx - 1, cy - 1, cx + 1, cy + 1); }

mc::PatchSample sample(const std::string& block, int r, int c, mc::FeatureVector f,
                       std::optional<double> y) {
  mc::PatchSample s;
  s.block_id = block;
  s.row = r;
  s.col = c;
  s.features = f;
  s.target = y;
  return s;
}

}  // namespace

TEST(ComputeFeatures, EmptySet) {
  const mc::PatchBounds b{0, 0, 608, 608, 0, 0};
  auto clipped = mc::clip_to_patch(image(608, 608), b);
  EXPECT_EQ(mc::compute_features(clipped, b), (mc::FeatureVector{0, 0, 0, 0}));
}

TEST(ComputeFeatures, FullWaterCover) {
  auto set = image(608, 608);
  set.objects.push_back({mc::ObjectClass::Water, rect(0, 0, 608, 608), {}, true});
  const mc::PatchBounds b{0, 0, 608, 608, 0, 0};
  EXPECT_DOUBLE_EQ(mc::compute_features(mc::clip_to_patch(set, b), b).water_ratio, 1.0);
}

TEST(ComputeFeatures, TwoQuarterTreesMonteCarlo) {
  auto set = image(608, 608);
  // Two disjoint triangles, each of area 608^2 / 4.
  const mc::Polygon t1{{0, 0}, {608, 0}, {0, 304}};
  const mc::Polygon t2{{608, 608}, {0, 608}, {608, 304}};
  set.objects.push_back({mc::ObjectClass::Tree, t1, {}, true});
  set.objects.push_back({mc::ObjectClass::Tree, t2, {}, true});
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 608.0);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = u(gen), y = u(gen);
    if (oracle::inside(t1, x, y) || oracle::inside(t2, x, y)) ++hits;
  }
  const mc::PatchBounds b{0, 0, 608, 608, 0, 0};
  const auto fv = mc::compute_features(mc::clip_to_patch(set, b), b);
  EXPECT_NEAR(fv.tree_ratio, 0.5, 0.01);
  EXPECT_NEAR(fv.tree_ratio, static_cast<double>(hits) / n, 0.01);
}

TEST(ComputeFeatures, OverlapsCountOncePerClass) {
  auto set = image(10, 10);
  set.objects.push_back({mc::ObjectClass::Debris, rect(0, 0, 6, 10), {}, true});
  set.objects.push_back({mc::ObjectClass::Debris, rect(4, 0, 10, 10), {}, true});
  const mc::PatchBounds b{0, 0, 10, 10, 0, 0};
  EXPECT_DOUBLE_EQ(mc::compute_features(mc::clip_to_patch(set, b), b).debris_ratio, 1.0);
}

TEST(ComputeFeatures, PartialPatchUsesTrueArea) {
  auto set = image(1000, 608);
  set.objects.push_back({mc::ObjectClass::Tree, rect(608, 0, 804, 608), {}, true});
  const auto grid = mc::build_grid(1000, 608, 608, true);
  const auto b = grid.bounds(0, 1);
  EXPECT_DOUBLE_EQ(mc::compute_features(mc::clip_to_patch(set, b), b).tree_ratio, 0.5);
}

TEST(ComputeFeatures, MismatchedBoundsRejected) {
  auto set = image(100, 100);
  const auto clipped = mc::clip_to_patch(set, {0, 0, 50, 50, 0, 0});
  try {
    mc::compute_features(clipped, {50, 0, 50, 50, 0, 1});
    FAIL();
  } catch (const mc::Error& e) {
    EXPECT_EQ(e.kind(), mc::ErrorKind::InvalidArgument);
  }
  set.objects.push_back({mc::ObjectClass::Tree, rect(0, 0, 80, 80), {}, true});
  EXPECT_THROW(mc::compute_features(set, {0, 0, 50, 50, 0, 0}), mc::Error);
}

TEST(ComputeFeaturesProperty, RatiosBoundedAndOrderIndependent) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> uc(0.0, 120.0);
  std::uniform_int_distribution<int> ucls(0, 3);
  const auto grid = mc::build_grid(120, 120, 50, true);
  for (int trial = 0; trial < 20; ++trial) {
    auto set = image(120, 120);
    for (int i = 0; i < 50; ++i) {
      auto poly = oracle::random_star(gen, uc(gen), uc(gen), 1.0, 40.0);
      for (auto& p : poly) p = {std::clamp(p.x, 0.0, 120.0), std::clamp(p.y, 0.0, 120.0)};
      if (mc::polygon_area(poly) <= 0.0) continue;
      set.objects.push_back({mc::kAllClasses[static_cast<std::size_t>(ucls(gen))], poly, {}, true});
    }
    auto shuffled = set;
    std::shuffle(shuffled.objects.begin(), shuffled.objects.end(), gen);
    for (std::int64_t i = 0; i < grid.patch_count(); ++i) {
      const auto b = grid.bounds(i);
      const auto fv = mc::compute_features(mc::clip_to_patch(set, b), b);
      EXPECT_NO_THROW(fv.validate());
      EXPECT_EQ(fv, mc::compute_features(mc::clip_to_patch(shuffled, b), b));
    }
  }
}

TEST(BuildDataset, PerfectDetectorTargetsEqualCounts) {
  auto set = image(100, 60);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> ux(2.0, 98.0), uy(2.0, 58.0);
  for (int i = 0; i < 40; ++i) set.objects.push_back({mc::ObjectClass::Mound, square_mound(ux(gen), uy(gen)), {}, true});
  const auto grid = mc::build_grid(100, 60, 25, true);
  const auto ds = mc::build_dataset(&set, set, grid, "blk", 2);
  ASSERT_EQ(ds.size(), static_cast<std::size_t>(grid.patch_count()));
  double total = 0;
  for (const auto& s : ds.samples) {
    EXPECT_EQ(*s.target, s.features.mound_count);
    total += *s.target;
  }
  EXPECT_EQ(total, 40.0);
}

TEST(BuildDataset, MissingMoundShowsAsTargetGap) {
  auto gt = image(20, 10);
  for (double cx : {2.0, 5.0, 8.0}) gt.objects.push_back({mc::ObjectClass::Mound, square_mound(cx, 5), {}, true});
  gt.objects.push_back({mc::ObjectClass::Mound, square_mound(15, 5), {}, true});
  auto det = gt;
  det.objects.erase(det.objects.begin() + 1);
  const auto grid = mc::build_grid(20, 10, 10, true);
  const auto ds = mc::build_dataset(&gt, det, grid, "b");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples[0].features.mound_count, 2.0);
  EXPECT_EQ(*ds.samples[0].target, 3.0);
  EXPECT_EQ(ds.samples[1].features.mound_count, 1.0);
  EXPECT_EQ(*ds.samples[1].target, 1.0);
  EXPECT_EQ(ds.samples[1].patch_id(), "b_r0_c1");
}

TEST(BuildDataset, DetectionsWithoutGroundTruthListPatchIds) {
  const auto grid = mc::build_grid(20, 10, 10, true);
  auto det = mc::split_by_grid(image(20, 10), grid, "b");
  mc::PatchAnnotations gt = det;
  gt.erase("b_r0_c1");
  try {
    mc::build_dataset(&gt, det, grid, "b");
    FAIL();
  } catch (const mc::Error& e) {
    EXPECT_EQ(e.kind(), mc::ErrorKind::Consistency);
    EXPECT_NE(std::string(e.what()).find("b_r0_c1"), std::string::npos);
  }
}

TEST(BuildDataset, InferenceSetHasNoTargets) {
  const auto grid = mc::build_grid(20, 10, 10, true);
  const auto ds = mc::build_dataset(nullptr, image(20, 10), grid, "b");
  for (const auto& s : ds.samples) EXPECT_FALSE(s.target.has_value());
}

TEST(BuildDataset, IndependentOfWorkerCount) {
  mc::SynthParams p;
  p.block_width = 1216;
  p.block_height = 1216;
  p.seed = 9;
  const auto blk = mc::generate_block(p);
  const auto grid = mc::build_grid(1216, 1216, 608, true);
  const auto one = mc::build_dataset(&blk.truth, blk.detections, grid, "b", 1);
  const auto four = mc::build_dataset(&blk.truth, blk.detections, grid, "b", 4);
  EXPECT_EQ(one, four);
}

TEST(BuildDataset, SyntheticBlockUnderestimates) {
  mc::SynthParams p;
  p.seed = 42;
  const auto blk = mc::generate_block(p, "s42");
  const auto grid = mc::build_grid(p.block_width, p.block_height, p.patch_size, true);
  const auto ds = mc::build_dataset(&blk.truth, blk.detections, grid, "s42");
  EXPECT_EQ(ds.size(), static_cast<std::size_t>(grid.patch_count()));
  double gap = 0;
  for (const auto& s : ds.samples) gap += *s.target - s.features.mound_count;
  EXPECT_GT(gap / static_cast<double>(ds.size()), 0.0);
  EXPECT_EQ(ds.target_total(), static_cast<double>(blk.gt_count));
}

TEST(FeaturesCsv, RoundTrip) {
  mc::TrainingSet set;
  set.samples.push_back(sample("b1", 0, 0, {3, 0.123456789, 0, 1}, 4.0));
  set.samples.push_back(sample("b1", 0, 1, {0, 0, 0.5, 0.25}, 0.0));
  set.samples.push_back(sample("b1", 1, 0, {12, 0.000123456789, 0.3, 0}, 13.5));
  set.samples.push_back(sample("b2", 0, 0, {1, 0.1, 0.2, 0.3}, std::nullopt));
  set.samples.push_back(sample("b2", 0, 1, {7, 1, 0, 0}, 9.0));
  const auto path = (std::filesystem::temp_directory_path() / "mc_features_rt.csv").string();
  mc::write_features_csv(set, path);
  EXPECT_EQ(mc::read_features_csv(path), set);
}

TEST(FeaturesCsv, HeaderOnlyIsEmptyAndFitRefuses) {
  const auto set = mc::parse_features_csv("block_id,row,col,x1,x2,x3,x4,y\n");
  EXPECT_TRUE(set.empty());
}

TEST(FeaturesCsv, RatioOutOfRangeNamesRow) {
  try {
    mc::parse_features_csv("block_id,row,col,x1,x2,x3,x4,y\nb,0,0,1,0.1,0,0,1\nb,0,1,1,1.2,0,0,1\n");
    FAIL();
  } catch (const mc::Error& e) {
    EXPECT_EQ(e.kind(), mc::ErrorKind::Validation);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(FeaturesCsv, MalformedRows) {
  EXPECT_THROW(mc::parse_features_csv("block_id,row,col,x1,x2,x3,x4\n"), mc::Error);
  EXPECT_THROW(mc::parse_features_csv("block_id,row,col,x1,x2,x3,x4,y\nb,0,0,abc,0,0,0,1\n"), mc::Error);
  EXPECT_THROW(mc::parse_features_csv("block_id,row,col,x1,x2,x3,x4,y\nb,0,0,1,0,0\n"), mc::Error);
  EXPECT_THROW(mc::parse_features_csv("block_id,row,col,x1,x2,x3,x4,y\nb,0,0,1,0,0,0,-2\n"), mc::Error);
}
