#include <gtest/gtest.h>

#include <random>

#include "core/annotations.hpp"
#include "core/error.hpp"
#include "core/raster.hpp"
#include "oracles.hpp"

namespace {

mc::ViaParseOptions extent(std::int64_t w = 100, std::int64_t h = 100) {
  mc::ViaParseOptions o;
  o.image_width = w;
  o.image_height = h;
  return o;
}

std::string region(const std::string& cls, const std::string& xs, const std::string& ys,
                   const std::string& extra = "") {
  return R"({"shape_attributes":{"name":"polygon","all_points_x":[)" + xs +
         R"(],"all_points_y":[)" + ys + R"(]},"region_attributes":{"class":")" + cls + "\"" + extra +
         "}}";
}

std::string doc(const std::vector<std::string>& regions) {
  std::string r;
  for (std::size_t i = 0; i < regions.size(); ++i) r += (i ? "," : "") + regions[i];
  return R"({"img.png":{"filename":"img.png","size":123,"regions":[)" + r + "]}}";
}

mc::ErrorKind kind_of(const std::string& text, const mc::ViaParseOptions& opt = extent()) {
  try {
    mc::parse_via(text, opt);
  } catch (const mc::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a parse failure";
  return mc::ErrorKind::InvalidArgument;
}

std::string message_of(const std::string& text) {
  try {
    mc::parse_via(text, extent());
  } catch (const mc::Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ParseVia, SingleMound) {
  const auto set = mc::parse_via(doc({region("mound", "1,5,5,1", "1,1,5,5")}), extent());
  ASSERT_EQ(set.objects.size(), 1u);
  EXPECT_EQ(set.objects[0].cls, mc::ObjectClass::Mound);
  EXPECT_EQ(set.objects[0].polygon.size(), 4u);
  EXPECT_FALSE(set.objects[0].score.has_value());
  EXPECT_EQ(set.image_id, "img.png");
}

TEST(ParseVia, ZeroRegionsAndEmptyDocument) {
  EXPECT_TRUE(mc::parse_via(doc({}), extent()).objects.empty());
  EXPECT_TRUE(mc::parse_via("{}", extent()).objects.empty());
}

TEST(ParseVia, FourClassesInOrderCaseInsensitive) {
  const auto set = mc::parse_via(doc({region("Mound", "1,5,5", "1,1,5"), region("TREE", "10,20,20", "10,10,20"),
                                      region("water", "30,40,40", "30,30,40"),
                                      region("Debris", "50,60,60", "50,50,60")}),
                                 extent());
  ASSERT_EQ(set.objects.size(), 4u);
  EXPECT_EQ(set.objects[0].cls, mc::ObjectClass::Mound);
  EXPECT_EQ(set.objects[1].cls, mc::ObjectClass::Tree);
  EXPECT_EQ(set.objects[2].cls, mc::ObjectClass::Water);
  EXPECT_EQ(set.objects[3].cls, mc::ObjectClass::Debris);
  EXPECT_EQ(set.objects[1].polygon[2], (mc::Point{20, 20}));
  EXPECT_EQ(set.objects[3].polygon[0], (mc::Point{50, 50}));
}

TEST(ParseVia, UnknownClassNamesLabel) {
  const auto text = doc({region("stump", "1,5,5", "1,1,5")});
  EXPECT_EQ(kind_of(text), mc::ErrorKind::Validation);
  EXPECT_NE(message_of(text).find("stump"), std::string::npos);
}

TEST(ParseVia, TooFewVertices) {
  EXPECT_EQ(kind_of(doc({region("mound", "1,5", "1,1")})), mc::ErrorKind::Validation);
  // Closing duplicate does not count as a vertex.
  EXPECT_EQ(kind_of(doc({region("mound", "1,5,1", "1,1,1")})), mc::ErrorKind::Validation);
}

TEST(ParseVia, SelfIntersectingRejected) {
  EXPECT_EQ(kind_of(doc({region("tree", "0,10,10,0", "0,10,0,10")})), mc::ErrorKind::Validation);
}

TEST(ParseVia, NonPolygonShapeRejected) {
  const std::string text =
      R"({"a":{"filename":"a","regions":[{"shape_attributes":{"name":"circle","cx":1,"cy":1,"r":2},"region_attributes":{"class":"mound"}}]}})";
  EXPECT_EQ(kind_of(text), mc::ErrorKind::Validation);
  EXPECT_NE(message_of(text).find("shape_attributes.name"), std::string::npos);
}

TEST(ParseVia, MalformedJsonReportsLine) {
  const std::string text = "{\n\"a\": {\n\"filename\": \"a\",\n\"regions\": [,]\n}}";
  EXPECT_EQ(kind_of(text), mc::ErrorKind::Parse);
  EXPECT_NE(message_of(text).find("line 4"), std::string::npos);
}

TEST(ParseVia, FieldPathInValidationErrors) {
  const auto text = doc({region("mound", "1,5,5", "1,1,5"), region("mound", "1,\"x\",5", "1,1,5")});
  EXPECT_NE(message_of(text).find("regions[1].shape_attributes.all_points_x[1]"), std::string::npos);
}

TEST(ParseVia, ClampsToImageExtent) {
  const auto set = mc::parse_via(doc({region("water", "-5,150,150,-5", "-5,-5,50,50")}), extent(100, 40));
  ASSERT_EQ(set.objects.size(), 1u);
  for (const auto& p : set.objects[0].polygon) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, 100.0);
    EXPECT_GE(p.y, 0.0);
    EXPECT_LE(p.y, 40.0);
  }
}

TEST(ParseVia, ScoreThresholdDropsLowConfidence) {
  const auto text = doc({region("mound", "1,5,5", "1,1,5", R"(,"score":0.3)"),
                         region("mound", "11,15,15", "11,11,15", R"(,"score":0.9)")});
  const auto set = mc::parse_via(text, extent());
  ASSERT_EQ(set.objects.size(), 1u);
  EXPECT_DOUBLE_EQ(*set.objects[0].score, 0.9);
  auto lenient = extent();
  lenient.score_threshold = 0.0;
  EXPECT_EQ(mc::parse_via(text, lenient).objects.size(), 2u);
  EXPECT_EQ(kind_of(doc({region("mound", "1,5,5", "1,1,5", R"(,"score":1.5)")})),
            mc::ErrorKind::Validation);
}

TEST(ParseVia, MultipleImagesNeedDocumentForm) {
  const std::string text = R"({"a":{"filename":"a","regions":[]},"b":{"filename":"b","regions":[]}})";
  EXPECT_EQ(kind_of(text), mc::ErrorKind::Validation);
  EXPECT_EQ(mc::parse_via_document(text, extent()).size(), 2u);
}

TEST(ParseVia, SerializeRoundTrip) {
  std::mt19937_64 gen(8);
  mc::AnnotationSet set;
  set.image_id = "blk.png";
  set.image_width = 200;
  set.image_height = 150;
  for (int i = 0; i < 40; ++i) {
    mc::AnnotatedObject obj;
    obj.cls = mc::kAllClasses[static_cast<std::size_t>(i % 4)];
    obj.polygon = oracle::random_star(gen, 50.0 + i * 2.5, 60.0, 2.0, 30.0);
    if (i % 3 == 0) obj.score = 0.5 + 0.0123 * i;
    set.objects.push_back(obj);
  }
  const auto back = mc::parse_via(mc::serialize_via(set), extent(200, 150));
  EXPECT_EQ(back, set);
}

TEST(ClipToPatch, InsideUnchangedOutsideDropped) {
  mc::AnnotationSet set;
  set.image_width = 20;
  set.image_height = 10;
  set.objects.push_back({mc::ObjectClass::Mound, {{1, 1}, {3, 1}, {3, 3}, {1, 3}}, {}, true});
  set.objects.push_back({mc::ObjectClass::Tree, {{12, 1}, {15, 1}, {15, 3}}, {}, true});
  const auto left = mc::clip_to_patch(set, {0, 0, 10, 10, 0, 0});
  ASSERT_EQ(left.objects.size(), 1u);
  EXPECT_EQ(left.objects[0].polygon, set.objects[0].polygon);
  EXPECT_TRUE(left.objects[0].counts_here);
  ASSERT_TRUE(left.clip_region.has_value());
}

TEST(ClipToPatch, StraddlingMoundCountsOnceByCentroid) {
  mc::AnnotationSet set;
  set.image_width = 20;
  set.image_height = 10;
  // Pentagon leaning left: shoelace centroid x is about 8.6.
  const mc::Polygon poly{{6, 2}, {11, 2}, {12, 5}, {11, 8}, {6, 8}};
  set.objects.push_back({mc::ObjectClass::Mound, poly, {}, true});
  double a2 = 0, cx = 0;  // shoelace centroid written out independently
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    const double c = p.x * q.y - q.x * p.y;
    a2 += c;
    cx += (p.x + q.x) * c;
  }
  cx /= 3.0 * a2;
  ASSERT_LT(cx, 10.0);
  const auto left = mc::clip_to_patch(set, {0, 0, 10, 10, 0, 0});
  const auto right = mc::clip_to_patch(set, {10, 0, 10, 10, 0, 1});
  ASSERT_EQ(left.objects.size(), 1u);
  ASSERT_EQ(right.objects.size(), 1u);
  EXPECT_TRUE(left.objects[0].counts_here);
  EXPECT_FALSE(right.objects[0].counts_here);
}

TEST(ClipToPatch, EveryMoundCountedExactlyOnce) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> uc(5.0, 95.0);
  mc::AnnotationSet set;
  set.image_width = 100;
  set.image_height = 100;
  for (int i = 0; i < 500; ++i) {
    auto poly = oracle::random_star(gen, uc(gen), uc(gen), 1.0, 8.0);
    for (auto& p : poly) p = {std::clamp(p.x, 0.0, 100.0), std::clamp(p.y, 0.0, 100.0)};
    set.objects.push_back({mc::ObjectClass::Mound, poly, {}, true});
  }
  for (std::int64_t ps : {7, 10, 33, 64}) {
    const auto grid = mc::build_grid(100, 100, ps, true);
    std::vector<int> owners(set.objects.size(), 0);
    for (std::int64_t i = 0; i < grid.patch_count(); ++i) {
      const auto clipped = mc::clip_to_patch(set, grid.bounds(i));
      std::size_t owned = 0;
      for (const auto& o : clipped.objects) owned += o.counts_here ? 1 : 0;
      // Map back by recomputing ownership independently.
      std::size_t expect = 0;
      const auto b = grid.bounds(i);
      for (std::size_t k = 0; k < set.objects.size(); ++k) {
        const auto c = mc::polygon_centroid(set.objects[k].polygon);
        if (c.x >= b.x0 && c.x < b.x1() && c.y >= b.y0 && c.y < b.y1()) {
          ++expect;
          ++owners[k];
        }
      }
      ASSERT_EQ(owned, expect);
    }
    for (int n : owners) ASSERT_EQ(n, 1);
  }
}
