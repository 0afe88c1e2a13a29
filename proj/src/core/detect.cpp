#include "core/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mc {

void BlobParams::validate() const {
  require(threshold >= 0 && threshold <= 255, ErrorKind::InvalidArgument,
          "blob threshold must lie in [0, 255]");
  require(min_area > 0 && min_area <= max_area, ErrorKind::InvalidArgument,
          "blob area bounds must satisfy 0 < min_area <= max_area");
  require(connectivity == 4 || connectivity == 8, ErrorKind::InvalidArgument,
          "connectivity must be 4 or 8");
  require(channel >= 0, ErrorKind::InvalidArgument, "channel must be non-negative");
}

namespace {

struct DisjointSet {
  std::vector<std::int32_t> parent;

  std::int32_t make() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    return parent.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

}  // namespace

std::vector<std::int32_t> label_components(const Raster& raster, const BlobParams& params,
                                           std::int32_t* count) {
  params.validate();
  require(params.channel < raster.channels(), ErrorKind::InvalidArgument,
          "blob channel exceeds raster channels");
  const std::int64_t w = raster.width(), h = raster.height();
  const auto& valid = raster.valid_mask();
  auto fg = [&](std::int64_t x, std::int64_t y) {
    if (valid && !(*valid)[static_cast<std::size_t>(y * w + x)]) return false;
    return raster.at(x, y, params.channel) >= params.threshold;
  };

  // Two-pass labeling with provisional labels merged through a disjoint set.
  std::vector<std::int32_t> labels(static_cast<std::size_t>(w * h), 0);
  DisjointSet ds;
  ds.make();  // label 0 = background
  const bool eight = params.connectivity == 8;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      if (!fg(x, y)) continue;
      std::array<std::int32_t, 4> nb{};
      int k = 0;
      auto look = [&](std::int64_t nx, std::int64_t ny) {
        if (nx < 0 || ny < 0 || nx >= w) return;
        const auto l = labels[static_cast<std::size_t>(ny * w + nx)];
        if (l) nb[k++] = l;
      };
      look(x - 1, y);
      look(x, y - 1);
      if (eight) {
        look(x - 1, y - 1);
        look(x + 1, y - 1);
      }
      std::int32_t mine;
      if (k == 0) {
        mine = ds.make();
      } else {
        mine = *std::min_element(nb.begin(), nb.begin() + k);
        for (int i = 0; i < k; ++i) ds.unite(mine, nb[i]);
      }
      labels[static_cast<std::size_t>(y * w + x)] = mine;
    }
  }
  // Compact to 1..n in order of first appearance.
  std::vector<std::int32_t> remap(ds.parent.size(), 0);
  std::int32_t next = 0;
  for (auto& l : labels) {
    if (!l) continue;
    const auto root = ds.find(l);
    if (!remap[root]) remap[root] = ++next;
    l = remap[root];
  }
  if (count) *count = next;
  return labels;
}

Polygon trace_outer_boundary(const std::vector<std::int32_t>& labels, std::int64_t width,
                             std::int64_t height, std::int32_t label, int connectivity) {
  auto is_obj = [&](std::int64_t x, std::int64_t y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return labels[static_cast<std::size_t>(y * width + x)] == label;
  };
  std::int64_t sx = -1, sy = -1;
  for (std::int64_t i = 0; i < width * height; ++i) {
    if (labels[static_cast<std::size_t>(i)] == label) {
      sx = i % width;
      sy = i / width;
      break;
    }
  }
  require(sx >= 0, ErrorKind::InvalidArgument, "component label not present");

  // Walk the pixel-edge graph clockwise (screen coordinates, y down) with the
  // component on the right-hand side. Directions: 0 right, 1 down, 2 left, 3 up.
  static constexpr std::int64_t dx[4] = {1, 0, -1, 0};
  static constexpr std::int64_t dy[4] = {0, 1, 0, -1};
  // Pixel ahead-left / ahead-right of a vertex when heading in direction d.
  auto ahead = [&](std::int64_t vx, std::int64_t vy, int d, bool right_side) {
    const int r = (d + 1) % 4;
    const std::int64_t sgn = right_side ? 1 : -1;
    // Doubled pixel centre = 2v + dir + sgn*right, always odd, so the pixel
    // index (its floor) is an exact division.
    const std::int64_t cx2 = 2 * vx + dx[d] + sgn * dx[r];
    const std::int64_t cy2 = 2 * vy + dy[d] + sgn * dy[r];
    return is_obj((cx2 - 1) / 2, (cy2 - 1) / 2);
  };

  Polygon poly;
  std::int64_t vx = sx, vy = sy;
  int d = 0;
  const bool eight = connectivity == 8;
  do {
    vx += dx[d];
    vy += dy[d];
    const bool al = ahead(vx, vy, d, false);
    const bool ar = ahead(vx, vy, d, true);
    int nd;
    if (al && ar) nd = (d + 3) % 4;
    else if (!al && ar) nd = d;
    else if (!al && !ar) nd = (d + 1) % 4;
    else nd = eight ? (d + 3) % 4 : (d + 1) % 4;
    if (nd != d) poly.push_back({static_cast<double>(vx), static_cast<double>(vy)});
    d = nd;
  } while (!(vx == sx && vy == sy && d == 0));
  // The start vertex is a corner (top-left of the first pixel), recorded last;
  // rotate so the polygon begins there.
  std::rotate(poly.begin(), poly.end() - 1, poly.end());
  return poly;
}

AnnotationSet detect_blobs(const Raster& raster, const BlobParams& params) {
  std::int32_t n = 0;
  const auto labels = label_components(raster, params, &n);
  std::vector<std::int64_t> area(static_cast<std::size_t>(n) + 1, 0);
  for (auto l : labels) ++area[static_cast<std::size_t>(l)];

  AnnotationSet out;
  out.image_width = raster.width();
  out.image_height = raster.height();
  for (std::int32_t l = 1; l <= n; ++l) {
    const auto a = area[static_cast<std::size_t>(l)];
    if (a < params.min_area || a > params.max_area) continue;
    AnnotatedObject obj;
    obj.cls = ObjectClass::Mound;
    obj.score = 1.0;
    obj.polygon = trace_outer_boundary(labels, raster.width(), raster.height(), l, params.connectivity);
    out.objects.push_back(std::move(obj));
  }
  return out;
}

double MissModel::miss_probability(const FeatureVector& x) const {
  require(!std::isnan(b0) && !std::isnan(b_tree) && !std::isnan(b_water) && !std::isnan(b_debris),
          ErrorKind::InvalidArgument, "miss model coefficients must not be NaN");
  const double p = b0 + b_tree * x.tree_ratio + b_water * x.water_ratio + b_debris * x.debris_ratio;
  require(!std::isnan(p), ErrorKind::InvalidArgument, "miss probability is NaN");
  return std::clamp(p, 0.0, kMaxMissProbability);
}

AnnotationSet degrade_detections(const AnnotationSet& truth, const FeatureVector& context,
                                 const MissModel& model, std::uint64_t seed) {
  const double p = model.miss_probability(context);
  Rng rng(seed);
  AnnotationSet out = truth;
  out.objects.clear();
  for (const auto& obj : truth.objects) {
    if (obj.cls == ObjectClass::Mound) {
      // Draw for every mound so the stream does not depend on p.
      const double u = rng.uniform();
      if (u < p) continue;
    }
    out.objects.push_back(obj);
  }
  return out;
}

}  // namespace mc
