#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace mc {

std::int64_t BinaryMask::count() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

double signed_area(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    twice += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  return 0.5 * twice;
}

Point polygon_centroid(const Polygon& poly) {
  const std::size_t n = poly.size();
  require(n >= 3, ErrorKind::DegenerateGeometry, "centroid needs at least 3 vertices");
  // Shift to the first vertex to limit cancellation for far-off coordinates.
  const Point o = poly[0];
  double twice_area = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xj = poly[j].x - o.x, yj = poly[j].y - o.y;
    const double xi = poly[i].x - o.x, yi = poly[i].y - o.y;
    const double cross = xj * yi - xi * yj;
    twice_area += cross;
    cx += (xj + xi) * cross;
    cy += (yj + yi) * cross;
  }
  require(std::abs(twice_area) > 1e-12, ErrorKind::DegenerateGeometry,
          "centroid of zero-area polygon is undefined");
  return {o.x + cx / (3.0 * twice_area), o.y + cy / (3.0 * twice_area)};
}

namespace {

double orient(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

int sign(double v) { return (v > 0) - (v < 0); }

bool within(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// 0: disjoint, 1: touch at exactly one point, 2: proper crossing or
// collinear overlap of positive length.
int segment_relation(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int o1 = sign(orient(a, b, c));
  const int o2 = sign(orient(a, b, d));
  const int o3 = sign(orient(c, d, a));
  const int o4 = sign(orient(c, d, b));
  if (o1 == 0 && o2 == 0) {
    // Collinear: project on the dominant axis and measure the overlap.
    const bool use_x = std::abs(b.x - a.x) >= std::abs(b.y - a.y);
    auto key = [use_x](const Point& p) { return use_x ? p.x : p.y; };
    const double lo = std::max(std::min(key(a), key(b)), std::min(key(c), key(d)));
    const double hi = std::min(std::max(key(a), key(b)), std::max(key(c), key(d)));
    if (hi > lo) return 2;
    return hi == lo ? 1 : 0;
  }
  if (o1 != o2 && o3 != o4) {
    if (o1 == 0 || o2 == 0 || o3 == 0 || o4 == 0) return 1;
    return 2;
  }
  if (o1 == 0 && within(a, b, c)) return 1;
  if (o2 == 0 && within(a, b, d)) return 1;
  if (o3 == 0 && within(c, d, a)) return 1;
  if (o4 == 0 && within(c, d, b)) return 1;
  return 0;
}

}  // namespace

bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if (a == b) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point& c = poly[j];
      const Point& d = poly[(j + 1) % n];
      if (c == d) continue;
      // Adjacent edges share an endpoint (relation 1); a fold-back along
      // the same line shows up as an overlap like any other.
      if (segment_relation(a, b, c, d) == 2) return false;
    }
  }
  return true;
}

Polygon clip_to_rect(const Polygon& poly, double x0, double y0, double x1, double y1) {
  Polygon current = poly;
  // Each pass keeps the half-plane where inside(p) holds; intersections use
  // the exact boundary coordinate so clipped vertices land on the edge.
  auto pass = [&current](auto inside, auto intersect) {
    if (current.empty()) return;
    Polygon out;
    out.reserve(current.size() + 4);
    const std::size_t n = current.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& cur = current[i];
      const Point& prev = current[(i + n - 1) % n];
      const bool cin = inside(cur), pin = inside(prev);
      if (cin) {
        if (!pin) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (pin) {
        out.push_back(intersect(prev, cur));
      }
    }
    current = std::move(out);
  };
  auto at_x = [](double x) {
    return [x](const Point& p, const Point& q) {
      const double t = (x - p.x) / (q.x - p.x);
      return Point{x, p.y + t * (q.y - p.y)};
    };
  };
  auto at_y = [](double y) {
    return [y](const Point& p, const Point& q) {
      const double t = (y - p.y) / (q.y - p.y);
      return Point{p.x + t * (q.x - p.x), y};
    };
  };
  pass([x0](const Point& p) { return p.x >= x0; }, at_x(x0));
  pass([x1](const Point& p) { return p.x <= x1; }, at_x(x1));
  pass([y0](const Point& p) { return p.y >= y0; }, at_y(y0));
  pass([y1](const Point& p) { return p.y <= y1; }, at_y(y1));
  return current;
}

void rasterize_into(BinaryMask& mask, const Polygon& poly, const PatchBounds& bounds) {
  require(mask.width() == bounds.width && mask.height() == bounds.height,
          ErrorKind::InvalidArgument, "mask size does not match bounds");
  const std::size_t n = poly.size();
  if (n < 3) return;
  double ymin = poly[0].y, ymax = poly[0].y;
  for (const auto& p : poly) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const auto r_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(ymin - static_cast<double>(bounds.y0) - 0.5)));
  const auto r_hi = std::min<std::int64_t>(bounds.height - 1,
                                           static_cast<std::int64_t>(std::ceil(ymax - static_cast<double>(bounds.y0) - 0.5)));
  std::vector<double> xs;
  for (std::int64_t r = r_lo; r <= r_hi; ++r) {
    const double yc = static_cast<double>(bounds.y0 + r) + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = poly[i];
      const Point& b = poly[j];
      if ((a.y > yc) != (b.y > yc))
        xs.push_back((b.x - a.x) * (yc - a.y) / (b.y - a.y) + a.x);
    }
    std::sort(xs.begin(), xs.end());
    // Centre xc is inside iff an odd number of crossings lie strictly to its
    // right, i.e. xs[2k] <= xc < xs[2k+1].
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const double lo = xs[k] - static_cast<double>(bounds.x0) - 0.5;
      const double hi = xs[k + 1] - static_cast<double>(bounds.x0) - 0.5;
      auto c0 = static_cast<std::int64_t>(std::ceil(lo));
      auto c1 = static_cast<std::int64_t>(std::ceil(hi)) - 1;
      c0 = std::max<std::int64_t>(c0, 0);
      c1 = std::min<std::int64_t>(c1, bounds.width - 1);
      for (std::int64_t c = c0; c <= c1; ++c) mask.set(c, r);
    }
  }
}

BinaryMask rasterize_polygon(const Polygon& poly, const PatchBounds& bounds) {
  require(bounds.width >= 1 && bounds.height >= 1, ErrorKind::InvalidArgument,
          "rasterization bounds must be non-empty");
  BinaryMask mask(bounds.width, bounds.height);
  rasterize_into(mask, poly, bounds);
  return mask;
}

}  // namespace mc
