#pragma once

#include <cstdint>
#include <vector>

#include "core/raster.hpp"

namespace mc {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

using Polygon = std::vector<Point>;

// Per-pixel boolean mask aligned to a PatchBounds (row-major, origin at the
// bounds' top-left corner).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::int64_t width, std::int64_t height)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width * height), 0) {}

  std::int64_t width() const noexcept { return width_; }
  std::int64_t height() const noexcept { return height_; }
  bool get(std::int64_t x, std::int64_t y) const {
    return bits_[static_cast<std::size_t>(y * width_ + x)] != 0;
  }
  void set(std::int64_t x, std::int64_t y) { bits_[static_cast<std::size_t>(y * width_ + x)] = 1; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::int64_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::int64_t width_ = 0;
  std::int64_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Shoelace signed area; positive for counter-clockwise in a y-up frame.
double signed_area(const Polygon& poly);
inline double polygon_area(const Polygon& poly) {
  const double a = signed_area(poly);
  return a < 0 ? -a : a;
}

// Area centroid. Throws DegenerateGeometry for zero-area input.
Point polygon_centroid(const Polygon& poly);

// True when no two edges cross or overlap. Edges that merely touch at a
// single point (pinched boundaries from 8-connected tracing) are accepted.
bool is_simple(const Polygon& poly);

// Sutherland-Hodgman clip against the axis-aligned rectangle
// [x0, x1] x [y0, y1]. May return fewer than three points.
Polygon clip_to_rect(const Polygon& poly, double x0, double y0, double x1, double y1);

// Pixel (c, r) of the mask is set iff its centre (bounds.x0 + c + 0.5,
// bounds.y0 + r + 0.5) is inside `poly` by the even-odd rule.
BinaryMask rasterize_polygon(const Polygon& poly, const PatchBounds& bounds);

// Same test, OR-ed into an existing mask sized to `bounds`.
void rasterize_into(BinaryMask& mask, const Polygon& poly, const PatchBounds& bounds);

}  // namespace mc
