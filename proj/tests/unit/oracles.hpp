#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "core/geometry.hpp"

namespace oracle {

// Winding number of poly around (px, py); nonzero means inside for simple
// polygons. A different algorithm from the library's crossing test.
inline int winding(const mc::Polygon& poly, double px, double py) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    const double cross = (b.x - a.x) * (py - a.y) - (px - a.x) * (b.y - a.y);
    if (a.y <= py) {
      if (b.y > py && cross > 0) ++wn;
    } else if (b.y <= py && cross < 0) {
      --wn;
    }
  }
  return wn;
}

inline bool inside(const mc::Polygon& poly, double px, double py) { return winding(poly, px, py) != 0; }

// Pixel-centre count by testing every pixel of the window.
inline std::int64_t centre_count(const mc::Polygon& poly, std::int64_t x0, std::int64_t y0,
                                 std::int64_t w, std::int64_t h) {
  std::int64_t n = 0;
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      if (inside(poly, x0 + x + 0.5, y0 + y + 0.5)) ++n;
  return n;
}

struct MonteCarlo {
  double area;
  double cx;
  double cy;
};

// Area and centroid from uniform samples over the bounding box.
inline MonteCarlo monte_carlo(const mc::Polygon& poly, int samples, std::uint64_t seed) {
  double minx = poly[0].x, maxx = poly[0].x, miny = poly[0].y, maxy = poly[0].y;
  for (const auto& p : poly) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(minx, maxx), uy(miny, maxy);
  int hits = 0;
  double sx = 0, sy = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = ux(gen), y = uy(gen);
    if (inside(poly, x, y)) {
      ++hits;
      sx += x;
      sy += y;
    }
  }
  const double box = (maxx - minx) * (maxy - miny);
  return {box * hits / samples, hits ? sx / hits : 0.0, hits ? sy / hits : 0.0};
}

// Random convex polygon: points on a jittered circle in angular order.
inline mc::Polygon random_convex(std::mt19937_64& gen, double cx, double cy, double r) {
  std::uniform_int_distribution<int> nv(3, 10);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * M_PI);
  const int n = nv(gen);
  std::vector<double> angles(n);
  for (auto& a : angles) a = ua(gen);
  std::sort(angles.begin(), angles.end());
  mc::Polygon p;
  for (double a : angles) p.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  return p;
}

// Random star-shaped (hence simple) polygon around (cx, cy).
inline mc::Polygon random_star(std::mt19937_64& gen, double cx, double cy, double rmin, double rmax,
                               int min_vertices = 3, int max_vertices = 14) {
  std::uniform_int_distribution<int> nv(min_vertices, max_vertices);
  const int n = nv(gen);
  std::uniform_real_distribution<double> ur(rmin, rmax);
  mc::Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * (i + 0.5 * std::uniform_real_distribution<double>(0, 1)(gen)) / n;
    const double r = ur(gen);
    p.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return p;
}

// Flood-fill component labelling over a binary image with explicit stack;
// returns per-pixel component ids (0 background) numbered in raster order.
inline std::vector<int> flood_fill(const std::vector<int>& fg, int w, int h, int connectivity) {
  std::vector<int> lab(fg.size(), 0);
  int next = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!fg[y * w + x] || lab[y * w + x]) continue;
      ++next;
      std::vector<std::pair<int, int>> stack{{x, y}};
      lab[y * w + x] = next;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (connectivity == 4 && dx != 0 && dy != 0) continue;
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!fg[ny * w + nx] || lab[ny * w + nx]) continue;
            lab[ny * w + nx] = next;
            stack.push_back({nx, ny});
          }
      }
    }
  return lab;
}

// Epsilon-SVR dual in difference form: b_i = alpha_i - alpha*_i,
//   D(b) = y'b - eps |b|_1 - 1/2 b'Kb,  sum b = 0,  |b_i| <= C.
inline double svr_dual(const std::vector<std::vector<double>>& k, const std::vector<double>& y,
                       double eps, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    d += y[i] * b[i] - eps * std::abs(b[i]);
    for (std::size_t j = 0; j < b.size(); ++j) d -= 0.5 * b[i] * k[i][j] * b[j];
  }
  return d;
}

// Grid search for the dual maximum: the last coordinate is fixed by the sum
// constraint, the others are scanned on a grid that is recentred on the best
// point and narrowed each round until the step is below `resolution`.
inline double svr_dual_brute_force(const std::vector<std::vector<double>>& k,
                                   const std::vector<double>& y, double eps, double c,
                                   double resolution = 1e-3) {
  const std::size_t n = y.size();
  const std::size_t free = n - 1;
  const int points = free <= 3 ? 41 : (free == 4 ? 15 : 9);
  std::vector<double> centre(free, 0.0);
  double half = c;
  double best = -1e300;
  std::vector<double> b(n), best_b(free, 0.0);
  while (true) {
    const double step = 2.0 * half / (points - 1);
    std::vector<int> idx(free, 0);
    while (true) {
      double sum = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < free; ++i) {
        b[i] = centre[i] - half + step * idx[i];
        if (std::abs(b[i]) > c) ok = false;
        sum += b[i];
      }
      b[free] = -sum;
      if (ok && std::abs(b[free]) <= c) {
        const double d = svr_dual(k, y, eps, b);
        if (d > best) {
          best = d;
          best_b.assign(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(free));
        }
      }
      std::size_t pos = 0;
      while (pos < free && ++idx[pos] == points) idx[pos++] = 0;
      if (pos == free) break;
    }
    if (step <= resolution) break;
    centre = best_b;
    half = 2.0 * step;
  }
  return best;
}

// Least squares with intercept through the normal equations, solved by
// Gaussian elimination with partial pivoting. Returns {w..., b}.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& x,
                                         const std::vector<double>& y) {
  const std::size_t p = x[0].size() + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> row = x[i];
    row.push_back(1.0);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += row[r] * row[c];
      a[r][p] += row[r] * y[i];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> sol(p);
  for (std::size_t r = 0; r < p; ++r) sol[r] = a[r][p] / a[r][r];
  return sol;
}

}  // namespace oracle
