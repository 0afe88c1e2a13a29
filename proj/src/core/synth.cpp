#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "core/error.hpp"
#include "core/features.hpp"
#include "core/image_io.hpp"
#include "core/log.hpp"
#include "core/manifest.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace mc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMoundVertices = 16;
// Largest single obstacle polygon as a fraction of the block, kept below the
// coverage tolerance so the last polygon cannot overshoot it.
constexpr double kObstacleFraction = 0.03;

double snap(double v) { return std::round(v * 100.0) / 100.0; }

bool finite_all(std::initializer_list<double> vs) {
  return std::all_of(vs.begin(), vs.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void SynthParams::validate() const {
  require(block_width >= 1 && block_height >= 1, ErrorKind::InvalidArgument,
          "block dimensions must be >= 1");
  require(patch_size >= 1, ErrorKind::InvalidArgument, "patch_size must be >= 1");
  require(finite_all({mound_density, radius_min, radius_max, tree_coverage, water_coverage,
                      debris_coverage, miss.b0, miss.b_tree, miss.b_water, miss.b_debris}),
          ErrorKind::InvalidArgument, "synth parameters must be finite");
  require(mound_density >= 0.0, ErrorKind::InvalidArgument, "mound_density must be >= 0");
  require(radius_min > 0.0 && radius_max >= radius_min, ErrorKind::InvalidArgument,
          "mound radii must satisfy 0 < radius_min <= radius_max");
  for (double c : {tree_coverage, water_coverage, debris_coverage})
    require(c >= 0.0 && c < 1.0, ErrorKind::InvalidArgument, "coverage targets must be in [0, 1)");
  require(tree_coverage + water_coverage + debris_coverage <= 0.9 + 1e-12,
          ErrorKind::InvalidArgument, "coverage targets must sum to at most 0.9");
}

namespace {

Polygon disk_polygon(double cx, double cy, double r) {
  Polygon p;
  p.reserve(kMoundVertices);
  for (int k = 0; k < kMoundVertices; ++k) {
    const double t = 2.0 * kPi * k / kMoundVertices;
    p.push_back({snap(cx + r * std::cos(t)), snap(cy + r * std::sin(t))});
  }
  return p;
}

struct Mound {
  double x, y, r;
};

// Dart throwing against a hash grid with cell size equal to the separation.
std::vector<Mound> place_mounds(const SynthParams& p, Rng& rng) {
  const double area = static_cast<double>(p.block_width) * static_cast<double>(p.block_height);
  const double patch_area = static_cast<double>(p.patch_size) * static_cast<double>(p.patch_size);
  const auto n = rng.poisson(p.mound_density * area / patch_area);
  std::vector<Mound> out;
  if (n == 0) return out;
  const double sep = 2.0 * p.radius_max;
  const double lo = p.radius_max;
  const double hix = static_cast<double>(p.block_width) - p.radius_max;
  const double hiy = static_cast<double>(p.block_height) - p.radius_max;
  require(hix >= lo && hiy >= lo, ErrorKind::Generation,
          "block is too small to hold a mound of radius " + std::to_string(p.radius_max));
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells;
  const std::int64_t stride = static_cast<std::int64_t>(std::ceil(p.block_width / sep)) + 3;
  auto cell_of = [&](double x, double y) {
    return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(x / sep),
                                                 static_cast<std::int64_t>(y / sep)};
  };
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double x = snap(rng.uniform(lo, hix));
      const double y = snap(rng.uniform(lo, hiy));
      const auto [cx, cy] = cell_of(x, y);
      bool clear = true;
      for (std::int64_t dy = -1; dy <= 1 && clear; ++dy) {
        for (std::int64_t dx = -1; dx <= 1 && clear; ++dx) {
          auto it = cells.find((cy + dy) * stride + (cx + dx));
          if (it == cells.end()) continue;
          for (std::size_t k : it->second) {
            const double ddx = out[k].x - x, ddy = out[k].y - y;
            if (ddx * ddx + ddy * ddy < sep * sep) {
              clear = false;
              break;
            }
          }
        }
      }
      if (!clear) continue;
      cells[cy * stride + cx].push_back(out.size());
      out.push_back({x, y, snap(rng.uniform(p.radius_min, p.radius_max))});
      placed = true;
    }
    require(placed, ErrorKind::Generation,
            "could not place mound " + std::to_string(i + 1) + " of " + std::to_string(n) +
                " after " + std::to_string(kMaxPlacementAttempts) + " attempts; lower the density");
  }
  return out;
}

Polygon star_polygon(Rng& rng, double cx, double cy, double radius) {
  const int k = 8 + static_cast<int>(rng.below(5));
  std::vector<double> angles(static_cast<std::size_t>(k));
  for (auto& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
  std::sort(angles.begin(), angles.end());
  Polygon p;
  for (double a : angles) {
    const double r = radius * rng.uniform(0.6, 1.0);
    p.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return p;
}

// Adds polygons of one class until its union covers at least `target` of
// the block. Returns the achieved fraction.
double place_obstacles(ObjectClass cls, double target, const PatchBounds& block, Rng& rng,
                       std::vector<AnnotatedObject>& objects) {
  if (target <= 0.0) return 0.0;
  const double area = static_cast<double>(block.area());
  const double radius = std::sqrt(kObstacleFraction * area / kPi);
  BinaryMask mask(block.width, block.height);
  std::int64_t covered = 0;
  int attempts = 0;
  while (static_cast<double>(covered) / area < target) {
    require(attempts < kMaxPlacementAttempts, ErrorKind::Generation,
            std::string("could not reach ") + class_name(cls) + " coverage " +
                std::to_string(target) + " after " + std::to_string(kMaxPlacementAttempts) +
                " attempts");
    ++attempts;
    const double cx = rng.uniform(0.0, static_cast<double>(block.width));
    const double cy = rng.uniform(0.0, static_cast<double>(block.height));
    Polygon poly = clip_to_rect(star_polygon(rng, cx, cy, radius), 0.0, 0.0,
                                static_cast<double>(block.width), static_cast<double>(block.height));
    for (auto& v : poly) v = {snap(v.x), snap(v.y)};
    poly.erase(std::unique(poly.begin(), poly.end(),
                           [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
               poly.end());
    while (poly.size() > 1 && poly.front().x == poly.back().x && poly.front().y == poly.back().y)
      poly.pop_back();
    if (poly.size() < 3 || polygon_area(poly) <= 0.0 || !is_simple(poly)) continue;
    rasterize_into(mask, poly, block);
    covered = mask.count();
    objects.push_back({cls, std::move(poly), std::nullopt, true});
  }
  return static_cast<double>(covered) / area;
}

struct Color {
  int r, g, b;
};

void paint_mask(Raster& img, const BinaryMask& mask, Color c) {
  for (std::int64_t y = 0; y < img.height(); ++y)
    for (std::int64_t x = 0; x < img.width(); ++x)
      if (mask.get(x, y)) {
        img.at(x, y, 0) = static_cast<std::uint8_t>(c.r);
        img.at(x, y, 1) = static_cast<std::uint8_t>(c.g);
        img.at(x, y, 2) = static_cast<std::uint8_t>(c.b);
      }
}

std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

Raster render(const SynthParams& p, const AnnotationSet& truth, const std::vector<Mound>& mounds,
              Rng& rng) {
  Raster img(p.block_width, p.block_height, 3);
  // Soil with per-pixel jitter; channel 0 stays below the blob threshold.
  auto& px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const std::uint64_t bits = rng.next_u64();
    px[i] = clamp8(100 + static_cast<int>(bits & 15) - 8);
    px[i + 1] = clamp8(80 + static_cast<int>((bits >> 8) & 15) - 8);
    px[i + 2] = clamp8(55 + static_cast<int>((bits >> 16) & 15) - 8);
  }
  const PatchBounds block{0, 0, p.block_width, p.block_height, 0, 0};
  const std::pair<ObjectClass, Color> layers[] = {{ObjectClass::Debris, {105, 100, 95}},
                                                  {ObjectClass::Water, {35, 55, 120}},
                                                  {ObjectClass::Tree, {30, 80, 35}}};
  for (const auto& [cls, color] : layers) {
    BinaryMask mask(p.block_width, p.block_height);
    bool any = false;
    for (const auto& obj : truth.objects)
      if (obj.cls == cls) {
        rasterize_into(mask, obj.polygon, block);
        any = true;
      }
    if (any) paint_mask(img, mask, color);
  }
  // Mounds last: bright disks with per-mound intensity jitter.
  for (const auto& m : mounds) {
    const int level = 210 + static_cast<int>(rng.below(41)) - 20;
    const auto y0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(m.y - m.r)));
    const auto y1 = std::min<std::int64_t>(p.block_height - 1, static_cast<std::int64_t>(std::ceil(m.y + m.r)));
    const auto x0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(m.x - m.r)));
    const auto x1 = std::min<std::int64_t>(p.block_width - 1, static_cast<std::int64_t>(std::ceil(m.x + m.r)));
    for (std::int64_t y = y0; y <= y1; ++y)
      for (std::int64_t x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - m.x, dy = y + 0.5 - m.y;
        if (dx * dx + dy * dy > m.r * m.r) continue;
        img.at(x, y, 0) = clamp8(level);
        img.at(x, y, 1) = clamp8(level - 15);
        img.at(x, y, 2) = clamp8(level - 40);
      }
  }
  return img;
}

AnnotationSet make_detections(const SynthParams& p, const AnnotationSet& truth,
                              const std::string& image_id) {
  const PatchGrid grid = build_grid(p.block_width, p.block_height, p.patch_size, true);
  const std::uint64_t degrade_seed = derive_seed(p.seed, "degrade");
  Rng score_rng(derive_seed(p.seed, "scores"));
  AnnotationSet det;
  det.image_id = image_id;
  det.image_width = p.block_width;
  det.image_height = p.block_height;
  for (const auto& obj : truth.objects) {
    if (obj.cls == ObjectClass::Mound) continue;
    det.objects.push_back(obj);
  }

  // Mounds grouped by the patch holding their centroid.
  std::vector<std::vector<std::size_t>> owned(static_cast<std::size_t>(grid.patch_count()));
  for (std::size_t i = 0; i < truth.objects.size(); ++i) {
    const auto& obj = truth.objects[i];
    if (obj.cls != ObjectClass::Mound) continue;
    const Point c = polygon_centroid(obj.polygon);
    const auto idx = grid.locate(static_cast<std::int64_t>(std::floor(c.x)),
                                 static_cast<std::int64_t>(std::floor(c.y)));
    owned[static_cast<std::size_t>(idx)].push_back(i);
  }
  for (std::int64_t idx = 0; idx < grid.patch_count(); ++idx) {
    const auto& ids = owned[static_cast<std::size_t>(idx)];
    if (ids.empty()) continue;
    const PatchBounds b = grid.bounds(idx);
    FeatureVector context;
    if (!p.miss.is_zero()) context = compute_features(clip_to_patch(truth, b), b);
    AnnotationSet local;
    for (std::size_t i : ids) local.objects.push_back(truth.objects[i]);
    const AnnotationSet kept =
        degrade_detections(local, context, p.miss, degrade_seed ^ static_cast<std::uint64_t>(idx));
    for (const auto& obj : kept.objects) det.objects.push_back(obj);
  }
  for (auto& obj : det.objects) obj.score = std::round(score_rng.uniform(0.6, 1.0) * 1000.0) / 1000.0;
  return det;
}

}  // namespace

SynthBlock generate_block(const SynthParams& params, const std::string& block_id) {
  params.validate();
  SynthBlock out;
  out.block_id = block_id;
  out.params = params;
  const std::string image_id = block_id + ".png";
  const PatchBounds block{0, 0, params.block_width, params.block_height, 0, 0};

  Rng mound_rng(derive_seed(params.seed, "mounds"));
  const auto mounds = place_mounds(params, mound_rng);

  AnnotationSet& truth = out.truth;
  truth.image_id = image_id;
  truth.image_width = params.block_width;
  truth.image_height = params.block_height;
  const std::pair<ObjectClass, double> targets[] = {{ObjectClass::Tree, params.tree_coverage},
                                                    {ObjectClass::Water, params.water_coverage},
                                                    {ObjectClass::Debris, params.debris_coverage}};
  for (const auto& [cls, target] : targets) {
    Rng rng(derive_seed(params.seed, class_name(cls)));
    const double got = place_obstacles(cls, target, block, rng, truth.objects);
    log::debug(block_id, ": ", class_name(cls), " coverage ", got, " (target ", target, ")");
  }
  for (const auto& m : mounds)
    truth.objects.push_back({ObjectClass::Mound, disk_polygon(m.x, m.y, m.r), std::nullopt, true});
  out.gt_count = static_cast<std::int64_t>(mounds.size());

  Rng paint_rng(derive_seed(params.seed, "raster"));
  out.raster = render(params, truth, mounds, paint_rng);
  out.detections = make_detections(params, truth, image_id);
  return out;
}

std::vector<SynthBlock> generate_suite(std::size_t n_blocks, const SynthParams& templ,
                                       std::uint64_t base_seed, unsigned jobs) {
  require(n_blocks >= 1, ErrorKind::InvalidArgument, "suite needs at least one block");
  templ.validate();
  Rng suite_rng(derive_seed(base_seed, "suite"));
  std::vector<std::size_t> strata(n_blocks);
  std::iota(strata.begin(), strata.end(), std::size_t{0});
  for (std::size_t i = n_blocks; i > 1; --i) std::swap(strata[i - 1], strata[suite_rng.below(i)]);

  std::vector<SynthParams> params(n_blocks, templ);
  for (std::size_t i = 0; i < n_blocks; ++i) {
    auto& p = params[i];
    p.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
    const double u = (static_cast<double>(strata[i]) + suite_rng.uniform()) / static_cast<double>(n_blocks);
    p.mound_density = templ.mound_density * (0.7 + 0.6 * u);
    p.tree_coverage = templ.tree_coverage * suite_rng.uniform(0.7, 1.3);
    p.water_coverage = templ.water_coverage * suite_rng.uniform(0.7, 1.3);
    p.debris_coverage = templ.debris_coverage * suite_rng.uniform(0.7, 1.3);
    const double total = p.tree_coverage + p.water_coverage + p.debris_coverage;
    if (total > 0.9) {
      p.tree_coverage *= 0.9 / total;
      p.water_coverage *= 0.9 / total;
      p.debris_coverage *= 0.9 / total;
    }
  }
  std::vector<SynthBlock> blocks(n_blocks);
  parallel_for(n_blocks, jobs, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "block_%02zu", i + 1);
    try {
      blocks[i] = generate_block(params[i], id);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("block ") + std::to_string(i) + ": " + e.what());
    }
  });
  return blocks;
}

// ---------------------------------------------------------------------------

namespace {

using json = nlohmann::ordered_json;

json params_to_json(const SynthParams& p) {
  json j;
  j["block_width"] = p.block_width;
  j["block_height"] = p.block_height;
  j["patch_size"] = p.patch_size;
  j["mound_density"] = p.mound_density;
  j["radius_min"] = p.radius_min;
  j["radius_max"] = p.radius_max;
  j["tree_coverage"] = p.tree_coverage;
  j["water_coverage"] = p.water_coverage;
  j["debris_coverage"] = p.debris_coverage;
  j["miss_model"] = {{"b0", p.miss.b0},
                     {"b_tree", p.miss.b_tree},
                     {"b_water", p.miss.b_water},
                     {"b_debris", p.miss.b_debris}};
  j["seed"] = p.seed;
  return j;
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& keys) {
  require(obj.is_object(), ErrorKind::Validation, where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    require(keys.count(it.key()) > 0, ErrorKind::Validation,
            where + " has unknown key '" + it.key() + "'");
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj[key];
  if constexpr (std::is_integral_v<T>) {
    require(v.is_number_integer(), ErrorKind::Validation,
            std::string("synth parameter '") + key + "' must be an integer");
  } else {
    require(v.is_number(), ErrorKind::Validation,
            std::string("synth parameter '") + key + "' must be a number");
  }
  out = v.get<T>();
}

}  // namespace

std::string synth_params_json(const SynthParams& params) { return params_to_json(params).dump(2) + "\n"; }

SynthParams parse_synth_params(const std::string& text, const SynthParams& defaults) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("malformed synth parameters: ") + e.what());
  }
  reject_unknown(doc, "synth parameters",
                 {"block_width", "block_height", "patch_size", "mound_density", "radius_min",
                  "radius_max", "tree_coverage", "water_coverage", "debris_coverage", "miss_model",
                  "seed"});
  SynthParams p = defaults;
  read_field(doc, "block_width", p.block_width);
  read_field(doc, "block_height", p.block_height);
  read_field(doc, "patch_size", p.patch_size);
  read_field(doc, "mound_density", p.mound_density);
  read_field(doc, "radius_min", p.radius_min);
  read_field(doc, "radius_max", p.radius_max);
  read_field(doc, "tree_coverage", p.tree_coverage);
  read_field(doc, "water_coverage", p.water_coverage);
  read_field(doc, "debris_coverage", p.debris_coverage);
  read_field(doc, "seed", p.seed);
  if (doc.contains("miss_model")) {
    const auto& mm = doc["miss_model"];
    reject_unknown(mm, "miss_model", {"b0", "b_tree", "b_water", "b_debris"});
    read_field(mm, "b0", p.miss.b0);
    read_field(mm, "b_tree", p.miss.b_tree);
    read_field(mm, "b_water", p.miss.b_water);
    read_field(mm, "b_debris", p.miss.b_debris);
  }
  p.validate();
  return p;
}

void write_block(const SynthBlock& block, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
  const fs::path base = fs::path(dir) / block.block_id;
  write_png(block.raster, base.string() + ".png");
  save_via(block.truth, base.string() + "_gt.json");
  save_via(block.detections, base.string() + "_det.json");
  save_grid_manifest({block.block_id, build_grid(block.params.block_width, block.params.block_height,
                                                 block.params.patch_size, true)},
                     base.string() + "_grid.json");
  json m;
  m["block_id"] = block.block_id;
  m["seed"] = block.params.seed;
  m["params"] = params_to_json(block.params);
  m["gt_count"] = block.gt_count;
  write_text_file(base.string() + "_manifest.json", m.dump(2) + "\n");
}

}  // namespace mc
