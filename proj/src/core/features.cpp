#include "core/features.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mc {

void FeatureVector::validate() const {
  require(std::isfinite(mound_count) && mound_count >= 0.0, ErrorKind::Validation,
          "mound count must be a non-negative number");
  const double ratios[] = {tree_ratio, water_ratio, debris_ratio};
  const char* names[] = {"tree", "water", "debris"};
  for (int i = 0; i < 3; ++i)
    require(ratios[i] >= 0.0 && ratios[i] <= 1.0, ErrorKind::Validation,
            std::string(names[i]) + " ratio outside [0, 1]");
}

bool TrainingSet::all_targets() const {
  for (const auto& s : samples)
    if (!s.target) return false;
  return true;
}

double TrainingSet::local_count() const {
  double total = 0.0;
  for (const auto& s : samples) total += s.features.mound_count;
  return total;
}

double TrainingSet::target_total() const {
  double total = 0.0;
  for (const auto& s : samples) {
    require(s.target.has_value(), ErrorKind::Validation,
            "sample " + s.patch_id() + " has no target");
    total += *s.target;
  }
  return total;
}

FeatureVector compute_features(const AnnotationSet& clipped, const PatchBounds& bounds) {
  require(bounds.width >= 1 && bounds.height >= 1, ErrorKind::InvalidArgument,
          "feature bounds must be non-empty");
  if (clipped.clip_region) {
    const auto& r = *clipped.clip_region;
    require(r.x0 == bounds.x0 && r.y0 == bounds.y0 && r.width == bounds.width &&
                r.height == bounds.height,
            ErrorKind::InvalidArgument, "annotations were clipped to different patch bounds");
  }
  constexpr double kSlack = 1e-9;
  const auto x0 = static_cast<double>(bounds.x0), y0 = static_cast<double>(bounds.y0);
  const auto x1 = static_cast<double>(bounds.x1()), y1 = static_cast<double>(bounds.y1());

  FeatureVector fv;
  BinaryMask tree(bounds.width, bounds.height), water(bounds.width, bounds.height),
      debris(bounds.width, bounds.height);
  for (const auto& obj : clipped.objects) {
    for (const auto& p : obj.polygon)
      require(p.x >= x0 - kSlack && p.x <= x1 + kSlack && p.y >= y0 - kSlack && p.y <= y1 + kSlack,
              ErrorKind::InvalidArgument, "annotation vertex lies outside the patch bounds");
    switch (obj.cls) {
      case ObjectClass::Mound:
        if (obj.counts_here) fv.mound_count += 1.0;
        break;
      case ObjectClass::Tree: rasterize_into(tree, obj.polygon, bounds); break;
      case ObjectClass::Water: rasterize_into(water, obj.polygon, bounds); break;
      case ObjectClass::Debris: rasterize_into(debris, obj.polygon, bounds); break;
    }
  }
  const auto area = static_cast<double>(bounds.area());
  fv.tree_ratio = static_cast<double>(tree.count()) / area;
  fv.water_ratio = static_cast<double>(water.count()) / area;
  fv.debris_ratio = static_cast<double>(debris.count()) / area;
  return fv;
}

PatchAnnotations split_by_grid(const AnnotationSet& set, const PatchGrid& grid,
                               const std::string& block_id, unsigned jobs) {
  const auto n = static_cast<std::size_t>(grid.patch_count());
  std::vector<AnnotationSet> pieces(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    pieces[i] = clip_to_patch(set, grid.bounds(static_cast<std::int64_t>(i)));
  });
  PatchAnnotations out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = grid.bounds(static_cast<std::int64_t>(i));
    out.emplace(patch_id(block_id, b.row, b.col), std::move(pieces[i]));
  }
  return out;
}

TrainingSet build_dataset(const PatchAnnotations* ground_truth, const PatchAnnotations& detections,
                          const PatchGrid& grid, const std::string& block_id, unsigned jobs) {
  if (ground_truth) {
    std::vector<std::string> missing;
    for (const auto& [id, _] : detections)
      if (!ground_truth->count(id)) missing.push_back(id);
    if (!missing.empty()) {
      std::string list;
      for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
      fail(ErrorKind::Consistency, "patches with detections but no ground truth: " + list);
    }
  }
  const auto n = static_cast<std::size_t>(grid.patch_count());
  TrainingSet out;
  out.samples.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto b = grid.bounds(static_cast<std::int64_t>(i));
    const auto id = patch_id(block_id, b.row, b.col);
    PatchSample& s = out.samples[i];
    s.block_id = block_id;
    s.row = b.row;
    s.col = b.col;
    const auto det = detections.find(id);
    if (det != detections.end()) {
      s.features = compute_features(det->second, b);
    }
    if (ground_truth) {
      const auto gt = ground_truth->find(id);
      if (gt == ground_truth->end()) {
        // A patch with nothing detected and no ground truth entry has no
        // mounds by construction.
        s.target = 0.0;
      } else {
        double owned = 0.0;
        for (const auto& obj : gt->second.objects)
          if (obj.cls == ObjectClass::Mound && obj.counts_here) owned += 1.0;
        s.target = owned;
      }
    }
  });
  return out;
}

TrainingSet build_dataset(const AnnotationSet* ground_truth, const AnnotationSet& detections,
                          const PatchGrid& grid, const std::string& block_id, unsigned jobs) {
  const auto det = split_by_grid(detections, grid, block_id, jobs);
  if (!ground_truth) return build_dataset(nullptr, det, grid, block_id, jobs);
  const auto gt = split_by_grid(*ground_truth, grid, block_id, jobs);
  return build_dataset(&gt, det, grid, block_id, jobs);
}

namespace {

constexpr const char* kHeader = "block_id,row,col,x1,x2,x3,x4,y";

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, std::size_t line_no, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  require(!cell.empty() && end == cell.c_str() + cell.size() && std::isfinite(v),
          ErrorKind::Parse,
          "row " + std::to_string(line_no) + ": column " + column + " is not a number: '" + cell + "'");
  return v;
}

}  // namespace

std::string features_csv(const TrainingSet& set) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& s : set.samples) {
    require(s.block_id.find_first_of(",\n\r") == std::string::npos, ErrorKind::Validation,
            "block id may not contain commas or newlines");
    out += s.block_id + "," + std::to_string(s.row) + "," + std::to_string(s.col) + "," +
           fmt9(s.features.mound_count) + "," + fmt9(s.features.tree_ratio) + "," +
           fmt9(s.features.water_ratio) + "," + fmt9(s.features.debris_ratio) + "," +
           (s.target ? fmt9(*s.target) : std::string()) + "\n";
  }
  return out;
}

void write_features_csv(const TrainingSet& set, const std::string& path) {
  const auto text = features_csv(set);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write feature CSV '" + path + "'");
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

TrainingSet parse_features_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  TrainingSet set;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      require(line == kHeader, ErrorKind::Parse,
              "row 1: expected header '" + std::string(kHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    require(cells.size() == 8, ErrorKind::Parse,
            "row " + std::to_string(line_no) + ": expected 8 columns, found " +
                std::to_string(cells.size()));
    PatchSample s;
    s.block_id = cells[0];
    const double row = parse_number(cells[1], line_no, "row");
    const double col = parse_number(cells[2], line_no, "col");
    require(row >= 0 && col >= 0 && row == std::floor(row) && col == std::floor(col),
            ErrorKind::Validation,
            "row " + std::to_string(line_no) + ": patch indices must be non-negative integers");
    s.row = static_cast<std::int64_t>(row);
    s.col = static_cast<std::int64_t>(col);
    s.features.mound_count = parse_number(cells[3], line_no, "x1");
    s.features.tree_ratio = parse_number(cells[4], line_no, "x2");
    s.features.water_ratio = parse_number(cells[5], line_no, "x3");
    s.features.debris_ratio = parse_number(cells[6], line_no, "x4");
    try {
      s.features.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Validation, "row " + std::to_string(line_no) + ": " + e.what());
    }
    if (!cells[7].empty()) {
      const double y = parse_number(cells[7], line_no, "y");
      require(y >= 0.0, ErrorKind::Validation,
              "row " + std::to_string(line_no) + ": target must be non-negative");
      s.target = y;
    }
    set.samples.push_back(std::move(s));
  }
  require(header_seen, ErrorKind::Parse, "feature CSV is empty (header row is mandatory)");
  return set;
}

TrainingSet read_features_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open feature CSV '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_features_csv(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace mc
