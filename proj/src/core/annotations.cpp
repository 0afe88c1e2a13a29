#include "core/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/log.hpp"

namespace mc {

using ordered_json = nlohmann::ordered_json;

const char* class_name(ObjectClass c) noexcept {
  switch (c) {
    case ObjectClass::Mound: return "mound";
    case ObjectClass::Tree: return "tree";
    case ObjectClass::Water: return "water";
    case ObjectClass::Debris: return "debris";
  }
  return "?";
}

std::optional<ObjectClass> parse_class(std::string_view label) {
  std::string lower(label);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (auto c : kAllClasses)
    if (lower == class_name(c)) return c;
  return std::nullopt;
}

std::size_t AnnotationSet::count(ObjectClass cls) const {
  return static_cast<std::size_t>(std::count_if(
      objects.begin(), objects.end(), [cls](const AnnotatedObject& o) { return o.cls == cls; }));
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  fail(ErrorKind::Validation, where + ": " + what);
}

std::vector<double> read_coords(const ordered_json& shape, const char* key, const std::string& where) {
  const std::string field = where + ".shape_attributes." + key;
  if (!shape.contains(key)) invalid(field, "missing");
  const auto& arr = shape.at(key);
  if (!arr.is_array()) invalid(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) invalid(field + "[" + std::to_string(i) + "]", "not a number");
    const double v = arr[i].get<double>();
    if (!std::isfinite(v)) invalid(field + "[" + std::to_string(i) + "]", "not finite");
    out.push_back(v);
  }
  return out;
}

std::optional<AnnotatedObject> parse_region(const ordered_json& region, const std::string& where,
                                            const ViaParseOptions& opt) {
  if (!region.is_object()) invalid(where, "region must be an object");
  if (!region.contains("shape_attributes") || !region["shape_attributes"].is_object())
    invalid(where + ".shape_attributes", "missing or not an object");
  const auto& shape = region["shape_attributes"];
  if (!shape.contains("name") || !shape["name"].is_string())
    invalid(where + ".shape_attributes.name", "missing");
  const auto shape_name = shape["name"].get<std::string>();
  if (shape_name != "polygon")
    invalid(where + ".shape_attributes.name", "unsupported shape '" + shape_name + "'");

  if (!region.contains("region_attributes") || !region["region_attributes"].is_object())
    invalid(where + ".region_attributes", "missing or not an object");
  const auto& attrs = region["region_attributes"];
  if (!attrs.contains("class") || !attrs["class"].is_string())
    invalid(where + ".region_attributes.class", "missing");
  const auto label = attrs["class"].get<std::string>();
  const auto cls = parse_class(label);
  if (!cls) invalid(where + ".region_attributes.class", "unknown class label '" + label + "'");

  AnnotatedObject obj;
  obj.cls = *cls;
  if (attrs.contains("score")) {
    const auto& s = attrs["score"];
    if (!s.is_number()) invalid(where + ".region_attributes.score", "not a number");
    const double score = s.get<double>();
    if (!(score >= 0.0 && score <= 1.0))
      invalid(where + ".region_attributes.score", "outside [0, 1]");
    obj.score = score;
  }

  const auto xs = read_coords(shape, "all_points_x", where);
  const auto ys = read_coords(shape, "all_points_y", where);
  if (xs.size() != ys.size())
    invalid(where + ".shape_attributes", "all_points_x and all_points_y differ in length");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Point p{xs[i], ys[i]};
    if (obj.polygon.empty() || !(obj.polygon.back() == p)) obj.polygon.push_back(p);
  }
  if (obj.polygon.size() > 1 && obj.polygon.front() == obj.polygon.back()) obj.polygon.pop_back();
  if (obj.polygon.size() < 3)
    invalid(where, "polygon needs at least 3 distinct vertices, got " + std::to_string(obj.polygon.size()));
  if (!is_simple(obj.polygon)) invalid(where, "polygon is self-intersecting");

  if (obj.score && *obj.score < opt.score_threshold) return std::nullopt;

  for (auto& p : obj.polygon) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(opt.image_width));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(opt.image_height));
  }
  if (polygon_area(obj.polygon) <= 0.0) {
    log::warn(where, ": polygon has no area inside the image, dropped");
    return std::nullopt;
  }
  return obj;
}

}  // namespace

std::vector<AnnotationSet> parse_via_document(std::string_view json_text,
                                              const ViaParseOptions& opt) {
  require(opt.image_width >= 1 && opt.image_height >= 1, ErrorKind::InvalidArgument,
          "image extent is required to parse annotations");
  require(opt.score_threshold >= 0.0 && opt.score_threshold <= 1.0, ErrorKind::InvalidArgument,
          "score threshold must lie in [0, 1]");
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, "malformed annotation JSON at line " +
                               std::to_string(line_of(json_text, e.byte == 0 ? 0 : e.byte - 1)) +
                               ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Validation, "annotation document must be a JSON object");

  std::vector<AnnotationSet> sets;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string where = "'" + it.key() + "'";
    const auto& image = it.value();
    if (!image.is_object()) invalid(where, "image entry must be an object");
    AnnotationSet set;
    set.image_width = opt.image_width;
    set.image_height = opt.image_height;
    if (image.contains("filename")) {
      if (!image["filename"].is_string()) invalid(where + ".filename", "not a string");
      set.image_id = image["filename"].get<std::string>();
    } else {
      invalid(where + ".filename", "missing");
    }
    if (!image.contains("regions") || !image["regions"].is_array())
      invalid(where + ".regions", "missing or not an array");
    const auto& regions = image["regions"];
    for (std::size_t i = 0; i < regions.size(); ++i) {
      auto obj = parse_region(regions[i], where + ".regions[" + std::to_string(i) + "]", opt);
      if (obj) set.objects.push_back(std::move(*obj));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

AnnotationSet parse_via(std::string_view json_text, const ViaParseOptions& opt) {
  auto sets = parse_via_document(json_text, opt);
  if (sets.empty()) {
    AnnotationSet empty;
    empty.image_width = opt.image_width;
    empty.image_height = opt.image_height;
    return empty;
  }
  require(sets.size() == 1, ErrorKind::Validation,
          "expected annotations for one image, found " + std::to_string(sets.size()));
  return std::move(sets.front());
}

AnnotationSet load_via(const std::string& path, const ViaParseOptions& opt) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open annotation file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_via(ss.str(), opt);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string serialize_via(const AnnotationSet& set) {
  ordered_json regions = ordered_json::array();
  for (const auto& obj : set.objects) {
    ordered_json xs = ordered_json::array(), ys = ordered_json::array();
    for (const auto& p : obj.polygon) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    ordered_json shape;
    shape["name"] = "polygon";
    shape["all_points_x"] = std::move(xs);
    shape["all_points_y"] = std::move(ys);
    ordered_json attrs;
    attrs["class"] = class_name(obj.cls);
    if (obj.score) attrs["score"] = *obj.score;
    ordered_json region;
    region["shape_attributes"] = std::move(shape);
    region["region_attributes"] = std::move(attrs);
    regions.push_back(std::move(region));
  }
  ordered_json image;
  image["filename"] = set.image_id;
  image["regions"] = std::move(regions);
  ordered_json doc;
  doc[set.image_id] = std::move(image);
  return doc.dump(1) + "\n";
}

void save_via(const AnnotationSet& set, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write annotation file '" + path + "'");
  out << serialize_via(set);
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

AnnotationSet clip_to_patch(const AnnotationSet& set, const PatchBounds& bounds) {
  require(bounds.width >= 1 && bounds.height >= 1 && bounds.x0 >= 0 && bounds.y0 >= 0 &&
              bounds.x1() <= set.image_width && bounds.y1() <= set.image_height,
          ErrorKind::InvalidArgument, "clip bounds exceed the annotated image extent");
  AnnotationSet out;
  out.image_id = set.image_id;
  out.image_width = set.image_width;
  out.image_height = set.image_height;
  out.clip_region = bounds;
  const auto x0 = static_cast<double>(bounds.x0), y0 = static_cast<double>(bounds.y0);
  const auto x1 = static_cast<double>(bounds.x1()), y1 = static_cast<double>(bounds.y1());
  for (const auto& obj : set.objects) {
    Polygon clipped = clip_to_rect(obj.polygon, x0, y0, x1, y1);
    const bool has_area = clipped.size() >= 3 && polygon_area(clipped) > 0.0;
    bool owned = false;
    if (obj.cls == ObjectClass::Mound) {
      // Half-open ownership: each centroid lies in exactly one patch.
      const Point c = polygon_centroid(obj.polygon);
      owned = c.x >= x0 && c.x < x1 && c.y >= y0 && c.y < y1;
    }
    // A concave mound can own a patch its outline never enters; it is kept
    // with an empty outline so the count still lands somewhere.
    if (!has_area && !owned) continue;
    AnnotatedObject piece;
    piece.cls = obj.cls;
    piece.score = obj.score;
    if (has_area) piece.polygon = std::move(clipped);
    piece.counts_here = obj.cls != ObjectClass::Mound || owned;
    out.objects.push_back(std::move(piece));
  }
  return out;
}

}  // namespace mc
