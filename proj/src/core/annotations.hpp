#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/geometry.hpp"
#include "core/raster.hpp"

namespace mc {

enum class ObjectClass { Mound = 0, Tree = 1, Water = 2, Debris = 3 };

inline constexpr std::array<ObjectClass, 4> kAllClasses = {
    ObjectClass::Mound, ObjectClass::Tree, ObjectClass::Water, ObjectClass::Debris};

const char* class_name(ObjectClass c) noexcept;
// Case-insensitive; nullopt for anything outside the four labels.
std::optional<ObjectClass> parse_class(std::string_view label);

struct AnnotatedObject {
  ObjectClass cls = ObjectClass::Mound;
  Polygon polygon;
  std::optional<double> score;  // absent for ground truth
  // Set by clip_to_patch: the instance's centroid falls in this patch, so it
  // contributes to the patch's mound count.
  bool counts_here = true;

  friend bool operator==(const AnnotatedObject&, const AnnotatedObject&) = default;
};

struct AnnotationSet {
  std::string image_id;
  std::int64_t image_width = 0;
  std::int64_t image_height = 0;
  std::vector<AnnotatedObject> objects;
  // Present when the set was produced by clip_to_patch.
  std::optional<PatchBounds> clip_region;

  std::size_t count(ObjectClass cls) const;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct ViaParseOptions {
  std::int64_t image_width = 0;
  std::int64_t image_height = 0;
  // Regions with a score below this are dropped. Regions without a score
  // (ground truth) are always kept.
  double score_threshold = 0.5;
};

inline constexpr double kDefaultScoreThreshold = 0.5;

// One AnnotationSet per image key, in document order.
std::vector<AnnotationSet> parse_via_document(std::string_view json_text,
                                              const ViaParseOptions& options);
// Single-image form: an empty document yields an empty set; more than one
// image key is a validation error.
AnnotationSet parse_via(std::string_view json_text, const ViaParseOptions& options);
AnnotationSet load_via(const std::string& path, const ViaParseOptions& options);

std::string serialize_via(const AnnotationSet& set);
void save_via(const AnnotationSet& set, const std::string& path);

AnnotationSet clip_to_patch(const AnnotationSet& set, const PatchBounds& bounds);

}  // namespace mc
