#pragma once

#include <cstdint>
#include <vector>

#include "core/annotations.hpp"
#include "core/features.hpp"
#include "core/raster.hpp"

namespace mc {

// Threshold + connected-components detector. A stand-in that makes the
// pipeline runnable on synthetic rasters; not a segmentation model.
struct BlobParams {
  int channel = 0;
  int threshold = 128;
  std::int64_t min_area = 4;
  std::int64_t max_area = 1 << 20;
  int connectivity = 8;

  void validate() const;
};

// Labels foreground pixels (value >= threshold in `channel`, and valid when a
// mask is present). Background is 0; components are numbered 1..n in order of
// their first pixel in raster order.
std::vector<std::int32_t> label_components(const Raster& raster, const BlobParams& params,
                                           std::int32_t* count = nullptr);

// Outer boundary of component `label` traced along pixel edges; vertices are
// pixel corners, so the enclosed area equals the pixel count of a hole-free
// component. Collinear runs are merged into single edges.
Polygon trace_outer_boundary(const std::vector<std::int32_t>& labels, std::int64_t width,
                             std::int64_t height, std::int32_t label, int connectivity);

AnnotationSet detect_blobs(const Raster& raster, const BlobParams& params);

// Per-mound miss probability p = clamp(b0 + b2*x2 + b3*x3 + b4*x4, 0, 0.95).
struct MissModel {
  double b0 = 0.0;
  double b_tree = 0.0;
  double b_water = 0.0;
  double b_debris = 0.0;

  double miss_probability(const FeatureVector& context) const;
  bool is_zero() const { return b0 == 0.0 && b_tree == 0.0 && b_water == 0.0 && b_debris == 0.0; }
  friend bool operator==(const MissModel&, const MissModel&) = default;
};

inline constexpr double kMaxMissProbability = 0.95;

// Drops each mound independently with the model's miss probability for this
// patch context; all other objects pass through untouched.
AnnotationSet degrade_detections(const AnnotationSet& truth, const FeatureVector& context,
                                 const MissModel& model, std::uint64_t seed);

}  // namespace mc
