#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/annotations.hpp"
#include "core/raster.hpp"

namespace mc {

inline constexpr std::size_t kFeatureDim = 4;

// Per-patch descriptor: detected mound count followed by the tree, water and
// debris area fractions of the patch.
struct FeatureVector {
  double mound_count = 0.0;
  double tree_ratio = 0.0;
  double water_ratio = 0.0;
  double debris_ratio = 0.0;

  std::array<double, kFeatureDim> as_array() const {
    return {mound_count, tree_ratio, water_ratio, debris_ratio};
  }
  static FeatureVector from_array(const std::array<double, kFeatureDim>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  void validate() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct PatchSample {
  std::string block_id;
  std::int64_t row = 0;
  std::int64_t col = 0;
  FeatureVector features;
  std::optional<double> target;  // ground-truth mound count

  std::string patch_id() const { return mc::patch_id(block_id, row, col); }

  friend bool operator==(const PatchSample&, const PatchSample&) = default;
};

struct TrainingSet {
  std::vector<PatchSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  bool all_targets() const;
  double local_count() const;   // sum of mound_count
  double target_total() const;  // sum of targets (requires all_targets)

  friend bool operator==(const TrainingSet&, const TrainingSet&) = default;
};

FeatureVector compute_features(const AnnotationSet& clipped, const PatchBounds& bounds);

// Clipped per-patch sets keyed by patch id.
using PatchAnnotations = std::map<std::string, AnnotationSet>;

PatchAnnotations split_by_grid(const AnnotationSet& set, const PatchGrid& grid,
                               const std::string& block_id, unsigned jobs = 1);

// Features from detections, targets from ground truth mound ownership.
// Without ground truth the samples carry no target (inference set).
TrainingSet build_dataset(const PatchAnnotations* ground_truth, const PatchAnnotations& detections,
                          const PatchGrid& grid, const std::string& block_id, unsigned jobs = 1);

// Whole-image convenience: splits both sets over the grid first.
TrainingSet build_dataset(const AnnotationSet* ground_truth, const AnnotationSet& detections,
                          const PatchGrid& grid, const std::string& block_id, unsigned jobs = 1);

void write_features_csv(const TrainingSet& set, const std::string& path);
std::string features_csv(const TrainingSet& set);
TrainingSet read_features_csv(const std::string& path);
TrainingSet parse_features_csv(const std::string& text);

}  // namespace mc
