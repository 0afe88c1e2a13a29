#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/annotations.hpp"
#include "core/detect.hpp"
#include "core/raster.hpp"

namespace mc {

struct SynthParams {
  std::int64_t block_width = 2432;
  std::int64_t block_height = 2432;
  std::int64_t patch_size = kDefaultPatchSize;
  double mound_density = 25.0;  // mean mounds per patch_size^2 area
  double radius_min = 8.0;
  double radius_max = 12.0;
  double tree_coverage = 0.10;
  double water_coverage = 0.05;
  double debris_coverage = 0.05;
  MissModel miss{0.05, 0.6, 0.9, 0.5};
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const SynthParams&, const SynthParams&) = default;
};

// Coverage is matched to within this much of each target.
inline constexpr double kCoverageTolerance = 0.05;
inline constexpr int kMaxPlacementAttempts = 10000;

struct SynthBlock {
  std::string block_id;
  SynthParams params;
  Raster raster;
  AnnotationSet truth;
  AnnotationSet detections;
  std::int64_t gt_count = 0;

  friend bool operator==(const SynthBlock&, const SynthBlock&) = default;
};

SynthBlock generate_block(const SynthParams& params, const std::string& block_id = "block");

// Block i uses seed derive_seed(base_seed, i) and the template with density
// and coverages scaled by factors in [0.7, 1.3]. Density factors are
// stratified across the suite so every suite spans the range.
std::vector<SynthBlock> generate_suite(std::size_t n_blocks, const SynthParams& templ,
                                       std::uint64_t base_seed, unsigned jobs = 1);

std::string synth_params_json(const SynthParams& params);
// Missing keys keep the defaults; unknown keys are rejected.
SynthParams parse_synth_params(const std::string& text, const SynthParams& defaults = {});

// Writes <id>.png, <id>_gt.json, <id>_det.json, <id>_grid.json and
// <id>_manifest.json into `dir`.
void write_block(const SynthBlock& block, const std::string& dir);

}  // namespace mc
