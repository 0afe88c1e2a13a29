#pragma once

#include <string>

#include "core/raster.hpp"

namespace mc {

// Sidecar written by `tile` and `synth`: ties a block id to the grid its
// patches were cut with, so later stages can rebuild the same grid.
struct GridManifest {
  std::string block_id;
  PatchGrid grid;

  friend bool operator==(const GridManifest&, const GridManifest&) = default;
};

std::string grid_manifest_json(const GridManifest& manifest);
GridManifest parse_grid_manifest(const std::string& text);
void save_grid_manifest(const GridManifest& manifest, const std::string& path);
GridManifest load_grid_manifest(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mc
