#pragma once

#include <string>
#include <vector>

#include "core/manifest.hpp"
#include "core/raster.hpp"

namespace mc {

// Writes every patch of `grid` as <dir>/<patch id>.png plus
// <dir>/<block_id>_grid.json. Returns the patch file paths in grid order.
std::vector<std::string> write_tiles(const Raster& raster, const GridManifest& manifest,
                                     const std::string& dir, unsigned jobs);

}  // namespace mc
