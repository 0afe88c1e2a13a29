#pragma once

#include <string>

#include "core/raster.hpp"

namespace mc {

// PNG (any bit depth/colour type, reduced to 8-bit gray or RGB; an alpha
// channel becomes the valid mask) and baseline uncompressed TIFF.
Raster read_raster(const std::string& path);
Raster read_png(const std::string& path);
Raster read_tiff(const std::string& path);

void write_png(const Raster& raster, const std::string& path);
// Uncompressed, little-endian, single strip.
void write_tiff(const Raster& raster, const std::string& path);

}  // namespace mc
