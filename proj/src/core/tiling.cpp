#include "core/tiling.hpp"

#include <filesystem>

#include "core/error.hpp"
#include "core/image_io.hpp"
#include "core/parallel.hpp"

namespace mc {

std::vector<std::string> write_tiles(const Raster& raster, const GridManifest& manifest,
                                     const std::string& dir, unsigned jobs) {
  namespace fs = std::filesystem;
  const PatchGrid& grid = manifest.grid;
  require(grid.source_width() == raster.width() && grid.source_height() == raster.height(),
          ErrorKind::Consistency, "grid does not match the raster dimensions");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
  std::vector<std::string> paths(static_cast<std::size_t>(grid.patch_count()));
  parallel_for(paths.size(), jobs, [&](std::size_t i) {
    const PatchBounds b = grid.bounds(static_cast<std::int64_t>(i));
    paths[i] = (fs::path(dir) / (patch_id(manifest.block_id, b.row, b.col) + ".png")).string();
    write_png(extract_patch(raster, b), paths[i]);
  });
  save_grid_manifest(manifest, (fs::path(dir) / (manifest.block_id + "_grid.json")).string());
  return paths;
}

}  // namespace mc
