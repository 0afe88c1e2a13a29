#include "core/raster.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace mc {

Raster::Raster(std::int64_t width, std::int64_t height, int channels)
    : Raster(width, height, channels,
             std::vector<std::uint8_t>(static_cast<std::size_t>(std::max<std::int64_t>(width, 0)) *
                                       static_cast<std::size_t>(std::max<std::int64_t>(height, 0)) *
                                       static_cast<std::size_t>(std::max(channels, 0)))) {}

Raster::Raster(std::int64_t width, std::int64_t height, int channels,
               std::vector<std::uint8_t> pixels,
               std::optional<std::vector<bool>> valid_mask)
    : width_(width),
      height_(height),
      channels_(channels),
      pixels_(std::move(pixels)),
      valid_mask_(std::move(valid_mask)) {
  require(width >= 1 && height >= 1, ErrorKind::InvalidArgument,
          "raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
              std::to_string(height));
  require(channels == 1 || channels == 3, ErrorKind::InvalidArgument,
          "raster channels must be 1 or 3, got " + std::to_string(channels));
  const auto npx = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  require(pixels_.size() == npx * static_cast<std::size_t>(channels), ErrorKind::InvalidArgument,
          "raster pixel buffer has " + std::to_string(pixels_.size()) + " samples, expected " +
              std::to_string(npx * static_cast<std::size_t>(channels)));
  if (valid_mask_) {
    require(valid_mask_->size() == npx, ErrorKind::InvalidArgument,
            "valid mask length does not match raster size");
  }
}

PatchGrid build_grid(std::int64_t source_width, std::int64_t source_height,
                     std::int64_t patch_size, bool include_partial) {
  require(source_width >= 1 && source_height >= 1 && patch_size >= 1,
          ErrorKind::InvalidArgument,
          "grid dimensions must be >= 1 (width=" + std::to_string(source_width) +
              ", height=" + std::to_string(source_height) +
              ", patch_size=" + std::to_string(patch_size) + ")");
  PatchGrid g;
  g.source_width_ = source_width;
  g.source_height_ = source_height;
  g.patch_size_ = patch_size;
  g.include_partial_ = include_partial;
  if (include_partial) {
    g.cols_ = (source_width + patch_size - 1) / patch_size;
    g.rows_ = (source_height + patch_size - 1) / patch_size;
  } else {
    g.cols_ = source_width / patch_size;
    g.rows_ = source_height / patch_size;
  }
  return g;
}

PatchBounds PatchGrid::bounds(std::int64_t row, std::int64_t col) const {
  require(row >= 0 && row < rows_ && col >= 0 && col < cols_, ErrorKind::Index,
          "patch index (" + std::to_string(row) + "," + std::to_string(col) +
              ") outside grid of " + std::to_string(rows_) + "x" + std::to_string(cols_));
  PatchBounds b;
  b.row = row;
  b.col = col;
  b.x0 = col * patch_size_;
  b.y0 = row * patch_size_;
  b.width = std::min(patch_size_, source_width_ - b.x0);
  b.height = std::min(patch_size_, source_height_ - b.y0);
  return b;
}

PatchBounds PatchGrid::bounds(std::int64_t index) const {
  require(index >= 0 && index < patch_count(), ErrorKind::Index,
          "patch index " + std::to_string(index) + " outside grid");
  return bounds(index / cols_, index % cols_);
}

std::int64_t PatchGrid::locate(std::int64_t x, std::int64_t y) const {
  if (x < 0 || y < 0 || x >= source_width_ || y >= source_height_) return -1;
  const std::int64_t col = x / patch_size_;
  const std::int64_t row = y / patch_size_;
  if (row >= rows_ || col >= cols_) return -1;
  return row * cols_ + col;
}

Raster extract_patch(const Raster& raster, const PatchBounds& b) {
  require(b.width >= 1 && b.height >= 1 && b.x0 >= 0 && b.y0 >= 0 &&
              b.x1() <= raster.width() && b.y1() <= raster.height(),
          ErrorKind::InvalidArgument,
          "patch bounds exceed raster extent " + std::to_string(raster.width()) + "x" +
              std::to_string(raster.height()));
  const auto ch = static_cast<std::size_t>(raster.channels());
  const auto src_stride = static_cast<std::size_t>(raster.width()) * ch;
  const auto row_len = static_cast<std::size_t>(b.width) * ch;
  std::vector<std::uint8_t> out(row_len * static_cast<std::size_t>(b.height));
  const auto& src = raster.pixels();
  for (std::int64_t r = 0; r < b.height; ++r) {
    const auto offset = static_cast<std::size_t>(b.y0 + r) * src_stride +
                        static_cast<std::size_t>(b.x0) * ch;
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(offset), row_len,
                out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * row_len));
  }
  std::optional<std::vector<bool>> mask;
  if (raster.valid_mask()) {
    const auto& vm = *raster.valid_mask();
    mask.emplace(static_cast<std::size_t>(b.width * b.height));
    for (std::int64_t r = 0; r < b.height; ++r)
      for (std::int64_t c = 0; c < b.width; ++c)
        (*mask)[static_cast<std::size_t>(r * b.width + c)] =
            vm[static_cast<std::size_t>((b.y0 + r) * raster.width() + b.x0 + c)];
  }
  return Raster(b.width, b.height, raster.channels(), std::move(out), std::move(mask));
}

std::string patch_id(const std::string& block_id, std::int64_t row, std::int64_t col) {
  return block_id + "_r" + std::to_string(row) + "_c" + std::to_string(col);
}

}  // namespace mc
