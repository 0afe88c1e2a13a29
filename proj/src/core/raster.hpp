#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mc {

// 8-bit, row-major, channel-interleaved image with an optional validity mask
// (true = real data, false = nodata padding).
class Raster {
 public:
  Raster() = default;
  Raster(std::int64_t width, std::int64_t height, int channels);
  Raster(std::int64_t width, std::int64_t height, int channels,
         std::vector<std::uint8_t> pixels,
         std::optional<std::vector<bool>> valid_mask = std::nullopt);

  std::int64_t width() const noexcept { return width_; }
  std::int64_t height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return pixels_.empty(); }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }
  const std::optional<std::vector<bool>>& valid_mask() const noexcept { return valid_mask_; }

  std::uint8_t at(std::int64_t x, std::int64_t y, int c = 0) const {
    return pixels_[index(x, y, c)];
  }
  std::uint8_t& at(std::int64_t x, std::int64_t y, int c = 0) {
    return pixels_[index(x, y, c)];
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(std::int64_t x, std::int64_t y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  std::int64_t width_ = 0;
  std::int64_t height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> pixels_;
  std::optional<std::vector<bool>> valid_mask_;
};

struct PatchBounds {
  std::int64_t x0 = 0;
  std::int64_t y0 = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t row = 0;
  std::int64_t col = 0;

  std::int64_t x1() const noexcept { return x0 + width; }
  std::int64_t y1() const noexcept { return y0 + height; }
  std::int64_t area() const noexcept { return width * height; }

  friend bool operator==(const PatchBounds&, const PatchBounds&) = default;
};

inline constexpr std::int64_t kDefaultPatchSize = 608;

// Non-overlapping, row-major decomposition of a source raster into square
// patches. With include_partial the clipped right/bottom remainders are kept.
class PatchGrid {
 public:
  PatchGrid() = default;

  std::int64_t source_width() const noexcept { return source_width_; }
  std::int64_t source_height() const noexcept { return source_height_; }
  std::int64_t patch_size() const noexcept { return patch_size_; }
  std::int64_t rows() const noexcept { return rows_; }
  std::int64_t cols() const noexcept { return cols_; }
  bool include_partial() const noexcept { return include_partial_; }
  std::int64_t patch_count() const noexcept { return rows_ * cols_; }

  PatchBounds bounds(std::int64_t row, std::int64_t col) const;
  PatchBounds bounds(std::int64_t index) const;

  // Row-major index of the patch containing pixel (x, y), or -1 when the
  // pixel lies in a dropped remainder.
  std::int64_t locate(std::int64_t x, std::int64_t y) const;

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;

 private:
  friend PatchGrid build_grid(std::int64_t, std::int64_t, std::int64_t, bool);

  std::int64_t source_width_ = 0;
  std::int64_t source_height_ = 0;
  std::int64_t patch_size_ = kDefaultPatchSize;
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  bool include_partial_ = true;
};

PatchGrid build_grid(std::int64_t source_width, std::int64_t source_height,
                     std::int64_t patch_size = kDefaultPatchSize,
                     bool include_partial = true);

inline PatchBounds patch_bounds(const PatchGrid& grid, std::int64_t row, std::int64_t col) {
  return grid.bounds(row, col);
}

Raster extract_patch(const Raster& raster, const PatchBounds& bounds);

std::string patch_id(const std::string& block_id, std::int64_t row, std::int64_t col);

}  // namespace mc
