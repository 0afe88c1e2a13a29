#include "core/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "core/error.hpp"

namespace mc {
namespace {

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open image '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
  });
}

class TiffReader {
 public:
  TiffReader(std::vector<std::uint8_t> data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  Raster read() {
    require(data_.size() >= 8, ErrorKind::Parse, "truncated TIFF header in '" + path_ + "'");
    if (data_[0] == 'I' && data_[1] == 'I') little_ = true;
    else if (data_[0] == 'M' && data_[1] == 'M') little_ = false;
    else fail(ErrorKind::Parse, "'" + path_ + "' is not a TIFF file");
    require(u16(2) == 42, ErrorKind::Parse, "bad TIFF magic in '" + path_ + "'");

    const std::uint32_t ifd = u32(4);
    const std::uint16_t count = u16(ifd);
    std::uint32_t width = 0, height = 0, bits = 8, compression = 1, photometric = 1;
    std::uint32_t samples = 1, rows_per_strip = 0, planar = 1;
    std::vector<std::uint32_t> offsets, byte_counts;
    for (std::uint16_t i = 0; i < count; ++i) {
      const std::size_t e = ifd + 2 + 12u * i;
      const std::uint16_t tag = u16(e);
      const std::uint16_t type = u16(e + 2);
      const std::uint32_t n = u32(e + 4);
      auto values = read_values(e + 8, type, n);
      auto first = values.empty() ? 0u : values.front();
      switch (tag) {
        case 256: width = first; break;
        case 257: height = first; break;
        case 258:
          bits = first;
          for (auto v : values)
            require(v == 8, ErrorKind::Validation, "only 8-bit TIFF supported: '" + path_ + "'");
          break;
        case 259: compression = first; break;
        case 262: photometric = first; break;
        case 273: offsets = std::move(values); break;
        case 277: samples = first; break;
        case 278: rows_per_strip = first; break;
        case 279: byte_counts = std::move(values); break;
        case 284: planar = first; break;
        default: break;
      }
    }
    require(bits == 8, ErrorKind::Validation, "only 8-bit TIFF supported: '" + path_ + "'");
    require(compression == 1, ErrorKind::Validation,
            "only uncompressed TIFF supported: '" + path_ + "'");
    require(samples == 1 || samples == 3, ErrorKind::Validation,
            "TIFF must have 1 or 3 samples per pixel: '" + path_ + "'");
    require(planar == 1 || samples == 1, ErrorKind::Validation,
            "planar TIFF not supported: '" + path_ + "'");
    require(width >= 1 && height >= 1 && !offsets.empty() && offsets.size() == byte_counts.size(),
            ErrorKind::Parse, "incomplete TIFF directory in '" + path_ + "'");
    if (rows_per_strip == 0) rows_per_strip = height;

    const std::size_t row_len = static_cast<std::size_t>(width) * samples;
    std::vector<std::uint8_t> pixels;
    pixels.reserve(row_len * height);
    for (std::size_t s = 0; s < offsets.size() && pixels.size() < row_len * height; ++s) {
      const std::size_t remaining = row_len * height - pixels.size();
      const std::size_t len = std::min<std::size_t>(byte_counts[s], remaining);
      require(static_cast<std::size_t>(offsets[s]) + len <= data_.size(), ErrorKind::Parse,
              "TIFF strip runs past end of '" + path_ + "'");
      pixels.insert(pixels.end(), data_.begin() + offsets[s], data_.begin() + offsets[s] + static_cast<std::ptrdiff_t>(len));
    }
    require(pixels.size() == row_len * height, ErrorKind::Parse,
            "TIFF strips hold fewer samples than declared in '" + path_ + "'");
    if (photometric == 0 && samples == 1)
      for (auto& p : pixels) p = static_cast<std::uint8_t>(255 - p);
    return Raster(width, height, static_cast<int>(samples), std::move(pixels));
  }

 private:
  void need(std::size_t off, std::size_t n) const {
    require(off + n <= data_.size(), ErrorKind::Parse, "truncated TIFF '" + path_ + "'");
  }
  std::uint16_t u16(std::size_t off) const {
    need(off, 2);
    return little_ ? static_cast<std::uint16_t>(data_[off] | (data_[off + 1] << 8))
                   : static_cast<std::uint16_t>((data_[off] << 8) | data_[off + 1]);
  }
  std::uint32_t u32(std::size_t off) const {
    need(off, 4);
    std::uint32_t b0 = data_[off], b1 = data_[off + 1], b2 = data_[off + 2], b3 = data_[off + 3];
    return little_ ? (b0 | (b1 << 8) | (b2 << 16) | (b3 << 24))
                   : ((b0 << 24) | (b1 << 16) | (b2 << 8) | b3);
  }
  std::vector<std::uint32_t> read_values(std::size_t entry_value, std::uint16_t type,
                                         std::uint32_t n) const {
    std::size_t width = 0;
    switch (type) {
      case 1: width = 1; break;  // BYTE
      case 3: width = 2; break;  // SHORT
      case 4: width = 4; break;  // LONG
      default: return {};
    }
    const std::size_t base = (width * n <= 4) ? entry_value : u32(entry_value);
    std::vector<std::uint32_t> out(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::size_t off = base + width * i;
      if (width == 1) {
        need(off, 1);
        out[i] = data_[off];
      } else if (width == 2) {
        out[i] = u16(off);
      } else {
        out[i] = u32(off);
      }
    }
    return out;
  }

  std::vector<std::uint8_t> data_;
  std::string path_;
  bool little_ = true;
};

}  // namespace

Raster read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  auto bytes = slurp(path);
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    fail(ErrorKind::Parse, "cannot decode PNG '" + path + "': " + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                       : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::Parse, "cannot decode PNG '" + path + "': " + msg);
  }
  const std::int64_t w = image.width, h = image.height;
  if (!alpha) return Raster(w, h, color ? 3 : 1, std::move(buffer));

  const int ch = color ? 3 : 1;
  const int in_ch = ch + 1;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h * ch));
  std::vector<bool> valid(static_cast<std::size_t>(w * h));
  for (std::size_t i = 0; i < valid.size(); ++i) {
    for (int c = 0; c < ch; ++c) px[i * ch + c] = buffer[i * in_ch + c];
    valid[i] = buffer[i * in_ch + ch] != 0;
  }
  return Raster(w, h, ch, std::move(px), std::move(valid));
}

Raster read_tiff(const std::string& path) {
  return TiffReader(slurp(path), path).read();
}

Raster read_raster(const std::string& path) {
  if (has_suffix(path, ".tif") || has_suffix(path, ".tiff")) return read_tiff(path);
  return read_png(path);
}

void write_png(const Raster& raster, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  const bool color = raster.channels() == 3;
  const std::uint8_t* data = raster.pixels().data();
  std::vector<std::uint8_t> with_alpha;
  if (raster.valid_mask()) {
    const int ch = raster.channels();
    const auto& vm = *raster.valid_mask();
    with_alpha.resize(vm.size() * static_cast<std::size_t>(ch + 1));
    for (std::size_t i = 0; i < vm.size(); ++i) {
      for (int c = 0; c < ch; ++c) with_alpha[i * (ch + 1) + c] = raster.pixels()[i * ch + c];
      with_alpha[i * (ch + 1) + ch] = vm[i] ? 255 : 0;
    }
    data = with_alpha.data();
    image.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  } else {
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr))
    fail(ErrorKind::Io, "cannot write PNG '" + path + "': " + image.message);
}

void write_tiff(const Raster& raster, const std::string& path) {
  std::vector<std::uint8_t> out;
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  };
  const auto samples = static_cast<std::uint16_t>(raster.channels());
  const auto w = static_cast<std::uint32_t>(raster.width());
  const auto h = static_cast<std::uint32_t>(raster.height());
  const auto nbytes = static_cast<std::uint32_t>(raster.pixels().size());

  constexpr std::uint16_t kEntries = 10;
  const std::uint32_t ifd_offset = 8;
  const std::uint32_t ifd_size = 2 + 12 * kEntries + 4;
  const std::uint32_t bits_offset = ifd_offset + ifd_size;
  const std::uint32_t pixel_offset = bits_offset + (samples == 3 ? 6 : 0);

  out.insert(out.end(), {'I', 'I'});
  put16(42);
  put32(ifd_offset);
  put16(kEntries);
  auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
    put16(tag);
    put16(type);
    put32(count);
    if (type == 3 && count == 1) {
      put16(static_cast<std::uint16_t>(value));
      put16(0);
    } else {
      put32(value);
    }
  };
  entry(256, 4, 1, w);
  entry(257, 4, 1, h);
  if (samples == 3) entry(258, 3, 3, bits_offset);
  else entry(258, 3, 1, 8);
  entry(259, 3, 1, 1);
  entry(262, 3, 1, samples == 3 ? 2 : 1);
  entry(273, 4, 1, pixel_offset);
  entry(277, 3, 1, samples);
  entry(278, 4, 1, h);
  entry(279, 4, 1, nbytes);
  entry(284, 3, 1, 1);
  put32(0);
  if (samples == 3) {
    put16(8);
    put16(8);
    put16(8);
  }
  out.insert(out.end(), raster.pixels().begin(), raster.pixels().end());

  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot write TIFF '" + path + "'");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  require(static_cast<bool>(f), ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace mc
