#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace provenance {

/// 8-bit raster, interleaved, row-major. channels is 1 (gray) or 3 (RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w > 0 ? w : 0) * (h > 0 ? h : 0) * c, fill) {
    if (c != 1 && c != 3) throw ValidationError("image must have 1 or 3 channels");
  }

  bool empty() const noexcept { return width <= 0 || height <= 0; }

  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels;
  }
  std::uint8_t& at(int x, int y, int c = 0) { return pixels[offset(x, y) + c]; }
  std::uint8_t at(int x, int y, int c = 0) const { return pixels[offset(x, y) + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

namespace detail {

// Area-weighted resampling of one double plane from (w,h) to (ow,oh). Each
// output cell is the exact area mean of the input region it covers.
inline std::vector<double> area_resample(const std::vector<double>& src, int w, int h, int ow, int oh) {
  // Per-axis overlap weights: for output index o, list of (input index, weight).
  auto axis_weights = [](int in, int out) {
    std::vector<std::vector<std::pair<int, double>>> table(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double lo = o * scale, hi = (o + 1) * scale;
      for (int i = static_cast<int>(lo); i < in && i < hi; ++i) {
        const double overlap = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
        if (overlap > 0) table[o].emplace_back(i, overlap / scale);
      }
    }
    return table;
  };
  const auto wx = axis_weights(w, ow);
  const auto wy = axis_weights(h, oh);

  std::vector<double> rows(static_cast<std::size_t>(ow) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0;
      for (auto [x, wgt] : wx[ox]) acc += wgt * src[static_cast<std::size_t>(y) * w + x];
      rows[static_cast<std::size_t>(y) * ow + ox] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0;
      for (auto [y, wgt] : wy[oy]) acc += wgt * rows[static_cast<std::size_t>(y) * ow + ox];
      out[static_cast<std::size_t>(oy) * ow + ox] = acc;
    }
  return out;
}

inline std::uint8_t to_u8(double v) {
  if (v <= 0) return 0;
  if (v >= 255) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

} // namespace detail

// Luma (BT.601 weights) as doubles, row-major.
inline std::vector<double> grayscale(const Image& img) {
  std::vector<double> out(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* p = &img.pixels[i * img.channels];
    out[i] = img.channels == 1 ? p[0] : 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary netpbm (P5 gray / P6 RGB, maxval 255).

inline Image decode_pnm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_ws();
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw ValidationError("pnm: malformed header");
    return std::stoi(bytes.substr(start, pos - start));
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ValidationError("pnm: unsupported image format (expected P5 or P6)");
  const int channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const int w = read_int();
  const int h = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw ValidationError("pnm: only maxval 255 is supported");
  if (w <= 0 || h <= 0) throw ValidationError("pnm: zero-area image");
  ++pos; // single whitespace byte after maxval
  Image img(w, h, channels);
  if (bytes.size() < pos + img.pixels.size()) throw ValidationError("pnm: truncated pixel data");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
  return img;
}

inline std::string encode_pnm(const Image& img) {
  std::ostringstream os;
  os << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::string out = os.str();
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

inline Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

inline void write_pnm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = encode_pnm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write image " + path.string());
}

} // namespace provenance
