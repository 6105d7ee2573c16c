#pragma once

// Deterministic image perturbations: white patch overlays, area-average
// downscale and Gaussian blur. Every function is pure in (image, spec).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace provenance {

enum class PerturbationKind { Identity, SinglePatch, MultiPatch, Resize, Blur };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::Identity;
  int patch_size = 0;        // single_patch, multi_patch
  int count_min = 0;         // multi_patch
  int count_max = 0;         // multi_patch
  int target_size = 0;       // resize
  int intensity_percent = 0; // blur
  std::uint64_t seed = 0;    // single_patch, multi_patch

  static PerturbationSpec identity() { return {}; }
  static PerturbationSpec single_patch(int size = 128, std::uint64_t seed = 0) {
    return {PerturbationKind::SinglePatch, size, 0, 0, 0, 0, seed};
  }
  static PerturbationSpec multi_patch(int size = 64, int lo = 3, int hi = 5, std::uint64_t seed = 0) {
    return {PerturbationKind::MultiPatch, size, lo, hi, 0, 0, seed};
  }
  static PerturbationSpec resize(int target = 128) { return {PerturbationKind::Resize, 0, 0, 0, target, 0, 0}; }
  static PerturbationSpec blur(int percent) { return {PerturbationKind::Blur, 0, 0, 0, 0, percent, 0}; }

  bool randomized() const noexcept {
    return kind == PerturbationKind::SinglePatch || kind == PerturbationKind::MultiPatch;
  }

  // Stable row name: identity, single_patch, multi_patch, resize, blur<p>.
  std::string name() const {
    switch (kind) {
    case PerturbationKind::Identity: return "identity";
    case PerturbationKind::SinglePatch: return "single_patch";
    case PerturbationKind::MultiPatch: return "multi_patch";
    case PerturbationKind::Resize: return "resize";
    case PerturbationKind::Blur: return "blur" + std::to_string(intensity_percent);
    }
    return "unknown";
  }

  PerturbationSpec with_seed(std::uint64_t s) const {
    PerturbationSpec out = *this;
    out.seed = s;
    return out;
  }

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

inline PerturbationSpec parse_perturbation(const std::string& name) {
  if (name == "identity") return PerturbationSpec::identity();
  if (name == "single_patch") return PerturbationSpec::single_patch();
  if (name == "multi_patch") return PerturbationSpec::multi_patch();
  if (name == "resize") return PerturbationSpec::resize();
  if (name.rfind("blur", 0) == 0 && name.size() > 4) {
    try {
      std::size_t used = 0;
      const int p = std::stoi(name.substr(4), &used);
      if (used == name.size() - 4 && p >= 0 && p <= 100) return PerturbationSpec::blur(p);
    } catch (const std::exception&) {
    }
  }
  throw ValidationError("unknown perturbation '" + name + "'");
}

/// The seven modifications in table order.
inline std::vector<PerturbationSpec> default_perturbations() {
  return {PerturbationSpec::single_patch(), PerturbationSpec::multi_patch(), PerturbationSpec::resize(),
          PerturbationSpec::blur(20), PerturbationSpec::blur(40), PerturbationSpec::blur(60),
          PerturbationSpec::blur(80)};
}

namespace detail {

inline void check_patch(const Image& img, int size) {
  if (img.empty()) throw ValidationError("cannot perturb a zero-area image");
  if (size < 1) throw ValidationError("patch size must be >= 1");
  if (size > std::min(img.width, img.height))
    throw ValidationError("patch of " + std::to_string(size) + " px does not fit a " + std::to_string(img.width) +
                          "x" + std::to_string(img.height) + " image");
}

inline void paint_white(Image& img, int x0, int y0, int size) {
  for (int y = y0; y < y0 + size; ++y)
    std::fill_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(img.offset(x0, y)),
                static_cast<std::ptrdiff_t>(size) * img.channels, std::uint8_t{255});
}

// Top-left corner uniform over every position keeping the patch inside.
inline void random_patch(Image& img, int size, Rng& rng) {
  const int x = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(img.width - size)));
  const int y = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(img.height - size)));
  paint_white(img, x, y, size);
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

} // namespace detail

inline Image apply_single_patch(const Image& img, int size, std::uint64_t seed) {
  detail::check_patch(img, size);
  Image out = img;
  Rng rng(seed);
  detail::random_patch(out, size, rng);
  return out;
}

/// k ~ uniform{count_min..count_max} white squares at independent positions;
/// overlaps allowed.
inline Image apply_multi_patch(const Image& img, int count_min, int count_max, int patch_size, std::uint64_t seed) {
  detail::check_patch(img, patch_size);
  if (count_min < 1 || count_max < count_min) throw ValidationError("invalid patch count range");
  Image out = img;
  Rng rng(seed);
  const auto k = rng.uniform_int(static_cast<std::uint64_t>(count_min), static_cast<std::uint64_t>(count_max));
  for (std::uint64_t i = 0; i < k; ++i) detail::random_patch(out, patch_size, rng);
  return out;
}

// Number of patches apply_multi_patch draws for this seed.
inline int multi_patch_count(int count_min, int count_max, std::uint64_t seed) {
  Rng rng(seed);
  return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(count_min), static_cast<std::uint64_t>(count_max)));
}

/// Area-average resample to target x target.
inline Image apply_resize(const Image& img, int target) {
  if (target < 1) throw ValidationError("resize target must be >= 1");
  if (img.empty()) throw ValidationError("cannot resize a zero-area image");
  if (img.width == target && img.height == target) return img;
  Image out(target, target, img.channels);
  std::vector<double> plane(static_cast<std::size_t>(img.width) * img.height);
  for (int c = 0; c < img.channels; ++c) {
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = img.pixels[i * img.channels + c];
    const auto res = detail::area_resample(plane, img.width, img.height, target, target);
    for (std::size_t i = 0; i < res.size(); ++i) out.pixels[i * img.channels + c] = detail::to_u8(res[i]);
  }
  return out;
}

// sigma in pixels for a given intensity: 10 px at 100% on a 512 px image.
inline double blur_sigma(int intensity_percent, int width, int height) {
  return intensity_percent / 100.0 * 10.0 * std::min(width, height) / 512.0;
}

/// Separable Gaussian blur, radius ceil(3 sigma), edges clamped.
inline Image apply_blur(const Image& img, int intensity_percent) {
  if (intensity_percent < 0 || intensity_percent > 100) throw ValidationError("blur intensity must be in [0, 100]");
  if (img.empty()) throw ValidationError("cannot blur a zero-area image");
  const double sigma = blur_sigma(intensity_percent, img.width, img.height);
  if (intensity_percent == 0 || sigma <= 0) return img;

  const auto kernel = detail::gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width, h = img.height, ch = img.channels;
  const std::size_t taps = kernel.size();

  // Horizontal pass over an edge-padded copy of each row.
  std::vector<double> tmp(img.pixels.size());
  std::vector<double> row(static_cast<std::size_t>(w + 2 * radius));
  for (int y = 0; y < h; ++y)
    for (int c = 0; c < ch; ++c) {
      for (int i = 0; i < w + 2 * radius; ++i) row[i] = img.at(std::clamp(i - radius, 0, w - 1), y, c);
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (std::size_t k = 0; k < taps; ++k) acc += kernel[k] * row[x + k];
        tmp[img.offset(x, y) + c] = acc;
      }
    }

  // Vertical pass, accumulating whole rows so the inner loop is contiguous.
  Image out(w, h, ch);
  const std::size_t stride = static_cast<std::size_t>(w) * ch;
  std::vector<double> acc(stride);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = -radius; k <= radius; ++k) {
      const double wgt = kernel[k + radius];
      const double* src = &tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * stride];
      for (std::size_t i = 0; i < stride; ++i) acc[i] += wgt * src[i];
    }
    std::uint8_t* dst = &out.pixels[static_cast<std::size_t>(y) * stride];
    for (std::size_t i = 0; i < stride; ++i) dst[i] = detail::to_u8(acc[i]);
  }
  return out;
}

inline Image apply(const Image& img, const PerturbationSpec& spec) {
  switch (spec.kind) {
  case PerturbationKind::Identity: return img;
  case PerturbationKind::SinglePatch: return apply_single_patch(img, spec.patch_size, spec.seed);
  case PerturbationKind::MultiPatch:
    return apply_multi_patch(img, spec.count_min, spec.count_max, spec.patch_size, spec.seed);
  case PerturbationKind::Resize: return apply_resize(img, spec.target_size);
  case PerturbationKind::Blur: return apply_blur(img, spec.intensity_percent);
  }
  throw ValidationError("unknown perturbation kind");
}

/// Deterministic synthetic test image: a random gray background with random
/// filled rectangles and ellipses of random gray levels.
inline Image synthetic_image(std::uint64_t seed, int width = 512, int height = 512, int channels = 1) {
  Rng rng(seed);
  Image img(width, height, channels);
  auto color = [&] {
    std::uint8_t c[3];
    for (auto& v : c) v = static_cast<std::uint8_t>(rng.uniform_int(16, 240));
    return std::vector<std::uint8_t>(c, c + 3);
  };
  auto fill = [&](int x, int y, const std::vector<std::uint8_t>& c) {
    for (int k = 0; k < channels; ++k) img.at(x, y, k) = c[k];
  };
  const auto bg = color();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) fill(x, y, bg);

  const int shapes = static_cast<int>(rng.uniform_int(6, 12));
  for (int s = 0; s < shapes; ++s) {
    const auto c = color();
    const int cx = static_cast<int>(rng.uniform_int(0, width - 1));
    const int cy = static_cast<int>(rng.uniform_int(0, height - 1));
    const int rx = static_cast<int>(rng.uniform_int(width / 16 + 1, width / 3 + 1));
    const int ry = static_cast<int>(rng.uniform_int(height / 16 + 1, height / 3 + 1));
    const bool ellipse = rng.uniform_int(0, 1) == 1;
    for (int y = std::max(0, cy - ry); y < std::min(height, cy + ry); ++y)
      for (int x = std::max(0, cx - rx); x < std::min(width, cx + rx); ++x) {
        if (ellipse) {
          const double dx = static_cast<double>(x - cx) / rx, dy = static_cast<double>(y - cy) / ry;
          if (dx * dx + dy * dy > 1.0) continue;
        }
        fill(x, y, c);
      }
  }
  return img;
}

} // namespace provenance
