#pragma once

#include <cmath>
#include <vector>

#include "embedding.hpp"
#include "error.hpp"
#include "image.hpp"

namespace provenance {

inline constexpr int kToyGrid = 16;
inline constexpr std::size_t kToyDim = kToyGrid * kToyGrid;

/// Model-free reference embedder: grayscale, area-average to a 16x16 grid,
/// flatten row-major, scale to unit Euclidean norm.
inline EmbeddingVector toy_embed(const Image& img) {
  if (img.empty()) throw ValidationError("cannot embed a zero-area image");
  const auto cells = detail::area_resample(grayscale(img), img.width, img.height, kToyGrid, kToyGrid);
  double norm2 = 0;
  for (double c : cells) norm2 += c * c;
  if (norm2 == 0) throw ValidationError("cannot embed an all-black image");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = static_cast<float>(cells[i] * inv);
  return EmbeddingVector(std::move(out));
}

} // namespace provenance
