#pragma once

// Seeded engine fixture: 20 AI + 20 human toy-embedded synthetic images in
// the "train" namespace, with matching ledger entries.

#include <string>
#include <vector>

#include <provenance/benchmark.hpp>
#include <provenance/perturb.hpp>
#include <provenance/pipeline.hpp>
#include <provenance/toy_embed.hpp>

namespace testutil {

inline std::vector<provenance::Record> fixture_records(provenance::Label label, std::size_t n = 20) {
  std::vector<provenance::Record> out;
  const std::uint64_t base = label == provenance::Label::AI ? 1000 : 2000;
  const std::string prefix = label == provenance::Label::AI ? "ai" : "hu";
  for (std::size_t i = 0; i < n; ++i) {
    const auto img = provenance::synthetic_image(base + i, 128, 128, 3);
    const std::string id = prefix + std::to_string(i);
    out.push_back({{id, id + ".ppm", label, "train"}, provenance::toy_embed(img)});
  }
  return out;
}

inline void seed_engine(provenance::Engine& e) {
  e.ingest_records(fixture_records(provenance::Label::AI), "ai", "train");
  e.ingest_records(fixture_records(provenance::Label::HUMAN), "human", "train");
}

// Unseen probes: lightly perturbed fixture images and fresh synthetic images.
inline std::vector<provenance::EmbeddingVector> fixture_probes(std::size_t n = 50) {
  std::vector<provenance::EmbeddingVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      const std::uint64_t base = (i / 2) % 2 == 0 ? 1000 : 2000;
      const auto img = provenance::synthetic_image(base + (i / 2) % 20, 128, 128, 3);
      out.push_back(provenance::toy_embed(provenance::apply_single_patch(img, 16, i)));
    } else {
      out.push_back(provenance::toy_embed(provenance::synthetic_image(9000 + i, 128, 128, 3)));
    }
  }
  return out;
}

} // namespace testutil
