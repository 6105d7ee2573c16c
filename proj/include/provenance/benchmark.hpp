#pragma once

// Nearest-match robustness benchmark: each perturbed embedding is matched
// against the originals and counts as correct when its nearest original is
// its own source image.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "embedding.hpp"
#include "error.hpp"
#include "image.hpp"
#include "perturb.hpp"
#include "rng.hpp"
#include "toy_embed.hpp"
#include "vecstore.hpp"

namespace provenance {

// Perturbed variants are identified as "<source id>#<perturbation name>".
inline constexpr char kVariantSeparator = '#';

inline std::string variant_id(const std::string& source_id, const std::string& perturbation) {
  return source_id + kVariantSeparator + perturbation;
}

inline std::string source_id_of(const std::string& modified_id) {
  const auto pos = modified_id.rfind(kVariantSeparator);
  return pos == std::string::npos ? modified_id : modified_id.substr(0, pos);
}

inline std::string perturbation_of(const std::string& modified_id) {
  const auto pos = modified_id.rfind(kVariantSeparator);
  return pos == std::string::npos ? std::string("identity") : modified_id.substr(pos + 1);
}

struct MatchResult {
  std::string modified_id;
  std::string nearest_original_id;
  double distance = 0;
  bool correct = false;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

struct BenchmarkResult {
  std::vector<MatchResult> matches;
  std::size_t correct = 0;
  double accuracy_percent = 0; // 100 * correct / matches.size()
};

inline BenchmarkResult run_robustness_benchmark(const Collection& originals, const std::string& ns,
                                                std::span<const Record> modified) {
  BenchmarkResult out;
  out.matches.reserve(modified.size());
  for (const auto& m : modified) {
    const std::string source = source_id_of(m.meta.id);
    if (!originals.get(ns, source)) throw ValidationError("unknown source id '" + source + "' for '" + m.meta.id + "'");
    const Neighbor n = originals.nearest(ns, m.vector);
    const bool correct = n.id == source;
    out.correct += correct;
    out.matches.push_back({m.meta.id, n.id, n.distance, correct});
  }
  out.accuracy_percent = out.matches.empty() ? 0.0 : 100.0 * static_cast<double>(out.correct) /
                                                         static_cast<double>(out.matches.size());
  return out;
}

struct GridRow {
  std::string perturbation;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy_percent = 0;
  std::vector<MatchResult> matches;
};

using Embedder = std::function<EmbeddingVector(const Image&)>;

struct CorpusImage {
  std::string id;
  Image image;
};

inline std::vector<CorpusImage> synthetic_corpus(std::size_t n, std::uint64_t seed, int size = 512, int channels = 1) {
  std::vector<CorpusImage> out;
  out.reserve(n);
  char name[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(name, sizeof name, "img%04zu", i);
    out.push_back({name, synthetic_image(derive_seed(seed, i), size, size, channels)});
  }
  return out;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
}

} // namespace detail

// Seed for image i under perturbation row r, split from the master seed.
inline std::uint64_t perturbation_seed(std::uint64_t master, std::size_t row, std::size_t image) {
  return derive_seed(derive_seed(master, row), image);
}

/// Embeds the corpus, then for every spec perturbs each image, embeds the
/// variant and matches it against the originals. Output rows follow `specs`.
/// Results do not depend on `threads`.
inline std::vector<GridRow> run_perturbation_grid(const std::vector<CorpusImage>& corpus,
                                                  const std::vector<PerturbationSpec>& specs,
                                                  std::uint64_t master_seed, const Embedder& embed = toy_embed,
                                                  unsigned threads = std::thread::hardware_concurrency()) {
  if (corpus.empty()) throw ValidationError("benchmark corpus is empty");
  std::vector<Record> originals(corpus.size());
  detail::parallel_for(corpus.size(), threads, [&](std::size_t i) {
    originals[i] = {{corpus[i].id, corpus[i].id, Label::AI, "original"}, embed(corpus[i].image)};
  });
  VectorStore store = VectorStore::in_memory();
  Collection& coll = store.create_collection("originals", Label::AI, originals.front().vector.dim());
  coll.upsert_batch("original", originals);

  std::vector<GridRow> rows;
  for (std::size_t r = 0; r < specs.size(); ++r) {
    const std::string name = specs[r].name();
    std::vector<Record> modified(corpus.size());
    detail::parallel_for(corpus.size(), threads, [&](std::size_t i) {
      const auto spec = specs[r].with_seed(perturbation_seed(master_seed, r, i));
      modified[i] = {{variant_id(corpus[i].id, name), corpus[i].id, Label::AI, "modified"},
                     embed(apply(corpus[i].image, spec))};
    });
    auto res = run_robustness_benchmark(coll, "original", modified);
    rows.push_back({name, res.matches.size(), res.correct, res.accuracy_percent, std::move(res.matches)});
  }
  return rows;
}

/// Grid from precomputed embeddings: modified ids carry their perturbation
/// name after '#'. Rows appear in first-seen order.
inline std::vector<GridRow> grid_from_embeddings(std::span<const Record> originals, std::span<const Record> modified) {
  if (originals.empty()) throw ValidationError("originals are empty");
  VectorStore store = VectorStore::in_memory();
  Collection& coll = store.create_collection("originals", Label::AI, originals.front().vector.dim());
  coll.upsert_batch("original", originals);

  std::vector<std::string> order;
  std::map<std::string, std::vector<Record>> groups;
  for (const auto& m : modified) {
    const std::string p = perturbation_of(m.meta.id);
    if (!groups.count(p)) order.push_back(p);
    groups[p].push_back(m);
  }
  std::vector<GridRow> rows;
  for (const auto& p : order) {
    auto res = run_robustness_benchmark(coll, "original", groups[p]);
    rows.push_back({p, res.matches.size(), res.correct, res.accuracy_percent, std::move(res.matches)});
  }
  return rows;
}

inline std::string render_grid(std::span<const GridRow> rows) {
  std::string out = "perturbation,total,correct,accuracy_percent\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.2f", r.accuracy_percent);
    out += r.perturbation + "," + std::to_string(r.total) + "," + std::to_string(r.correct) + "," + buf + "\n";
  }
  return out;
}

inline std::string render_grid_detail(std::span<const GridRow> rows) {
  std::string out = "modified_id,nearest_original_id,distance,correct\n";
  char buf[64];
  for (const auto& r : rows)
    for (const auto& m : r.matches) {
      std::snprintf(buf, sizeof buf, "%.8f", m.distance);
      out += m.modified_id + "," + m.nearest_original_id + "," + buf + "," + (m.correct ? "true" : "false") + "\n";
    }
  return out;
}

} // namespace provenance
