#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace provenance {

enum class Label { AI, HUMAN };

inline std::string_view to_string(Label l) { return l == Label::AI ? "ai" : "human"; }

inline Label parse_label(std::string_view s) {
  if (s == "ai") return Label::AI;
  if (s == "human") return Label::HUMAN;
  throw ValidationError("unknown label '" + std::string(s) + "'");
}

// Report spelling used in CSV output: fake <-> AI, real <-> HUMAN.
inline std::string_view to_report_string(Label l) { return l == Label::AI ? "fake" : "real"; }

inline Label parse_report_label(std::string_view s) {
  if (s == "fake") return Label::AI;
  if (s == "real") return Label::HUMAN;
  throw ValidationError("unknown report label '" + std::string(s) + "'");
}

inline Label opposite(Label l) { return l == Label::AI ? Label::HUMAN : Label::AI; }

/// Fixed-dimension vector of finite 32-bit components.
///
/// Construction rejects an empty component list and any NaN/Inf. The
/// all-zero vector is representable (it may sit in a file) but is refused by
/// search and hashing; see require_nonzero().
class EmbeddingVector {
public:
  EmbeddingVector() = default;

  explicit EmbeddingVector(std::vector<float> components) : data_(std::move(components)) {
    if (data_.empty()) throw ValidationError("embedding must have dim >= 1");
    for (float c : data_)
      if (!std::isfinite(c)) throw ValidationError("embedding component is not finite");
  }

  EmbeddingVector(std::initializer_list<float> components)
      : EmbeddingVector(std::vector<float>(components)) {}

  std::size_t dim() const noexcept { return data_.size(); }
  std::span<const float> components() const noexcept { return data_; }
  float operator[](std::size_t i) const { return data_[i]; }

  bool is_zero() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float c) { return c == 0.0f; });
  }

  const EmbeddingVector& require_nonzero() const {
    if (is_zero()) throw ValidationError("zero vector rejected");
    return *this;
  }

  EmbeddingVector scaled(float alpha) const {
    std::vector<float> out(data_);
    for (float& c : out) c *= alpha;
    return EmbeddingVector(std::move(out));
  }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
  std::vector<float> data_;
};

struct RecordMeta {
  std::string id;
  std::string source_name;
  Label label = Label::AI;
  std::string ns = "train";

  friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct Record {
  RecordMeta meta;
  EmbeddingVector vector;

  friend bool operator==(const Record&, const Record&) = default;
};

} // namespace provenance
