#pragma once

// Nearest-distance decision rule over an AI and a HUMAN collection, plus the
// confusion-matrix metrics and CSV prediction report.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "error.hpp"
#include "fileio.hpp"
#include "vecstore.hpp"

namespace provenance {

struct PredictionRecord {
  std::string source_name;
  std::optional<Label> true_label;
  double human_similarity = 0;
  double ai_similarity = 0;
  Label predicted_label = Label::AI;
  std::string nearest_ai_id;
  std::string nearest_human_id;
  std::optional<bool> verified_on_ledger;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// AI iff ai_similarity >= human_similarity (ties go to AI).
inline Label classify_scores(double human_similarity, double ai_similarity) noexcept {
  return ai_similarity >= human_similarity ? Label::AI : Label::HUMAN;
}

/// AI iff d(q, ai) <= d(q, human), where d is the minimum cosine distance over
/// the namespace. Similarities are reported as 1 - distance.
///
/// Throws NotDeterminable when either namespace is empty.
inline PredictionRecord classify(const EmbeddingVector& q, const Collection& ai, const Collection& human,
                                 const std::string& ns = "train") {
  const Neighbor near_ai = ai.nearest(ns, q);
  const Neighbor near_human = human.nearest(ns, q);
  PredictionRecord r;
  r.ai_similarity = 1.0 - near_ai.distance;
  r.human_similarity = 1.0 - near_human.distance;
  r.predicted_label = near_ai.distance <= near_human.distance ? Label::AI : Label::HUMAN;
  r.nearest_ai_id = near_ai.id;
  r.nearest_human_id = near_human.id;
  return r;
}

// AI ("fake") is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

  void add(Label truth, Label predicted) noexcept {
    if (truth == Label::AI) (predicted == Label::AI ? tp : fn) += 1;
    else (predicted == Label::AI ? fp : tn) += 1;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// nullopt marks a ratio with a zero denominator.
struct MetricsSummary {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> accuracy;
};

inline MetricsSummary summarize(const ConfusionMatrix& m) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(m.tp, m.tp + m.fp), ratio(m.tp, m.tp + m.fn), ratio(m.tp + m.tn, m.total())};
}

struct Evaluation {
  ConfusionMatrix confusion;
  MetricsSummary metrics;
  std::vector<PredictionRecord> predictions;
};

inline Evaluation evaluate(std::span<const EmbeddingVector> test_ai, std::span<const EmbeddingVector> test_human,
                           const Collection& ai, const Collection& human, const std::string& ns = "train") {
  if (test_ai.empty() && test_human.empty()) throw ValidationError("empty test set");
  Evaluation ev;
  auto run = [&](std::span<const EmbeddingVector> set, Label truth) {
    for (const auto& q : set) {
      PredictionRecord p = classify(q, ai, human, ns);
      p.true_label = truth;
      ev.confusion.add(truth, p.predicted_label);
      ev.predictions.push_back(std::move(p));
    }
  };
  run(test_ai, Label::AI);
  run(test_human, Label::HUMAN);
  ev.metrics = summarize(ev.confusion);
  return ev;
}

// ---------------------------------------------------------------------------
// CSV report

inline constexpr const char* kReportHeader = "filename,true_label,human_similarity,ai_similarity,predicted_label,verified";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

} // namespace detail

inline std::string format_report_row(const PredictionRecord& r) {
  std::string row = detail::csv_field(r.source_name);
  row += ',';
  if (r.true_label) row += to_report_string(*r.true_label);
  row += ',' + detail::fixed4(r.human_similarity) + ',' + detail::fixed4(r.ai_similarity) + ',';
  row += to_report_string(r.predicted_label);
  row += ',';
  if (r.verified_on_ledger) row += *r.verified_on_ledger ? "true" : "false";
  return row;
}

inline std::string format_report(std::span<const PredictionRecord> records) {
  std::string out = kReportHeader;
  out += '\n';
  for (const auto& r : records) out += format_report_row(r) + '\n';
  return out;
}

inline void write_report(std::span<const PredictionRecord> records, const std::filesystem::path& path) {
  fileio::write_atomic(path, format_report(records));
}

/// Parses a report back. Nearest-neighbor ids are not part of the format and
/// come back empty.
inline std::vector<PredictionRecord> parse_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw ValidationError("report header mismatch");
  std::vector<PredictionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::csv_split(line);
    if (f.size() != 6) throw ValidationError("report row has " + std::to_string(f.size()) + " fields");
    PredictionRecord r;
    r.source_name = f[0];
    if (!f[1].empty()) r.true_label = parse_report_label(f[1]);
    try {
      r.human_similarity = std::stod(f[2]);
      r.ai_similarity = std::stod(f[3]);
    } catch (const std::exception&) {
      throw ValidationError("report row has a non-numeric similarity");
    }
    r.predicted_label = parse_report_label(f[4]);
    if (f[5] == "true") r.verified_on_ledger = true;
    else if (f[5] == "false") r.verified_on_ledger = false;
    else if (!f[5].empty()) throw ValidationError("bad verified field '" + f[5] + "'");
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace provenance
