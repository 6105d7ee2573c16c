#pragma once

// Engine tying the store, the two ledgers and the decision rule together in
// one of three framework modes:
//
//   hash_only    exact digest lookup in the ledgers
//   vector_only  nearest-distance rule over the collections
//   hybrid       vector verdict plus a ledger verifiability flag for the
//                query's own digest

#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "classifier.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "fileio.hpp"
#include "gas.hpp"
#include "image.hpp"
#include "interchange.hpp"
#include "ledger.hpp"
#include "toy_embed.hpp"
#include "vecstore.hpp"

namespace provenance {

enum class FrameworkMode { HashOnly, VectorOnly, Hybrid };

inline std::string_view to_string(FrameworkMode m) {
  switch (m) {
  case FrameworkMode::HashOnly: return "hash_only";
  case FrameworkMode::VectorOnly: return "vector_only";
  default: return "hybrid";
  }
}

inline FrameworkMode parse_mode(std::string_view s) {
  if (s == "hash_only") return FrameworkMode::HashOnly;
  if (s == "vector_only") return FrameworkMode::VectorOnly;
  if (s == "hybrid") return FrameworkMode::Hybrid;
  throw ValidationError("unknown framework mode '" + std::string(s) + "'");
}

struct ClassifyResponse {
  std::string prediction; // "ai" | "human" | "undetermined"
  std::optional<double> human_similarity;
  std::optional<double> ai_similarity;
  std::optional<std::string> nearest_ai_id;
  std::optional<std::string> nearest_human_id;
  std::optional<bool> verified;
  FrameworkMode mode = FrameworkMode::Hybrid;
  // Set when ledger evidence contradicts the verdict or both ledgers match.
  std::optional<std::string> warning;

  friend bool operator==(const ClassifyResponse&, const ClassifyResponse&) = default;
};

inline nlohmann::json to_json(const ClassifyResponse& r) {
  nlohmann::json j;
  j["prediction"] = r.prediction;
  if (r.human_similarity) j["human_similarity"] = *r.human_similarity;
  if (r.ai_similarity) j["ai_similarity"] = *r.ai_similarity;
  if (r.nearest_ai_id) j["nearest_ai_id"] = *r.nearest_ai_id;
  if (r.nearest_human_id) j["nearest_human_id"] = *r.nearest_human_id;
  if (r.verified) j["verified"] = *r.verified;
  j["mode"] = to_string(r.mode);
  if (r.warning) j["warning"] = *r.warning;
  return j;
}

inline ClassifyResponse response_from_json(const nlohmann::json& j) {
  try {
    ClassifyResponse r;
    r.prediction = j.at("prediction").get<std::string>();
    if (r.prediction != "ai" && r.prediction != "human" && r.prediction != "undetermined")
      throw ValidationError("bad prediction '" + r.prediction + "'");
    if (j.contains("human_similarity")) r.human_similarity = j["human_similarity"].get<double>();
    if (j.contains("ai_similarity")) r.ai_similarity = j["ai_similarity"].get<double>();
    if (j.contains("nearest_ai_id")) r.nearest_ai_id = j["nearest_ai_id"].get<std::string>();
    if (j.contains("nearest_human_id")) r.nearest_human_id = j["nearest_human_id"].get<std::string>();
    if (j.contains("verified")) r.verified = j["verified"].get<bool>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("warning")) r.warning = j["warning"].get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed classify response: ") + e.what());
  }
}

/// Schema rule: similarities present iff mode != hash_only; verified present
/// iff mode != vector_only.
inline bool schema_valid(const ClassifyResponse& r) {
  const bool has_sims = r.human_similarity && r.ai_similarity && r.nearest_ai_id && r.nearest_human_id;
  const bool no_sims = !r.human_similarity && !r.ai_similarity && !r.nearest_ai_id && !r.nearest_human_id;
  const bool sims_ok = r.mode == FrameworkMode::HashOnly ? no_sims : has_sims;
  const bool verified_ok = (r.mode == FrameworkMode::VectorOnly) == !r.verified.has_value();
  return sims_ok && verified_ok;
}

struct EngineConfig {
  std::filesystem::path root = "provenance-data";
  FrameworkMode mode = FrameworkMode::Hybrid;
  std::string ns = "train";
  std::string ai_collection = "ai";
  std::string human_collection = "human";
  std::uint64_t seed = 0;
  GasModel gas;
};

struct IngestResult {
  std::size_t count = 0;
  std::size_t replaced = 0;        // ids already present in the namespace
  std::size_t ledger_appended = 0; // new digests written to the ledger
  Gas gas = 0;                     // simulated gas for the ledger writes
};

class Engine {
public:
  /// Opens the store and both ledgers under config.root. A ledger that fails
  /// verification throws IntegrityError.
  explicit Engine(EngineConfig config)
      : config_(std::move(config)), store_(config_.root / "store"),
        ai_ledger_(config_.root / "ledger" / "ai.lgr", "ai", config_.gas, derive_seed(config_.seed, 1)),
        human_ledger_(config_.root / "ledger" / "human.lgr", "human", config_.gas, derive_seed(config_.seed, 2)) {}

  const EngineConfig& config() const noexcept { return config_; }
  FrameworkMode mode() const noexcept { return config_.mode; }
  VectorStore& store() noexcept { return store_; }

  Ledger& ledger(Label l) noexcept { return l == Label::AI ? ai_ledger_ : human_ledger_; }
  const Ledger& ledger(Label l) const noexcept { return l == Label::AI ? ai_ledger_ : human_ledger_; }

  /// Upserts every record into `collection`/`ns`, creating the collection if
  /// needed (label from `label`, else inferred from the configured names).
  /// Outside vector_only mode each digest is also stored in the ledger
  /// matching the collection label.
  IngestResult ingest_records(std::span<const Record> records, const std::string& collection, const std::string& ns,
                              std::optional<Label> label = std::nullopt) {
    std::lock_guard gate(writer_);
    IngestResult res;
    res.count = records.size();
    if (records.empty()) return res;
    const std::size_t dim = records.front().vector.dim();
    for (const auto& r : records) {
      if (r.vector.dim() != dim) throw ValidationError("mixed dimensions in ingest batch");
      r.vector.require_nonzero();
    }
    Collection& c = open_or_create(collection, label, dim);
    if (c.dim() != dim)
      throw ValidationError("dimension mismatch: collection '" + collection + "' has dim " + std::to_string(c.dim()) +
                            ", file has " + std::to_string(dim));
    for (const auto& r : records) res.replaced += c.get(ns, r.meta.id).has_value();
    c.upsert_batch(ns, records);
    if (config_.mode != FrameworkMode::VectorOnly) {
      Ledger& l = ledger(c.label());
      for (const auto& r : records) {
        const StoreResult s = l.store_hash(embed_hash(r.vector));
        res.ledger_appended += s.stored;
        res.gas += s.gas;
      }
    }
    return res;
  }

  IngestResult ingest(const std::filesystem::path& file, const std::string& collection, const std::string& ns,
                      std::optional<Label> label = std::nullopt) {
    const auto records = read_embedding_file(file);
    return ingest_records(records, collection, ns, label);
  }

  ClassifyResponse classify(const EmbeddingVector& q) const {
    q.require_nonzero();
    ClassifyResponse r;
    r.mode = config_.mode;
    if (config_.mode == FrameworkMode::HashOnly) {
      const auto hc = classify_by_hash(embed_hash(q), ai_ledger_, human_ledger_);
      r.prediction = std::string(to_string(hc.verdict));
      r.verified = hc.verdict != HashVerdict::UNDETERMINED;
      if (hc.in_both) r.warning = "digest present in both ledgers; resolved to ai";
      return r;
    }

    const Collection& ai = require_collection(config_.ai_collection);
    const Collection& human = require_collection(config_.human_collection);
    const PredictionRecord p = provenance::classify(q, ai, human, config_.ns);
    r.prediction = std::string(to_string(p.predicted_label));
    r.human_similarity = p.human_similarity;
    r.ai_similarity = p.ai_similarity;
    r.nearest_ai_id = p.nearest_ai_id;
    r.nearest_human_id = p.nearest_human_id;
    if (config_.mode == FrameworkMode::Hybrid) {
      const EmbedHash h = embed_hash(q);
      r.verified = ledger(p.predicted_label).hash_exists(h);
      if (ledger(opposite(p.predicted_label)).hash_exists(h))
        r.warning = "query digest found in the " + std::string(to_string(opposite(p.predicted_label))) +
                    " ledger, contradicting the vector verdict";
    }
    return r;
  }

  ClassifyResponse classify_image(const Image& img) const { return classify(toy_embed(img)); }

  nlohmann::json health() const {
    nlohmann::json j;
    j["status"] = "ok";
    j["mode"] = to_string(config_.mode);
    j["collections"] = nlohmann::json::object();
    for (const auto* name : {&config_.ai_collection, &config_.human_collection}) {
      if (const Collection* c = find_collection(*name))
        j["collections"][*name] = {{"generation", c->generation()}, {"count", c->size(config_.ns)}};
      else
        j["collections"][*name] = nullptr;
    }
    for (const Ledger* l : {&ai_ledger_, &human_ledger_}) {
      const ChainReport rep = l->verify();
      j["ledgers"][l->name()] = {{"chain", rep.ok ? "valid" : "invalid"}, {"entries", rep.entries}};
      if (!rep.ok) j["status"] = "degraded";
    }
    return j;
  }

private:
  Collection& open_or_create(const std::string& name, std::optional<Label> label, std::size_t dim) {
    if (store_.contains(name)) return store_.open_collection(name);
    if (!label) {
      if (name == config_.ai_collection) label = Label::AI;
      else if (name == config_.human_collection) label = Label::HUMAN;
      else throw ValidationError("cannot infer label for new collection '" + name + "'; pass one explicitly");
    }
    return store_.create_collection(name, *label, dim);
  }

  const Collection* find_collection(const std::string& name) const {
    if (!store_.contains(name)) return nullptr;
    return &store_.open_collection(name);
  }

  const Collection& require_collection(const std::string& name) const {
    const Collection* c = find_collection(name);
    if (!c) throw NotDeterminable("store not initialized: collection '" + name + "' does not exist");
    return *c;
  }

  EngineConfig config_;
  mutable VectorStore store_;
  Ledger ai_ledger_;
  Ledger human_ledger_;
  std::mutex writer_;
};

inline PredictionRecord to_prediction_record(const ClassifyResponse& r, std::string source_name,
                                             std::optional<Label> truth) {
  if (!r.human_similarity || !r.ai_similarity) throw ValidationError("response carries no similarities");
  PredictionRecord p;
  p.source_name = std::move(source_name);
  p.true_label = truth;
  p.human_similarity = *r.human_similarity;
  p.ai_similarity = *r.ai_similarity;
  p.predicted_label = parse_label(r.prediction);
  p.nearest_ai_id = r.nearest_ai_id.value_or("");
  p.nearest_human_id = r.nearest_human_id.value_or("");
  p.verified_on_ledger = r.verified;
  return p;
}

/// Reads a JSON config file; keys mirror EngineConfig (root, mode, namespace,
/// ai_collection, human_collection, seed).
inline EngineConfig load_config(const std::filesystem::path& path, EngineConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(fileio::read_all(path));
    if (j.contains("root")) base.root = j["root"].get<std::string>();
    if (j.contains("mode")) base.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("namespace")) base.ns = j["namespace"].get<std::string>();
    if (j.contains("ai_collection")) base.ai_collection = j["ai_collection"].get<std::string>();
    if (j.contains("human_collection")) base.human_collection = j["human_collection"].get<std::string>();
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed config " + path.string() + ": " + e.what());
  }
  return base;
}

} // namespace provenance
