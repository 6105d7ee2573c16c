#pragma once

// Exact nearest-neighbor store over labeled collections.
//
// On-disk layout under the store root:
//   <root>/<collection>/manifest        JSON: name, label, dim, namespaces, generation
//   <root>/<collection>/<namespace>.emb interchange file (+ .emb.meta sidecar)
//
// Concurrency: each Collection is guarded by a reader-writer lock. Queries
// hold it shared; an upsert batch holds it exclusively for both the
// in-memory update and the write-back, so readers never see half a batch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "embedding.hpp"
#include "error.hpp"
#include "fileio.hpp"
#include "interchange.hpp"

namespace provenance {

struct Neighbor {
  std::string id;
  double distance = 0;
  std::string source_name;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

namespace detail {

inline double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

inline double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

inline double distance_from(double dot, double norm_u, double norm_v) {
  return std::clamp(1.0 - dot / (norm_u * norm_v), 0.0, 2.0);
}

// Collection and namespace names become path components.
inline void check_name(const std::string& kind, const std::string& name) {
  if (name.empty()) throw ValidationError(kind + " name must be non-empty");
  if (name.front() == '.') throw ValidationError(kind + " name must not start with '.'");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      throw ValidationError(kind + " name '" + name + "' contains characters outside [A-Za-z0-9_.-]");
}

} // namespace detail

/// Cosine distance 1 - u.v/(|u||v|), accumulated in double and clamped to [0, 2].
inline double cosine_distance(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw ValidationError("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  const double nu = detail::norm(u), nv = detail::norm(v);
  if (nu == 0 || nv == 0) throw ValidationError("cosine distance undefined for a zero-norm vector");
  return detail::distance_from(detail::dot(u, v), nu, nv);
}

inline double cosine_distance(const EmbeddingVector& u, const EmbeddingVector& v) {
  return cosine_distance(u.components(), v.components());
}

class VectorStore;

class Collection {
public:
  Collection(const Collection&) = delete;
  Collection& operator=(const Collection&) = delete;

  const std::string& name() const noexcept { return name_; }
  Label label() const noexcept { return label_; }
  std::size_t dim() const noexcept { return dim_; }

  std::uint64_t generation() const {
    std::shared_lock lock(mu_);
    return generation_;
  }

  std::vector<std::string> namespaces() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [ns, _] : parts_) out.push_back(ns);
    return out;
  }

  std::size_t size(const std::string& ns) const {
    std::shared_lock lock(mu_);
    auto it = parts_.find(ns);
    return it == parts_.end() ? 0 : it->second.metas.size();
  }

  std::optional<Record> get(const std::string& ns, const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = parts_.find(ns);
    if (it == parts_.end()) return std::nullopt;
    auto jt = it->second.index.find(id);
    if (jt == it->second.index.end()) return std::nullopt;
    return it->second.record(jt->second, dim_);
  }

  std::vector<Record> records(const std::string& ns) const {
    std::shared_lock lock(mu_);
    std::vector<Record> out;
    auto it = parts_.find(ns);
    if (it == parts_.end()) return out;
    for (std::size_t i = 0; i < it->second.metas.size(); ++i) out.push_back(it->second.record(i, dim_));
    return out;
  }

  /// Insert or replace (by id) a single record in `ns`.
  void upsert(const std::string& ns, RecordMeta meta, const EmbeddingVector& v) {
    Record r{std::move(meta), v};
    upsert_batch(ns, std::span<const Record>(&r, 1));
  }

  /// Applies every record atomically with respect to readers, then persists
  /// the namespace once. The stored meta takes its namespace from `ns` and its
  /// label from the collection.
  void upsert_batch(const std::string& ns, std::span<const Record> batch) {
    detail::check_name("namespace", ns);
    for (const auto& r : batch) {
      if (r.vector.dim() != dim_)
        throw ValidationError("dimension mismatch: collection '" + name_ + "' has dim " + std::to_string(dim_) +
                              ", got " + std::to_string(r.vector.dim()));
      r.vector.require_nonzero();
      if (r.meta.id.empty()) throw ValidationError("record id must be non-empty");
    }
    if (batch.empty()) return;

    std::unique_lock lock(mu_);
    Partition& part = parts_[ns];
    for (const auto& r : batch) {
      RecordMeta meta = r.meta;
      meta.ns = ns;
      meta.label = label_;
      part.put(std::move(meta), r.vector.components());
    }
    ++generation_;
    persist_locked(ns);
  }

  /// The k records of `ns` nearest to q, ascending by (distance, id). An
  /// empty or unknown namespace yields an empty result.
  std::vector<Neighbor> query_top_k(const std::string& ns, const EmbeddingVector& q, std::size_t k) const {
    check_query(q);
    if (k == 0) throw ValidationError("k must be >= 1");
    const double qn = detail::norm(q.components());

    std::shared_lock lock(mu_);
    auto it = parts_.find(ns);
    if (it == parts_.end() || it->second.metas.empty()) return {};
    const Partition& part = it->second;
    const std::size_t n = part.metas.size();

    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i)
      dist[i] = detail::distance_from(detail::dot(q.components(), part.row(i, dim_)), qn, part.norms[i]);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (dist[a] != dist[b]) return dist[a] < dist[b];
                        return part.metas[a].id < part.metas[b].id;
                      });
    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      const auto& m = part.metas[order[i]];
      out.push_back({m.id, dist[order[i]], m.source_name});
    }
    return out;
  }

  /// min over the namespace of cosine_distance(q, s), with its record.
  Neighbor nearest(const std::string& ns, const EmbeddingVector& q) const {
    auto top = query_top_k(ns, q, 1);
    if (top.empty()) throw NotDeterminable("namespace '" + ns + "' of collection '" + name_ + "' is empty");
    return std::move(top.front());
  }

private:
  friend class VectorStore;

  struct Partition {
    std::vector<RecordMeta> metas;
    std::vector<float> data; // row-major, metas.size() * dim
    std::vector<double> norms;
    std::unordered_map<std::string, std::size_t> index;

    std::span<const float> row(std::size_t i, std::size_t dim) const {
      return std::span<const float>(data).subspan(i * dim, dim);
    }

    Record record(std::size_t i, std::size_t dim) const {
      auto r = row(i, dim);
      return {metas[i], EmbeddingVector(std::vector<float>(r.begin(), r.end()))};
    }

    void put(RecordMeta meta, std::span<const float> v) {
      const std::size_t dim = v.size();
      auto [it, inserted] = index.try_emplace(meta.id, metas.size());
      if (inserted) {
        metas.push_back(std::move(meta));
        data.insert(data.end(), v.begin(), v.end());
        norms.push_back(detail::norm(v));
      } else {
        const std::size_t i = it->second;
        metas[i] = std::move(meta);
        std::copy(v.begin(), v.end(), data.begin() + static_cast<std::ptrdiff_t>(i * dim));
        norms[i] = detail::norm(v);
      }
    }
  };

  Collection(std::filesystem::path dir, std::string name, Label label, std::size_t dim)
      : dir_(std::move(dir)), name_(std::move(name)), label_(label), dim_(dim) {}

  void check_query(const EmbeddingVector& q) const {
    if (q.dim() != dim_)
      throw ValidationError("dimension mismatch: collection '" + name_ + "' has dim " + std::to_string(dim_) +
                            ", query has " + std::to_string(q.dim()));
    q.require_nonzero();
  }

  nlohmann::json manifest_locked() const {
    nlohmann::json ns = nlohmann::json::array();
    for (const auto& [k, _] : parts_) ns.push_back(k);
    return {{"name", name_}, {"label", to_string(label_)}, {"dim", dim_}, {"namespaces", ns}, {"generation", generation_}};
  }

  void persist_manifest_locked() const {
    if (dir_.empty()) return;
    fileio::write_atomic(dir_ / "manifest", manifest_locked().dump(2) + "\n");
  }

  void persist_locked(const std::string& ns) const {
    if (dir_.empty()) return;
    const Partition& part = parts_.at(ns);
    std::vector<Record> records;
    records.reserve(part.metas.size());
    for (std::size_t i = 0; i < part.metas.size(); ++i) records.push_back(part.record(i, dim_));
    write_embedding_file(records, dir_ / (ns + ".emb"), static_cast<std::uint32_t>(dim_));
    persist_manifest_locked();
  }

  void load() {
    const nlohmann::json m = [&] {
      try {
        return nlohmann::json::parse(fileio::read_all(dir_ / "manifest"));
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed manifest for '" + name_ + "': " + e.what());
      }
    }();
    try {
      generation_ = m.at("generation").get<std::uint64_t>();
      for (const auto& ns : m.at("namespaces")) {
        const std::string name = ns.get<std::string>();
        EmbeddingFileHeader h;
        auto records = read_embedding_file(dir_ / (name + ".emb"), &h);
        if (h.count > 0 && h.dim != dim_) throw ValidationError("namespace file dim does not match manifest");
        Partition& part = parts_[name];
        for (auto& r : records) part.put(std::move(r.meta), r.vector.components());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed manifest for '" + name_ + "': " + e.what());
    }
  }

  std::filesystem::path dir_;
  std::string name_;
  Label label_;
  std::size_t dim_;
  std::uint64_t generation_ = 0;
  std::map<std::string, Partition> parts_;
  mutable std::shared_mutex mu_;
};

struct CollectionInfo {
  std::string name;
  Label label;
  std::size_t dim;
  std::vector<std::string> namespaces;
  std::uint64_t generation;
};

/// Directory of persisted collections. Collections are loaded on first open
/// and cached; references stay valid for the store's lifetime.
///
/// A store built with in_memory() keeps everything in RAM and never touches
/// the filesystem.
class VectorStore {
public:
  static VectorStore in_memory() { return VectorStore(); }

  explicit VectorStore(std::filesystem::path root) : root_(std::move(root)) {
    if (root_.empty()) throw ValidationError("store root must be non-empty");
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create store root " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  bool persistent() const noexcept { return !root_.empty(); }

  bool contains(const std::string& name) const {
    if (!persistent()) return false;
    return std::filesystem::exists(root_ / name / "manifest");
  }

  Collection& create_collection(const std::string& name, Label label, std::size_t dim) {
    detail::check_name("collection", name);
    if (dim < 1) throw ValidationError("dim must be >= 1");
    std::lock_guard lock(mu_);
    if (open_.count(name) || contains(name)) throw ValidationError("collection '" + name + "' already exists");
    const auto dir = persistent() ? root_ / name : std::filesystem::path{};
    if (persistent()) std::filesystem::create_directories(dir);
    auto c = std::unique_ptr<Collection>(new Collection(dir, name, label, dim));
    {
      std::unique_lock clock(c->mu_);
      c->persist_manifest_locked();
    }
    return *open_.emplace(name, std::move(c)).first->second;
  }

  Collection& open_collection(const std::string& name) {
    detail::check_name("collection", name);
    std::lock_guard lock(mu_);
    if (auto it = open_.find(name); it != open_.end()) return *it->second;
    if (!contains(name)) throw ValidationError("no collection named '" + name + "'");
    const auto dir = root_ / name;
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(fileio::read_all(dir / "manifest"));
      auto c = std::unique_ptr<Collection>(
          new Collection(dir, m.at("name").get<std::string>(), parse_label(m.at("label").get<std::string>()),
                         m.at("dim").get<std::size_t>()));
      c->load();
      return *open_.emplace(name, std::move(c)).first->second;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed manifest for '" + name + "': " + e.what());
    }
  }

  std::vector<CollectionInfo> list() {
    std::vector<std::string> names;
    if (!persistent()) {
      std::lock_guard lock(mu_);
      for (const auto& [n, _] : open_) names.push_back(n);
    } else {
      for (const auto& entry : std::filesystem::directory_iterator(root_))
      if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest"))
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    std::vector<CollectionInfo> out;
    for (const auto& n : names) {
      Collection& c = open_collection(n);
      out.push_back({c.name(), c.label(), c.dim(), c.namespaces(), c.generation()});
    }
    return out;
  }

  VectorStore(VectorStore&& other) noexcept : root_(std::move(other.root_)), open_(std::move(other.open_)) {}

private:
  VectorStore() = default;

  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<Collection>> open_;
};

} // namespace provenance
