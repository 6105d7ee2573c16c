#pragma once

// Embedding interchange file:
//
//   "EMB1" | version u16 LE (=1) | dim u32 LE | count u64 LE | count*dim f32 LE
//
// plus a sidecar at <path>.meta holding one JSON object per line
// ({"id","source_name","label","namespace"}) in payload order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bytes.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "fileio.hpp"

namespace provenance {

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 4 + 2 + 4 + 8;

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".meta";
  return p;
}

inline nlohmann::json meta_to_json(const RecordMeta& m) {
  return {{"id", m.id}, {"source_name", m.source_name}, {"label", to_string(m.label)}, {"namespace", m.ns}};
}

inline RecordMeta meta_from_json(const nlohmann::json& j) {
  try {
    RecordMeta m;
    m.id = j.at("id").get<std::string>();
    m.source_name = j.at("source_name").get<std::string>();
    m.label = parse_label(j.at("label").get<std::string>());
    m.ns = j.at("namespace").get<std::string>();
    if (m.id.empty()) throw ValidationError("record id must be non-empty");
    if (m.ns.empty()) throw ValidationError("record namespace must be non-empty");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed metadata record: ") + e.what());
  }
}

// Payload bytes only (header excluded); also the canonical hashing input
// for a single vector once prefixed with its dim.
inline void append_components(std::string& out, std::span<const float> v) {
  for (float c : v) bytes::put_f32(out, c);
}

/// Serializes records to the binary layout above. `dim` is only consulted
/// when `records` is empty.
inline std::string encode_embedding_file(std::span<const Record> records, std::uint32_t dim = 0) {
  if (!records.empty()) dim = static_cast<std::uint32_t>(records.front().vector.dim());
  std::unordered_set<std::string> ids;
  for (const auto& r : records) {
    if (r.vector.dim() != dim) throw ValidationError("mixed dimensions in record set");
    if (!ids.insert(r.meta.id).second) throw ValidationError("duplicate id '" + r.meta.id + "'");
  }
  std::string out(kEmbeddingMagic, 4);
  bytes::put_le<std::uint16_t>(out, kEmbeddingVersion);
  bytes::put_le<std::uint32_t>(out, dim);
  bytes::put_le<std::uint64_t>(out, records.size());
  out.reserve(kEmbeddingHeaderSize + records.size() * dim * 4);
  for (const auto& r : records) append_components(out, r.vector.components());
  return out;
}

inline void write_embedding_file(std::span<const Record> records, const std::filesystem::path& path,
                                 std::uint32_t dim = 0) {
  const std::string payload = encode_embedding_file(records, dim);
  std::string sidecar;
  for (const auto& r : records) {
    sidecar += meta_to_json(r.meta).dump();
    sidecar += '\n';
  }
  fileio::write_atomic(path, payload);
  fileio::write_atomic(sidecar_path(path), sidecar);
}

struct EmbeddingFileHeader {
  std::uint16_t version = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

inline EmbeddingFileHeader decode_embedding_header(std::string_view data) {
  if (data.size() < 4 || data.substr(0, 4) != std::string_view(kEmbeddingMagic, 4))
    throw ValidationError("bad magic: not an embedding file");
  if (data.size() < kEmbeddingHeaderSize) throw ValidationError("truncated header");
  EmbeddingFileHeader h;
  h.version = bytes::get_le<std::uint16_t>(data, 4);
  h.dim = bytes::get_le<std::uint32_t>(data, 6);
  h.count = bytes::get_le<std::uint64_t>(data, 10);
  if (h.version != kEmbeddingVersion)
    throw ValidationError("unsupported embedding file version " + std::to_string(h.version));
  if (h.count > 0 && h.dim == 0) throw ValidationError("dim must be >= 1");
  return h;
}

/// Decodes the payload into vectors (no metadata). Rejects any mismatch
/// between the declared shape and the byte length.
inline std::vector<EmbeddingVector> decode_embedding_payload(std::string_view data, EmbeddingFileHeader* header_out = nullptr) {
  const EmbeddingFileHeader h = decode_embedding_header(data);
  const std::uint64_t payload = data.size() - kEmbeddingHeaderSize;
  if (h.dim != 0 && h.count > payload / (4ull * h.dim))
    throw ValidationError("truncated payload: header declares more vectors than present");
  const std::uint64_t expected = h.count * h.dim * 4;
  if (payload < expected)
    throw ValidationError("truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(payload));
  if (payload > expected) throw ValidationError("trailing bytes after payload");

  std::vector<EmbeddingVector> out;
  out.reserve(h.count);
  std::size_t pos = kEmbeddingHeaderSize;
  for (std::uint64_t i = 0; i < h.count; ++i) {
    std::vector<float> comps(h.dim);
    for (auto& c : comps) {
      c = bytes::get_f32(data, pos);
      pos += 4;
    }
    out.emplace_back(std::move(comps)); // throws on non-finite
  }
  if (header_out) *header_out = h;
  return out;
}

inline std::vector<RecordMeta> parse_sidecar(std::string_view text) {
  std::vector<RecordMeta> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed sidecar line: ") + e.what());
    }
    out.push_back(meta_from_json(j));
  }
  return out;
}

inline std::vector<Record> read_embedding_file(const std::filesystem::path& path, EmbeddingFileHeader* header_out = nullptr) {
  const std::string data = fileio::read_all(path);
  EmbeddingFileHeader h;
  auto vectors = decode_embedding_payload(data, &h);
  auto metas = parse_sidecar(fileio::read_all(sidecar_path(path)));
  if (metas.size() != vectors.size())
    throw ValidationError("sidecar count mismatch: " + std::to_string(metas.size()) + " metadata lines for " +
                          std::to_string(vectors.size()) + " vectors");
  std::vector<Record> out;
  out.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) out.push_back({std::move(metas[i]), std::move(vectors[i])});
  if (header_out) *header_out = h;
  return out;
}

} // namespace provenance
