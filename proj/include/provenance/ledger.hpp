#pragma once

// Append-only chained-digest ledger emulating a storeHash/hashExists
// contract.
//
// File layout:
//   header:  "LGR1" | version u16 LE (=1) | name_len u16 LE | name bytes
//   entries: index u64 LE | digest[32] | prev_chain[32] | chain[32] | timestamp u64 LE
//
// chain = SHA-256(prev_chain || digest || index u64 LE || timestamp u64 LE),
// with an all-zero prev_chain for entry 0.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bytes.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "fileio.hpp"
#include "gas.hpp"
#include "interchange.hpp"
#include "rng.hpp"
#include "sha256.hpp"

namespace provenance {

struct EmbedHash {
  Digest256 digest{};

  std::string hex() const { return to_hex(digest); }
  friend auto operator<=>(const EmbedHash&, const EmbedHash&) = default;
};

/// SHA-256 over dim (u32 LE) followed by every component as f32 LE.
inline EmbedHash embed_hash(const EmbeddingVector& v) {
  v.require_nonzero();
  std::string buf;
  buf.reserve(4 + v.dim() * 4);
  bytes::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(v.dim()));
  append_components(buf, v.components());
  return {sha256(buf)};
}

struct LedgerEntry {
  std::uint64_t index = 0;
  EmbedHash digest;
  Digest256 prev_chain{};
  Digest256 chain{};
  std::uint64_t timestamp = 0;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

inline constexpr char kLedgerMagic[4] = {'L', 'G', 'R', '1'};
inline constexpr std::uint16_t kLedgerVersion = 1;
inline constexpr std::size_t kLedgerEntrySize = 8 + 32 + 32 + 32 + 8;

inline Digest256 chain_value(const Digest256& prev, const EmbedHash& digest, std::uint64_t index,
                             std::uint64_t timestamp) {
  std::string buf(prev.begin(), prev.end());
  buf.append(digest.digest.begin(), digest.digest.end());
  bytes::put_le(buf, index);
  bytes::put_le(buf, timestamp);
  return sha256(buf);
}

namespace detail {

inline std::string encode_ledger_header(std::string_view name) {
  std::string out(kLedgerMagic, 4);
  bytes::put_le<std::uint16_t>(out, kLedgerVersion);
  bytes::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out.append(name);
  return out;
}

inline std::string encode_entry(const LedgerEntry& e) {
  std::string out;
  out.reserve(kLedgerEntrySize);
  bytes::put_le(out, e.index);
  out.append(e.digest.digest.begin(), e.digest.digest.end());
  out.append(e.prev_chain.begin(), e.prev_chain.end());
  out.append(e.chain.begin(), e.chain.end());
  bytes::put_le(out, e.timestamp);
  return out;
}

inline LedgerEntry decode_entry(std::string_view data, std::size_t pos) {
  LedgerEntry e;
  e.index = bytes::get_le<std::uint64_t>(data, pos);
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos + 8), 32, e.digest.digest.begin());
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos + 40), 32, e.prev_chain.begin());
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos + 72), 32, e.chain.begin());
  e.timestamp = bytes::get_le<std::uint64_t>(data, pos + 104);
  return e;
}

} // namespace detail

struct ChainReport {
  bool ok = false;
  std::optional<std::uint64_t> first_bad_index;
  std::string name;
  std::uint64_t entries = 0; // complete entries present in the file
  std::string reason;
};

struct ParsedLedger {
  ChainReport report;
  std::vector<LedgerEntry> entries;
};

/// Recomputes every chain link of an in-memory ledger image.
inline ParsedLedger parse_ledger(std::string_view data) {
  ParsedLedger out;
  ChainReport& r = out.report;
  if (data.size() < 4 || data.substr(0, 4) != std::string_view(kLedgerMagic, 4)) {
    r.reason = "bad magic";
    return out;
  }
  if (data.size() < 8) {
    r.reason = "truncated header";
    return out;
  }
  if (bytes::get_le<std::uint16_t>(data, 4) != kLedgerVersion) {
    r.reason = "unsupported version";
    return out;
  }
  const std::size_t name_len = bytes::get_le<std::uint16_t>(data, 6);
  if (data.size() < 8 + name_len) {
    r.reason = "truncated header";
    return out;
  }
  r.name = std::string(data.substr(8, name_len));
  const std::size_t body = 8 + name_len;
  const std::size_t full = (data.size() - body) / kLedgerEntrySize;
  const bool partial = (data.size() - body) % kLedgerEntrySize != 0;
  r.entries = full;

  Digest256 prev{};
  for (std::size_t i = 0; i < full; ++i) {
    LedgerEntry e = detail::decode_entry(data, body + i * kLedgerEntrySize);
    const char* problem = nullptr;
    if (e.index != i) problem = "index out of sequence";
    else if (e.prev_chain != prev) problem = "prev_chain does not match predecessor";
    else if (e.chain != chain_value(e.prev_chain, e.digest, e.index, e.timestamp)) problem = "chain value mismatch";
    if (problem) {
      r.first_bad_index = i;
      r.reason = "entry " + std::to_string(i) + ": " + problem;
      return out;
    }
    prev = e.chain;
    out.entries.push_back(e);
  }
  if (partial) {
    r.first_bad_index = full;
    r.reason = "truncated entry at index " + std::to_string(full);
    return out;
  }
  r.ok = true;
  return out;
}

/// Structural and cryptographic check of a ledger file. Throws IoError when
/// the file cannot be read; every content problem is reported, not thrown.
inline ChainReport verify_chain(const std::filesystem::path& path) {
  return parse_ledger(fileio::read_all(path)).report;
}

struct StoreResult {
  bool stored = false;
  Gas gas = 0;
};

/// One on-disk registry of embedding digests. Appends are serialized; reads
/// (hash_exists, entries) may run concurrently with each other.
class Ledger {
public:
  using Clock = std::function<std::uint64_t()>;

  static std::uint64_t system_clock_seconds() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
  }

  /// Opens (creating if absent) the ledger at `path`. An existing file is
  /// fully verified first; any failure throws IntegrityError.
  Ledger(std::filesystem::path path, std::string name, GasModel model = {}, std::uint64_t seed = 0,
         Clock clock = system_clock_seconds)
      : path_(std::move(path)), name_(std::move(name)), model_(model), rng_(seed), clock_(std::move(clock)) {
    model_.validate();
    if (std::filesystem::exists(path_)) {
      ParsedLedger parsed = parse_ledger(fileio::read_all(path_));
      if (!parsed.report.ok) throw IntegrityError("ledger " + path_.string() + " failed verification: " + parsed.report.reason);
      if (parsed.report.name != name_)
        throw IntegrityError("ledger " + path_.string() + " is named '" + parsed.report.name + "', expected '" + name_ + "'");
      entries_ = std::move(parsed.entries);
      for (const auto& e : entries_) members_.insert(e.digest);
    } else {
      if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
      fileio::write_atomic(path_, detail::encode_ledger_header(name_));
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open ledger " + path_.string() + " for append");
  }

  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  const std::string& name() const noexcept { return name_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Appends h unless already present. A duplicate costs only the existence
  /// check and leaves the ledger unchanged.
  StoreResult store_hash(const EmbedHash& h) {
    std::unique_lock lock(mu_);
    if (members_.count(h)) return {false, model_.exists_check_cost};
    LedgerEntry e;
    e.index = entries_.size();
    e.digest = h;
    e.prev_chain = entries_.empty() ? Digest256{} : entries_.back().chain;
    e.timestamp = clock_();
    e.chain = chain_value(e.prev_chain, e.digest, e.index, e.timestamp);
    const std::string bytes = detail::encode_entry(e);
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out_.flush();
    if (!out_) throw IoError("append to ledger " + path_.string() + " failed");
    entries_.push_back(e);
    members_.insert(h);
    return {true, model_.draw_uint_store(rng_)};
  }

  bool hash_exists(const EmbedHash& h) const {
    std::shared_lock lock(mu_);
    return members_.count(h) != 0;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  std::vector<LedgerEntry> entries() const {
    std::shared_lock lock(mu_);
    return entries_;
  }

  ChainReport verify() const {
    std::shared_lock lock(mu_);
    return verify_chain(path_);
  }

private:
  std::filesystem::path path_;
  std::string name_;
  GasModel model_;
  Rng rng_;
  Clock clock_;
  std::vector<LedgerEntry> entries_;
  std::set<EmbedHash> members_;
  std::ofstream out_;
  mutable std::shared_mutex mu_;
};

enum class HashVerdict { AI, HUMAN, UNDETERMINED };

inline std::string_view to_string(HashVerdict v) {
  switch (v) {
  case HashVerdict::AI: return "ai";
  case HashVerdict::HUMAN: return "human";
  default: return "undetermined";
  }
}

struct HashClassification {
  HashVerdict verdict = HashVerdict::UNDETERMINED;
  bool in_both = false; // present in both ledgers; verdict resolved to AI
};

inline HashClassification classify_by_hash(const EmbedHash& h, const Ledger& ai_ledger, const Ledger& human_ledger) {
  const bool in_ai = ai_ledger.hash_exists(h);
  const bool in_human = human_ledger.hash_exists(h);
  if (in_ai) return {HashVerdict::AI, in_human};
  if (in_human) return {HashVerdict::HUMAN, false};
  return {HashVerdict::UNDETERMINED, false};
}

} // namespace provenance
