#pragma once

// Gas-cost model for storing a 256-bit hash as uint256 vs string.
//
// uint256 stores are drawn from a triangular distribution over [min, max]
// whose mode is chosen so the distribution mean equals uint_store_mean
// (mode = 3*mean - min - max). string stores cost a constant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace provenance {

using Gas = std::uint64_t;

enum class StorageMode { Uint256, String };

inline std::string_view to_string(StorageMode m) { return m == StorageMode::Uint256 ? "uint256" : "string"; }

inline StorageMode parse_storage_mode(std::string_view s) {
  if (s == "uint256") return StorageMode::Uint256;
  if (s == "string") return StorageMode::String;
  throw ValidationError("unknown storage mode '" + std::string(s) + "'");
}

struct GasModel {
  Gas uint_store_mean = 36207;
  Gas uint_store_min = 21528;
  Gas uint_store_max = 51228;
  Gas string_store_cost = 97667;
  // 21000 intrinsic + 2100 cold SLOAD + ~300 call dispatch.
  Gas exists_check_cost = 23400;

  double triangular_mode() const {
    return 3.0 * static_cast<double>(uint_store_mean) - static_cast<double>(uint_store_min) -
           static_cast<double>(uint_store_max);
  }

  void validate() const {
    if (uint_store_min == 0 || string_store_cost == 0 || exists_check_cost == 0)
      throw ValidationError("gas model costs must be positive");
    if (!(uint_store_min <= uint_store_mean && uint_store_mean <= uint_store_max))
      throw ValidationError("gas model requires min <= mean <= max");
    const double c = triangular_mode();
    if (c < static_cast<double>(uint_store_min) || c > static_cast<double>(uint_store_max))
      throw ValidationError("gas model mean is not reachable by a triangular distribution on [min, max]");
  }

  Gas draw_uint_store(Rng& rng) const {
    const double a = static_cast<double>(uint_store_min), b = static_cast<double>(uint_store_max);
    if (a == b) return uint_store_min;
    const double c = triangular_mode();
    const double u = rng.uniform01();
    const double fc = (c - a) / (b - a);
    const double x = u < fc ? a + std::sqrt(u * (b - a) * (c - a)) : b - std::sqrt((1 - u) * (b - a) * (b - c));
    return static_cast<Gas>(std::clamp(std::llround(x), static_cast<long long>(uint_store_min),
                                       static_cast<long long>(uint_store_max)));
  }
};

struct GasSummary {
  std::uint64_t count = 0;
  double mean = 0;
  double median = 0;
  Gas min = 0;
  Gas max = 0;
};

struct GasSimulation {
  std::vector<Gas> samples;
  GasSummary summary;
};

inline GasSummary summarize_gas(std::vector<Gas> samples) {
  GasSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  double sum = 0;
  for (Gas g : samples) sum += static_cast<double>(g);
  s.mean = sum / static_cast<double>(samples.size());
  const std::size_t mid = samples.size() / 2;
  s.median = samples.size() % 2 ? static_cast<double>(samples[mid])
                                : (static_cast<double>(samples[mid - 1]) + static_cast<double>(samples[mid])) / 2.0;
  s.min = samples.front();
  s.max = samples.back();
  return s;
}

inline GasSimulation simulate_gas(StorageMode mode, std::uint64_t n, const GasModel& model = {},
                                  std::uint64_t seed = 0) {
  if (n < 1) throw ValidationError("gas simulation needs n >= 1");
  model.validate();
  GasSimulation sim;
  sim.samples.reserve(n);
  Rng rng(seed);
  for (std::uint64_t i = 0; i < n; ++i)
    sim.samples.push_back(mode == StorageMode::String ? model.string_store_cost : model.draw_uint_store(rng));
  sim.summary = summarize_gas(sim.samples);
  return sim;
}

/// Five-row statistic table, one column per simulated mode.
inline std::string render_gas_table(const std::vector<std::pair<StorageMode, GasSummary>>& columns) {
  auto num = [](double v) {
    char buf[64];
    if (v == std::floor(v)) std::snprintf(buf, sizeof buf, "%.0f", v);
    else std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::string out = "statistic";
  for (const auto& [mode, _] : columns) out += ",gas_" + std::string(to_string(mode));
  out += '\n';
  auto row = [&](const char* name, auto get) {
    out += name;
    for (const auto& [_, s] : columns) out += "," + num(get(s));
    out += '\n';
  };
  row("count", [](const GasSummary& s) { return static_cast<double>(s.count); });
  row("mean", [](const GasSummary& s) { return s.mean; });
  row("median", [](const GasSummary& s) { return s.median; });
  row("min", [](const GasSummary& s) { return static_cast<double>(s.min); });
  row("max", [](const GasSummary& s) { return static_cast<double>(s.max); });
  return out;
}

} // namespace provenance
