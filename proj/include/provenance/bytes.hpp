#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "error.hpp"

namespace provenance::bytes {

// Little-endian encoding helpers, independent of host byte order.

template <typename UInt>
void put_le(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float f) { put_le(out, std::bit_cast<std::uint32_t>(f)); }

template <typename UInt>
UInt get_le(std::string_view in, std::size_t pos) {
  if (pos + sizeof(UInt) > in.size()) throw ValidationError("unexpected end of data");
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    v |= static_cast<UInt>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

inline float get_f32(std::string_view in, std::size_t pos) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in, pos));
}

} // namespace provenance::bytes
