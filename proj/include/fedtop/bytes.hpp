#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

// Little-endian scalar packing shared by the wire protocol and the federation
// file format. One serialization, one set of helpers.
namespace fedtop::bytes {

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint8_t get_u8(std::span<const std::uint8_t> in, std::size_t off) {
  return in[off];
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  return static_cast<std::uint32_t>(in[off]) |
         static_cast<std::uint32_t>(in[off + 1]) << 8 |
         static_cast<std::uint32_t>(in[off + 2]) << 16 |
         static_cast<std::uint32_t>(in[off + 3]) << 24;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
  return v;
}

inline std::int32_t get_i32(std::span<const std::uint8_t> in, std::size_t off) {
  return static_cast<std::int32_t>(get_u32(in, off));
}

inline double get_f64(std::span<const std::uint8_t> in, std::size_t off) {
  return std::bit_cast<double>(get_u64(in, off));
}

inline void put_f64_array(std::vector<std::uint8_t>& out, std::span<const double> vals) {
  if constexpr (std::endian::native == std::endian::little) {
    const std::size_t start = out.size();
    out.resize(start + vals.size() * 8);
    std::memcpy(out.data() + start, vals.data(), vals.size() * 8);
  } else {
    for (double v : vals) put_f64(out, v);
  }
}

inline void get_f64_array(std::span<const std::uint8_t> in, std::size_t off,
                          std::span<double> vals) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(vals.data(), in.data() + off, vals.size() * 8);
  } else {
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = get_f64(in, off + 8 * i);
  }
}

}  // namespace fedtop::bytes
