// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// LUVC1 binary grid layout (all integers and floats little-endian):
//
//   offset  size        field
//   0       4           magic "LUVC"
//   4       1           version, always 1
//   5       4           u32 h
//   9       4           u32 w
//   13      4           u32 d
//   17      4*h*w*d     float32 token features, row-major (r, c, channel)
//   ...     4*h*w       float32 merged sizes, row-major
//
// The file must end exactly after the sizes block.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "luvc/errors.hpp"
#include "luvc/tensor.hpp"

namespace luvc::io {

inline constexpr char kGridMagic[4] = {'L', 'U', 'V', 'C'};
inline constexpr std::uint8_t kGridVersion = 1;
inline constexpr std::size_t kGridHeaderBytes = 17;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t off) {
  return std::bit_cast<float>(get_u32(in, off));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_grid(const TokenGrid& g) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (g.h() > kMax || g.w() > kMax || g.d() > kMax) {
    throw ShapeError("encode_grid: dimension exceeds u32");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kGridHeaderBytes + 4 * (g.data().size() + g.sizes().size()));
  out.insert(out.end(), std::begin(kGridMagic), std::end(kGridMagic));
  out.push_back(kGridVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(g.h()));
  detail::put_u32(out, static_cast<std::uint32_t>(g.w()));
  detail::put_u32(out, static_cast<std::uint32_t>(g.d()));
  for (double v : g.data()) detail::put_f32(out, static_cast<float>(v));
  for (double s : g.sizes()) detail::put_f32(out, static_cast<float>(s));
  return out;
}

inline TokenGrid decode_grid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kGridHeaderBytes) {
    throw FormatError("LUVC1: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kGridMagic, 4) != 0) throw FormatError("LUVC1: bad magic");
  if (bytes[4] != kGridVersion) {
    throw FormatError("LUVC1: unsupported version " + std::to_string(bytes[4]));
  }
  const std::uint64_t h = detail::get_u32(bytes, 5);
  const std::uint64_t w = detail::get_u32(bytes, 9);
  const std::uint64_t d = detail::get_u32(bytes, 13);
  if (d == 0) throw FormatError("LUVC1: feature dim is zero");
  if ((h == 0) != (w == 0)) throw FormatError("LUVC1: h and w must both be zero or positive");

  // Each factor is < 2^32; compare through division so the products never overflow.
  const std::uint64_t payload = bytes.size() - kGridHeaderBytes;
  const std::uint64_t cells = h * w;  // < 2^64
  if (cells != 0 && (payload / 4) / cells < d + 1) {
    throw FormatError("LUVC1: payload too short for declared " + std::to_string(h) + "x" +
                      std::to_string(w) + "x" + std::to_string(d) + " grid");
  }
  if (payload != 4 * cells * (d + 1)) {
    throw FormatError("LUVC1: payload length " + std::to_string(payload) +
                      " does not match declared dimensions");
  }

  std::vector<double> data(cells * d);
  std::size_t off = kGridHeaderBytes;
  for (auto& v : data) {
    const float f = detail::get_f32(bytes, off);
    if (!std::isfinite(f)) throw FormatError("LUVC1: non-finite feature value");
    v = f;
    off += 4;
  }
  std::vector<double> sizes(cells);
  for (auto& s : sizes) {
    const float f = detail::get_f32(bytes, off);
    if (!std::isfinite(f) || f < 1.0f || std::floor(f) != f) {
      throw FormatError("LUVC1: merged sizes must be integral and >= 1");
    }
    s = f;
    off += 4;
  }
  if (cells == 0) return TokenGrid::empty(d);
  return TokenGrid(h, w, d, std::move(data), std::move(sizes));
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path);
}

inline TokenGrid load_grid(const std::string& path) { return decode_grid(read_file(path)); }

inline void save_grid(const std::string& path, const TokenGrid& g) {
  write_file(path, encode_grid(g));
}

// JSON alternative for tiny fixtures:
//   {"schema": 1, "h": 2, "w": 2, "d": 1, "data": [...], "sizes": [...]}
// "sizes" is optional and defaults to all ones.
inline nlohmann::json grid_to_json(const TokenGrid& g) {
  return {{"schema", 1},
          {"h", g.h()},
          {"w", g.w()},
          {"d", g.d()},
          {"data", std::vector<double>(g.data().begin(), g.data().end())},
          {"sizes", std::vector<double>(g.sizes().begin(), g.sizes().end())}};
}

inline TokenGrid grid_from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", 0) != 1) throw FormatError("grid JSON: expected \"schema\": 1");
    const auto h = j.at("h").get<std::size_t>();
    const auto w = j.at("w").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    std::vector<double> sizes = j.contains("sizes") ? j.at("sizes").get<std::vector<double>>()
                                                    : std::vector<double>(h * w, 1.0);
    if (h * w == 0 && data.empty()) return TokenGrid::empty(d);
    return TokenGrid(h, w, d, std::move(data), std::move(sizes));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("grid JSON: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("grid JSON: ") + e.what());
  }
}

}  // namespace luvc::io
