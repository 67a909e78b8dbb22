// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Netpbm (PGM/PPM) reading and writing, plus the patch featurizer that turns
// an image into a token grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/grid_io.hpp"
#include "luvc/tensor.hpp"

namespace luvc::image {

/// Interleaved pixels scaled to [0, 1], row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

namespace detail {

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> b) : b_(b) {}

  void skip_space() {
    while (pos_ < b_.size()) {
      const auto ch = b_[pos_];
      if (ch == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
      } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f') {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::uint64_t number(std::string_view what, std::uint64_t max) {
    skip_space();
    if (pos_ >= b_.size() || b_[pos_] < '0' || b_[pos_] > '9') {
      throw FormatError("PNM: expected " + std::string(what));
    }
    std::uint64_t v = 0;
    while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
      v = v * 10 + (b_[pos_] - '0');
      if (v > max) throw FormatError("PNM: " + std::string(what) + " too large");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary samples.
  void single_space() {
    if (pos_ >= b_.size()) throw FormatError("PNM: truncated after header");
    const auto ch = b_[pos_];
    if (ch != ' ' && ch != '\t' && ch != '\n' && ch != '\r') {
      throw FormatError("PNM: missing separator before pixel data");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }
  std::uint8_t byte() { return b_[pos_++]; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint64_t kMaxImageSide = 1u << 16;

/// Parses P2, P3, P5 and P6. 16-bit binary samples are big-endian.
inline Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("PNM: bad magic");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw FormatError(std::string("PNM: unsupported type P") + kind);
  }
  detail::PnmReader rd(bytes.subspan(2));
  Image img;
  img.channels = (kind == '3' || kind == '6') ? 3 : 1;
  img.width = rd.number("width", kMaxImageSide);
  img.height = rd.number("height", kMaxImageSide);
  const auto maxval = rd.number("maxval", 65535);
  if (img.width == 0 || img.height == 0) throw FormatError("PNM: zero image dimension");
  if (maxval == 0) throw FormatError("PNM: maxval must be >= 1");

  const std::uint64_t samples = img.width * img.height * img.channels;
  const bool binary = kind == '5' || kind == '6';
  const std::uint64_t bps = maxval > 255 ? 2 : 1;
  if (binary) {
    rd.single_space();
    if (rd.remaining() < samples * bps) {
      throw FormatError("PNM: pixel data truncated (" + std::to_string(rd.remaining()) + " of " +
                        std::to_string(samples * bps) + " bytes)");
    }
  } else if (rd.remaining() < samples) {
    throw FormatError("PNM: pixel data truncated");
  }
  img.pixels.resize(samples);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (auto& p : img.pixels) {
    std::uint64_t v;
    if (!binary) {
      v = rd.number("sample", 65535);
    } else if (bps == 2) {
      v = static_cast<std::uint64_t>(rd.byte()) << 8;
      v |= rd.byte();
    } else {
      v = rd.byte();
    }
    if (v > maxval) throw FormatError("PNM: sample exceeds maxval");
    p = static_cast<double>(v) * scale;
  }
  return img;
}

inline Image load_pnm(const std::string& path) { return decode_pnm(io::read_file(path)); }

/// Binary PGM (P5, maxval 255) from values in [0, 1].
inline std::vector<std::uint8_t> encode_pgm(std::size_t w, std::size_t h,
                                            std::span<const double> values) {
  if (values.size() != w * h) throw ShapeError("encode_pgm: value count != w*h");
  const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : values) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

/// Binary PPM (P6, maxval 255) from interleaved RGB values in [0, 1].
inline std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = std::string(img.channels == 3 ? "P6\n" : "P5\n") +
                             std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : img.pixels) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Featurizer

enum class Featurizer { kRaw, kDct };

inline Featurizer parse_featurizer(std::string_view s) {
  if (s == "raw") return Featurizer::kRaw;
  if (s == "dct") return Featurizer::kDct;
  throw ArgumentError("unknown featurizer '" + std::string(s) + "' (expected raw or dct)");
}

/// JPEG-style zig-zag scan of an n x n block: (row, col) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> zigzag_order(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> order;
  order.reserve(n * n);
  for (std::size_t s = 0; s + 1 < 2 * n; ++s) {
    const std::size_t lo = s < n ? 0 : s - n + 1;
    const std::size_t hi = s < n ? s : n - 1;
    if (s % 2 == 0) {
      for (std::size_t r = hi + 1; r-- > lo;) order.emplace_back(r, s - r);
    } else {
      for (std::size_t r = lo; r <= hi; ++r) order.emplace_back(r, s - r);
    }
  }
  return order;
}

/// Orthonormal DCT-II basis: basis[u * n + x] = a(u) cos(pi (2x+1) u / 2n).
inline std::vector<double> dct_basis(std::size_t n) {
  std::vector<double> b(n * n);
  for (std::size_t u = 0; u < n; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t x = 0; x < n; ++x) {
      b[u * n + x] = a * std::cos(std::numbers::pi * (2.0 * static_cast<double>(x) + 1.0) *
                                  static_cast<double>(u) / (2.0 * static_cast<double>(n)));
    }
  }
  return b;
}

/// Splits the image into patch x patch blocks (centre-cropping to the
/// largest multiple of `patch`) and emits one token per block. Raw tokens
/// are the block pixels in (y, x, channel) order; DCT tokens are the
/// per-channel 2D DCT-II coefficients in zig-zag order, channel-major.
inline TokenGrid featurize_image(const Image& img, std::size_t patch, Featurizer mode) {
  if (patch == 0) throw ArgumentError("featurize: patch must be >= 1");
  if (img.width < patch || img.height < patch) {
    throw ShapeError("featurize: " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     " image is smaller than one " + std::to_string(patch) + "px patch");
  }
  const std::size_t gh = img.height / patch, gw = img.width / patch;
  const std::size_t oy = (img.height - gh * patch) / 2, ox = (img.width - gw * patch) / 2;
  const std::size_t ch = img.channels, d = patch * patch * ch;
  std::vector<double> data;
  data.reserve(gh * gw * d);

  const auto basis = mode == Featurizer::kDct ? dct_basis(patch) : std::vector<double>{};
  const auto zz = mode == Featurizer::kDct ? zigzag_order(patch)
                                           : std::vector<std::pair<std::size_t, std::size_t>>{};
  std::vector<double> block(patch * patch), tmp(patch * patch);
  for (std::size_t r = 0; r < gh; ++r) {
    for (std::size_t c = 0; c < gw; ++c) {
      const std::size_t y0 = oy + r * patch, x0 = ox + c * patch;
      if (mode == Featurizer::kRaw) {
        for (std::size_t y = 0; y < patch; ++y) {
          for (std::size_t x = 0; x < patch; ++x) {
            for (std::size_t k = 0; k < ch; ++k) data.push_back(img.at(y0 + y, x0 + x, k));
          }
        }
        continue;
      }
      for (std::size_t k = 0; k < ch; ++k) {
        for (std::size_t y = 0; y < patch; ++y) {
          for (std::size_t x = 0; x < patch; ++x) block[y * patch + x] = img.at(y0 + y, x0 + x, k);
        }
        // Rows first: tmp[y][v] = sum_x block[y][x] basis[v][x].
        for (std::size_t y = 0; y < patch; ++y) {
          for (std::size_t v = 0; v < patch; ++v) {
            double s = 0.0;
            for (std::size_t x = 0; x < patch; ++x) s += block[y * patch + x] * basis[v * patch + x];
            tmp[y * patch + v] = s;
          }
        }
        // Then columns: coef[u][v] = sum_y tmp[y][v] basis[u][y].
        for (auto [u, v] : zz) {
          double s = 0.0;
          for (std::size_t y = 0; y < patch; ++y) s += tmp[y * patch + v] * basis[u * patch + y];
          data.push_back(s);
        }
      }
    }
  }
  return TokenGrid(gh, gw, d, std::move(data));
}

}  // namespace luvc::image
