// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "luvc/errors.hpp"

namespace luvc {

/// Flattened token list (n x d, row-major) with the original index of every
/// token. `source_length` is the length of the sequence the positions refer
/// to; it survives pruning so that concatenation can offset correctly.
class TokenSequence {
 public:
  TokenSequence() = default;

  explicit TokenSequence(std::size_t d) : d_(d) {}

  TokenSequence(std::size_t n, std::size_t d, std::vector<double> data)
      : n_(n), d_(d), source_length_(n), data_(std::move(data)) {
    positions_.resize(n);
    for (std::size_t i = 0; i < n; ++i) positions_[i] = i;
    validate();
  }

  TokenSequence(std::size_t n, std::size_t d, std::vector<double> data,
                std::vector<std::size_t> positions, std::size_t source_length)
      : n_(n),
        d_(d),
        source_length_(source_length),
        data_(std::move(data)),
        positions_(std::move(positions)) {
    validate();
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  std::size_t source_length() const { return source_length_; }
  bool empty() const { return n_ == 0; }

  std::span<const double> data() const { return data_; }
  std::span<const std::size_t> positions() const { return positions_; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * d_, d_);
  }

  bool operator==(const TokenSequence&) const = default;

 private:
  void validate() const {
    if (data_.size() != n_ * d_) {
      throw ShapeError("token sequence: data length " +
                       std::to_string(data_.size()) + " != n*d = " +
                       std::to_string(n_ * d_));
    }
    if (positions_.size() != n_) {
      throw ShapeError("token sequence: positions length != n");
    }
    for (std::size_t i = 0; i < n_; ++i) {
      if (positions_[i] >= source_length_) {
        throw ShapeError("token sequence: position out of source range");
      }
      if (i > 0 && positions_[i] <= positions_[i - 1]) {
        throw ShapeError("token sequence: positions must be strictly increasing");
      }
    }
  }

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::size_t source_length_ = 0;
  std::vector<double> data_;
  std::vector<std::size_t> positions_;
};

/// 2D token field (h x w x d, row-major) with the number of original tokens
/// folded into each cell. A 0x0 grid is the empty field left by drop-all.
class TokenGrid {
 public:
  TokenGrid() = default;

  TokenGrid(std::size_t h, std::size_t w, std::size_t d, std::vector<double> data)
      : TokenGrid(h, w, d, std::move(data), std::vector<double>(h * w, 1.0)) {}

  TokenGrid(std::size_t h, std::size_t w, std::size_t d, std::vector<double> data,
            std::vector<double> sizes)
      : h_(h), w_(w), d_(d), data_(std::move(data)), sizes_(std::move(sizes)) {
    validate();
  }

  static TokenGrid empty(std::size_t d) {
    TokenGrid g;
    g.d_ = d;
    return g;
  }

  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  std::size_t d() const { return d_; }
  std::size_t count() const { return h_ * w_; }
  bool empty() const { return count() == 0; }

  std::span<const double> data() const { return data_; }
  std::span<const double> sizes() const { return sizes_; }

  std::span<const double> at(std::size_t r, std::size_t c) const {
    return std::span<const double>(data_).subspan((r * w_ + c) * d_, d_);
  }
  double size_at(std::size_t r, std::size_t c) const { return sizes_[r * w_ + c]; }

  double total_size() const {
    double s = 0.0;
    for (double v : sizes_) s += v;
    return s;
  }

  bool operator==(const TokenGrid&) const = default;

 private:
  void validate() const {
    if ((h_ == 0) != (w_ == 0)) {
      throw ShapeError("token grid: h and w must both be zero or both positive");
    }
    if (d_ == 0) throw ShapeError("token grid: feature dim must be >= 1");
    if (data_.size() != h_ * w_ * d_) {
      throw ShapeError("token grid: data length " + std::to_string(data_.size()) +
                       " != h*w*d = " + std::to_string(h_ * w_ * d_));
    }
    if (sizes_.size() != h_ * w_) throw ShapeError("token grid: sizes length != h*w");
    for (double s : sizes_) {
      if (!(s >= 1.0) || std::floor(s) != s) {
        throw ShapeError("token grid: sizes must be integral and >= 1");
      }
    }
  }

  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::size_t d_ = 1;
  std::vector<double> data_;
  std::vector<double> sizes_;
};

/// Spectrum along the token axis: n bins x d channels, split real/imag.
struct ComplexSequence {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> re;
  std::vector<double> im;

  ComplexSequence() = default;
  ComplexSequence(std::size_t n_, std::size_t d_)
      : n(n_), d(d_), re(n_ * d_, 0.0), im(n_ * d_, 0.0) {}
  ComplexSequence(std::size_t n_, std::size_t d_, std::vector<double> re_,
                  std::vector<double> im_)
      : n(n_), d(d_), re(std::move(re_)), im(std::move(im_)) {
    if (re.size() != n * d || im.size() != n * d) {
      throw ShapeError("complex sequence: re/im must both hold n*d values");
    }
  }

  bool operator==(const ComplexSequence&) const = default;
};

inline TokenGrid grid_from_sequence(const TokenSequence& seq, std::size_t h,
                                    std::size_t w) {
  if (seq.n() != h * w) {
    throw ShapeError("grid_from_sequence: " + std::to_string(seq.n()) +
                     " tokens cannot fill a " + std::to_string(h) + "x" +
                     std::to_string(w) + " grid");
  }
  if (seq.n() == 0) return TokenGrid::empty(seq.d());
  return TokenGrid(h, w, seq.d(), {seq.data().begin(), seq.data().end()});
}

inline TokenSequence sequence_from_grid(const TokenGrid& grid) {
  return TokenSequence(grid.count(), grid.d(),
                       {grid.data().begin(), grid.data().end()});
}

/// Tokens of `a` followed by tokens of `b`. Positions of `b` are shifted by
/// `a.source_length()` so provenance stays unambiguous. Either side may be
/// empty regardless of its feature dim.
inline TokenSequence concat_tokens(const TokenSequence& a, const TokenSequence& b) {
  if (a.empty() && a.source_length() == 0) return b;
  if (b.empty() && b.source_length() == 0) return a;
  if (a.d() != b.d() && !a.empty() && !b.empty()) {
    throw ShapeError("concat_tokens: feature dims differ (" + std::to_string(a.d()) +
                     " vs " + std::to_string(b.d()) + ")");
  }
  const std::size_t d = a.empty() ? b.d() : a.d();
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  std::vector<std::size_t> pos(a.positions().begin(), a.positions().end());
  for (std::size_t p : b.positions()) pos.push_back(p + a.source_length());
  return TokenSequence(a.n() + b.n(), d, std::move(data), std::move(pos),
                       a.source_length() + b.source_length());
}

/// Inverse of concat_tokens: the first `first_n` tokens whose positions lie
/// below `first_source_length`, and the rest re-based to zero.
inline std::pair<TokenSequence, TokenSequence> split_tokens(const TokenSequence& seq,
                                                           std::size_t first_n,
                                                           std::size_t first_source_length) {
  if (first_n > seq.n() || first_source_length > seq.source_length()) {
    throw ShapeError("split_tokens: split point beyond sequence");
  }
  const std::size_t d = seq.d();
  auto data = seq.data();
  auto pos = seq.positions();
  std::vector<std::size_t> pa(pos.begin(), pos.begin() + first_n);
  std::vector<std::size_t> pb;
  pb.reserve(seq.n() - first_n);
  for (std::size_t i = first_n; i < seq.n(); ++i) {
    if (pos[i] < first_source_length) throw ShapeError("split_tokens: inconsistent split");
    pb.push_back(pos[i] - first_source_length);
  }
  TokenSequence a(first_n, d, {data.begin(), data.begin() + first_n * d}, std::move(pa),
                  first_source_length);
  TokenSequence b(seq.n() - first_n, d, {data.begin() + first_n * d, data.end()},
                  std::move(pb), seq.source_length() - first_source_length);
  return {std::move(a), std::move(b)};
}

/// Swaps the two spatial axes. Used to express column merges as row merges.
inline TokenGrid transpose(const TokenGrid& g) {
  if (g.empty()) return g;
  const std::size_t h = g.h(), w = g.w(), d = g.d();
  std::vector<double> data(h * w * d);
  std::vector<double> sizes(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      auto src = g.at(r, c);
      std::copy(src.begin(), src.end(), data.begin() + (c * h + r) * d);
      sizes[c * h + r] = g.size_at(r, c);
    }
  }
  return TokenGrid(w, h, d, std::move(data), std::move(sizes));
}

}  // namespace luvc
