// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Orthogonal iterative merging. Every row (width pass) or column (height
// pass) of a token grid is treated as an independent lane and reduced by m
// tokens with a bipartite similarity match, so the grid stays rectangular.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/matrix.hpp"
#include "luvc/tensor.hpp"

namespace luvc::oim {

enum class Axis { kWidth, kHeight };

struct MergePair {
  std::size_t src;  // lane index absorbed (even position)
  std::size_t dst;  // lane index that survives (odd position)
  bool operator==(const MergePair&) const = default;
};

struct MergePlan {
  Axis axis = Axis::kWidth;
  std::size_t m = 0;
  std::vector<std::vector<MergePair>> lanes;  // one entry per row / column
};

struct MergeStats {
  std::size_t similarity_ops = 0;
};

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Bipartite match inside one lane of `len` tokens whose similarity
/// features are `keys` (len x kd, row-major). Set A holds even positions,
/// set B odd positions. Every A token finds its most similar B token (lowest
/// B index on ties); the m A tokens with the highest best-similarity (lowest
/// A index on ties) are merged into their match. Pairs are returned sorted
/// by source index.
inline std::vector<MergePair> bipartite_match_lane(std::span<const double> keys, std::size_t len,
                                                   std::size_t kd, std::size_t m,
                                                   MergeStats* stats = nullptr) {
  if (m == 0) return {};
  if (len < 2 * m) {
    throw ShapeError("bipartite_match_lane: lane of " + std::to_string(len) +
                     " tokens cannot absorb " + std::to_string(m) + " merges");
  }
  auto key = [&](std::size_t i) { return keys.subspan(i * kd, kd); };

  const std::size_t na = (len + 1) / 2;
  std::vector<double> best_sim(na);
  std::vector<std::size_t> best_dst(na);
  for (std::size_t a = 0; a < na; ++a) {
    const std::size_t ia = 2 * a;
    double best = -2.0;
    std::size_t arg = 1;
    for (std::size_t ib = 1; ib < len; ib += 2) {
      const double s = cosine_similarity(key(ia), key(ib));
      if (s > best) {
        best = s;
        arg = ib;
      }
    }
    if (stats) stats->similarity_ops += len / 2;
    best_sim[a] = best;
    best_dst[a] = arg;
  }

  std::vector<std::size_t> order(na);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return best_sim[x] > best_sim[y]; });
  order.resize(m);
  std::sort(order.begin(), order.end());

  std::vector<MergePair> pairs;
  pairs.reserve(m);
  for (std::size_t a : order) pairs.push_back({2 * a, best_dst[a]});
  return pairs;
}

/// Applies merge pairs to one lane: each destination becomes the
/// size-weighted mean of itself and its sources, sizes add. Survivors keep
/// their lane order. Writes (len - pairs) tokens to out_feats / out_sizes.
inline void apply_lane_merges(std::span<const double> feats, std::span<const double> sizes,
                              std::size_t len, std::size_t d, const std::vector<MergePair>& pairs,
                              std::vector<double>& out_feats, std::vector<double>& out_sizes) {
  std::vector<char> absorbed(len, 0);
  std::vector<double> acc(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(len * d));
  std::vector<double> mass(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(len));
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t c = 0; c < d; ++c) acc[i * d + c] *= sizes[i];
  }
  for (const auto& p : pairs) {
    absorbed[p.src] = 1;
    for (std::size_t c = 0; c < d; ++c) acc[p.dst * d + c] += acc[p.src * d + c];
    mass[p.dst] += mass[p.src];
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (absorbed[i]) continue;
    const bool touched = mass[i] != sizes[i];
    for (std::size_t c = 0; c < d; ++c) {
      // Untouched tokens are copied verbatim so unmerged lanes stay bit-exact.
      out_feats.push_back(touched ? acc[i * d + c] / mass[i] : feats[i * d + c]);
    }
    out_sizes.push_back(mass[i]);
  }
}

namespace detail {

inline void gather_lane(const TokenGrid& g, Axis axis, std::size_t lane, std::vector<double>& feats,
                        std::vector<double>& sizes) {
  feats.clear();
  sizes.clear();
  const std::size_t len = axis == Axis::kWidth ? g.w() : g.h();
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t r = axis == Axis::kWidth ? lane : i;
    const std::size_t c = axis == Axis::kWidth ? i : lane;
    auto t = g.at(r, c);
    feats.insert(feats.end(), t.begin(), t.end());
    sizes.push_back(g.size_at(r, c));
  }
}

inline void gather_keys(const TokenGrid& keys, Axis axis, std::size_t lane, std::vector<double>& out) {
  out.clear();
  const std::size_t len = axis == Axis::kWidth ? keys.w() : keys.h();
  for (std::size_t i = 0; i < len; ++i) {
    auto t = axis == Axis::kWidth ? keys.at(lane, i) : keys.at(i, lane);
    out.insert(out.end(), t.begin(), t.end());
  }
}

}  // namespace detail

struct MergeOptions {
  // Optional similarity features with the same h x w as the grid. When
  // absent, token features are compared directly.
  const TokenGrid* keys = nullptr;
  MergeStats* stats = nullptr;
  MergePlan* plan_out = nullptr;
};

/// Reduces the grid by m tokens along `axis`, lane by lane.
inline TokenGrid merge_axis(const TokenGrid& grid, std::size_t m, Axis axis,
                            const MergeOptions& opt = {}) {
  const std::size_t len = axis == Axis::kWidth ? grid.w() : grid.h();
  const std::size_t lanes = axis == Axis::kWidth ? grid.h() : grid.w();
  const char* name = axis == Axis::kWidth ? "merge_width" : "merge_height";
  if (len < 2 * m) {
    throw ShapeError(std::string(name) + ": axis length " + std::to_string(len) +
                     " is too small for m=" + std::to_string(m));
  }
  if (opt.keys && (opt.keys->h() != grid.h() || opt.keys->w() != grid.w())) {
    throw ShapeError(std::string(name) + ": key grid shape differs from token grid");
  }
  if (opt.plan_out) *opt.plan_out = MergePlan{axis, m, {}};
  if (m == 0 || grid.empty()) return grid;

  const std::size_t d = grid.d();
  const std::size_t out_len = len - m;
  std::vector<std::vector<double>> lane_feats(lanes), lane_sizes(lanes);
  std::vector<double> feats, sizes, keys;
  for (std::size_t l = 0; l < lanes; ++l) {
    detail::gather_lane(grid, axis, l, feats, sizes);
    std::vector<MergePair> pairs;
    if (opt.keys) {
      detail::gather_keys(*opt.keys, axis, l, keys);
      pairs = bipartite_match_lane(keys, len, opt.keys->d(), m, opt.stats);
    } else {
      pairs = bipartite_match_lane(feats, len, d, m, opt.stats);
    }
    apply_lane_merges(feats, sizes, len, d, pairs, lane_feats[l], lane_sizes[l]);
    if (opt.plan_out) opt.plan_out->lanes.push_back(std::move(pairs));
  }

  const std::size_t oh = axis == Axis::kWidth ? grid.h() : out_len;
  const std::size_t ow = axis == Axis::kWidth ? out_len : grid.w();
  std::vector<double> data(oh * ow * d);
  std::vector<double> out_sizes(oh * ow);
  for (std::size_t l = 0; l < lanes; ++l) {
    for (std::size_t i = 0; i < out_len; ++i) {
      const std::size_t r = axis == Axis::kWidth ? l : i;
      const std::size_t c = axis == Axis::kWidth ? i : l;
      std::copy_n(lane_feats[l].begin() + static_cast<std::ptrdiff_t>(i * d), d,
                  data.begin() + static_cast<std::ptrdiff_t>((r * ow + c) * d));
      out_sizes[r * ow + c] = lane_sizes[l][i];
    }
  }
  return TokenGrid(oh, ow, d, std::move(data), std::move(out_sizes));
}

inline TokenGrid merge_width(const TokenGrid& grid, std::size_t m, const MergeOptions& opt = {}) {
  return merge_axis(grid, m, Axis::kWidth, opt);
}

inline TokenGrid merge_height(const TokenGrid& grid, std::size_t m, const MergeOptions& opt = {}) {
  return merge_axis(grid, m, Axis::kHeight, opt);
}

/// One orthogonal iteration: width merge, then height merge on the result.
/// m_w and m_h may differ for non-square inputs.
inline TokenGrid oim_step(const TokenGrid& grid, std::size_t m_w, std::size_t m_h,
                          MergeStats* stats = nullptr) {
  if (grid.w() < 2 * m_w || grid.h() < 2 * m_h) {
    throw ShapeError("oim_step: " + std::to_string(grid.h()) + "x" + std::to_string(grid.w()) +
                     " grid too small for m_w=" + std::to_string(m_w) +
                     ", m_h=" + std::to_string(m_h));
  }
  MergeOptions opt;
  opt.stats = stats;
  return merge_height(merge_width(grid, m_w, opt), m_h, opt);
}

inline TokenGrid oim_step(const TokenGrid& grid, std::size_t m, MergeStats* stats = nullptr) {
  return oim_step(grid, m, m, stats);
}

/// ToMe-style merge over the flattened sequence; the spatial layout is lost.
/// Survivor positions index the original row-major grid.
struct Merged1d {
  TokenSequence tokens;
  std::vector<double> sizes;
};

inline Merged1d merge_1d(const TokenSequence& seq, std::size_t r, MergeStats* stats = nullptr) {
  if (seq.n() < 2 * r) {
    throw ShapeError("merge_1d: " + std::to_string(seq.n()) + " tokens cannot absorb " +
                     std::to_string(r) + " merges");
  }
  const std::vector<double> ones(seq.n(), 1.0);
  auto pairs = bipartite_match_lane(seq.data(), seq.n(), seq.d(), r, stats);
  std::vector<double> feats, sizes;
  apply_lane_merges(seq.data(), ones, seq.n(), seq.d(), pairs, feats, sizes);
  std::vector<char> absorbed(seq.n(), 0);
  for (const auto& p : pairs) absorbed[p.src] = 1;
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < seq.n(); ++i) {
    if (!absorbed[i]) pos.push_back(seq.positions()[i]);
  }
  const std::size_t n = pos.size();
  return {TokenSequence(n, seq.d(), std::move(feats), std::move(pos), seq.source_length()),
          std::move(sizes)};
}

/// O = A (V + log s): log of each token's merged size is added to every
/// channel of its value row before the attention-weighted sum.
inline Matrix value_enhance(const Matrix& attn, const Matrix& values, std::span<const double> sizes) {
  const std::size_t n = attn.rows;
  if (attn.cols != n || values.rows != n || sizes.size() != n) {
    throw ShapeError("value_enhance: attention, values and sizes must agree on n");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += attn(i, j);
    if (std::abs(s - 1.0) > 1e-6) {
      throw ArgumentError("value_enhance: attention row " + std::to_string(i) +
                          " sums to " + std::to_string(s));
    }
    if (!(sizes[i] >= 1.0)) throw ArgumentError("value_enhance: sizes must be >= 1");
  }
  Matrix enhanced = values;
  for (std::size_t j = 0; j < n; ++j) {
    const double ls = std::log(sizes[j]);
    for (auto& v : enhanced.row(j)) v += ls;
  }
  return matmul(attn, enhanced);
}

enum class MatchMode { kOim, k1d };

/// Pairwise similarity evaluations needed to merge n tokens once.
/// 1d: one bipartite match over the flattened sequence, (n/2)^2.
/// oim: a width pass over the sqrt(n) x sqrt(n) grid followed by a height
/// pass over the width-reduced grid, each lane matching ceil(len/2) A tokens
/// against floor(len/2) B tokens.
inline std::size_t similarity_op_count(std::size_t n, MatchMode mode, std::size_t m = 1) {
  if (mode == MatchMode::k1d) {
    return ((n + 1) / 2) * (n / 2);
  }
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) {
    throw ArgumentError("similarity_op_count: oim mode needs a square token count, got " +
                        std::to_string(n));
  }
  if (side < 2 * m) throw ArgumentError("similarity_op_count: grid too small for m");
  auto lane = [](std::size_t len) { return ((len + 1) / 2) * (len / 2); };
  const std::size_t width_pass = side * lane(side);
  const std::size_t height_pass = (side - m) * lane(side);
  return width_pass + height_pass;
}

}  // namespace luvc::oim
