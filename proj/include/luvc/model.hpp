// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic toy transformer used by the pipeline simulator.
//
// Weights come from SplitMix64 so they can be regenerated bit-for-bit in any
// language:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^= z >> 31
//   u = (z >> 11) * 2^-53                      in [0, 1)
//   weight = (2u - 1) / sqrt(fan_in)
// Each tensor gets its own stream seeded with seed ^ (tensor_id * 0xD1B54A32D192ED03).
// Tensors are filled row-major (fan_in rows, fan_out columns).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/matrix.hpp"
#include "luvc/oim.hpp"

namespace luvc::model {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Symmetric in [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t tensor_seed(std::uint64_t seed, std::uint64_t tensor_id) {
  return seed ^ (tensor_id * 0xD1B54A32D192ED03ull);
}

inline Matrix random_weight(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed,
                            std::uint64_t tensor_id) {
  SplitMix64 rng(tensor_seed(seed, tensor_id));
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (auto& v : w.v) v = rng.symmetric() * scale;
  return w;
}

struct ToyModelConfig {
  std::size_t d = 32;
  std::size_t heads = 4;
  std::uint64_t seed = 0;
  std::size_t text_len = 16;
  std::size_t ffn_mult = 2;
  std::size_t projector_factor = 2;

  void validate() const {
    if (d == 0 || heads == 0 || d % heads != 0) {
      throw ArgumentError("model config: d=" + std::to_string(d) +
                          " must be a positive multiple of heads=" + std::to_string(heads));
    }
    if (ffn_mult == 0 || projector_factor == 0) {
      throw ArgumentError("model config: ffn_mult and projector_factor must be >= 1");
    }
  }
};

struct BlockWeights {
  Matrix wq, wk, wv, wo;
  Matrix w1, w2;
};

// Tensor ids: block b of a stack with base id B uses B + 8b + {0..5}.
inline BlockWeights make_block(const ToyModelConfig& cfg, std::uint64_t base_id) {
  const std::size_t d = cfg.d, f = cfg.d * cfg.ffn_mult;
  return {random_weight(d, d, cfg.seed, base_id + 0), random_weight(d, d, cfg.seed, base_id + 1),
          random_weight(d, d, cfg.seed, base_id + 2), random_weight(d, d, cfg.seed, base_id + 3),
          random_weight(d, f, cfg.seed, base_id + 4), random_weight(f, d, cfg.seed, base_id + 5)};
}

inline constexpr std::uint64_t kEncoderBase = 1000;
inline constexpr std::uint64_t kLlmBase = 5000;
inline constexpr std::uint64_t kEmbedId = 1;
inline constexpr std::uint64_t kProjector1Id = 2;
inline constexpr std::uint64_t kProjector2Id = 3;
inline constexpr std::uint64_t kTextId = 4;

/// Parameter-free layer norm, eps 1e-5.
inline Matrix layer_norm(const Matrix& x) {
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(x.cols);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.cols);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t c = 0; c < x.cols; ++c) out(i, c) = (r[c] - mean) * inv;
  }
  return out;
}

/// Sinusoidal position code for index p.
inline void add_position(std::span<double> row, std::size_t p) {
  const std::size_t d = row.size();
  for (std::size_t c = 0; c < d; ++c) {
    const double freq = std::pow(10000.0, -static_cast<double>(2 * (c / 2)) / static_cast<double>(d));
    const double a = static_cast<double>(p) * freq;
    row[c] += (c % 2 == 0) ? std::sin(a) : std::cos(a);
  }
}

/// Row-wise softmax of q k^T / sqrt(dh); causal rows only see j <= i.
inline Matrix attention_weights(const Matrix& q, const Matrix& k, bool causal) {
  const std::size_t n = q.rows;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lim = causal ? i + 1 : n;
    double mx = -1e300;
    for (std::size_t j = 0; j < lim; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols; ++c) s += q(i, c) * k(j, c);
      a(i, j) = s * scale;
      mx = std::max(mx, a(i, j));
    }
    double z = 0.0;
    for (std::size_t j = 0; j < lim; ++j) {
      a(i, j) = std::exp(a(i, j) - mx);
      z += a(i, j);
    }
    for (std::size_t j = 0; j < lim; ++j) a(i, j) /= z;
    for (std::size_t j = lim; j < n; ++j) a(i, j) = 0.0;
  }
  return a;
}

inline Matrix head_slice(const Matrix& x, std::size_t head, std::size_t dh) {
  Matrix out(x.rows, dh);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t c = 0; c < dh; ++c) out(i, c) = x(i, head * dh + c);
  }
  return out;
}

/// Multi-head self-attention with value enhancement: every head computes
/// A (V + log s); heads are concatenated and projected by wo.
inline Matrix self_attention(const Matrix& x, std::span<const double> sizes, const BlockWeights& w,
                             std::size_t heads, bool causal) {
  const std::size_t n = x.rows, d = x.cols, dh = d / heads;
  const Matrix q = matmul(x, w.wq), k = matmul(x, w.wk), v = matmul(x, w.wv);
  Matrix concat(n, d);
  for (std::size_t h = 0; h < heads; ++h) {
    const Matrix a = attention_weights(head_slice(q, h, dh), head_slice(k, h, dh), causal);
    const Matrix o = oim::value_enhance(a, head_slice(v, h, dh), sizes);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dh; ++c) concat(i, h * dh + c) = o(i, c);
    }
  }
  return matmul(concat, w.wo);
}

inline Matrix feed_forward(const Matrix& x, const BlockWeights& w) {
  Matrix h = matmul(x, w.w1);
  for (auto& v : h.v) v = v > 0.0 ? v : 0.0;
  return matmul(h, w.w2);
}

/// Pre-norm block: x + attn(ln x), then + ffn(ln .).
inline Matrix block_forward(const Matrix& x, std::span<const double> sizes, const BlockWeights& w,
                            std::size_t heads, bool causal) {
  if (x.rows == 0) return x;
  Matrix h = self_attention(layer_norm(x), sizes, w, heads, causal);
  for (std::size_t i = 0; i < h.v.size(); ++i) h.v[i] += x.v[i];
  Matrix f = feed_forward(layer_norm(h), w);
  for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] += h.v[i];
  return f;
}

}  // namespace luvc::model
