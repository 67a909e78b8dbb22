// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Numerical check that repeated attention averaging drains the
// high-frequency part of a signal: for a strictly positive row-stochastic A,
// ||HC[A^t z]|| / ||DC[A^t z]|| -> 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/matrix.hpp"

namespace luvc::theory {

/// k = 0 Fourier projection: every entry is the mean.
inline std::vector<double> dc_component(const std::vector<double>& z) {
  if (z.empty()) throw ArgumentError("dc_component: empty vector");
  double s = 0.0;
  for (double v : z) s += v;
  return std::vector<double>(z.size(), s / static_cast<double>(z.size()));
}

inline std::vector<double> hc_component(const std::vector<double>& z) {
  auto dc = dc_component(z);
  std::vector<double> hc(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) hc[i] = z[i] - dc[i];
  return hc;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct SmoothingTrace {
  std::vector<double> ratios;  // t = 0..t_max
  std::size_t t_max = 0;
};

inline constexpr double kMinDc = 1e-12;

inline double hc_dc_ratio(const std::vector<double>& z) {
  const auto dc = dc_component(z);
  if (std::abs(dc[0]) < kMinDc) {
    throw ArgumentError("smoothing_trace: DC component vanished (|mean| < 1e-12)");
  }
  return norm2(hc_component(z)) / norm2(dc);
}

inline void require_positive_stochastic(const Matrix& a) {
  if (a.rows != a.cols || a.rows == 0) throw ShapeError("smoothing_trace: A must be square");
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
      if (!(a(i, j) > 0.0)) {
        throw ArgumentError("smoothing_trace: A must be strictly positive (A[" +
                            std::to_string(i) + "," + std::to_string(j) + "])");
      }
      s += a(i, j);
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ArgumentError("smoothing_trace: row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

/// Iterates z <- A z for t = 1..t_max and records the HC/DC norm ratio.
inline SmoothingTrace smoothing_trace(const Matrix& a, std::vector<double> z, std::size_t t_max) {
  require_positive_stochastic(a);
  if (z.size() != a.rows) throw ShapeError("smoothing_trace: z length differs from A");
  SmoothingTrace tr;
  tr.t_max = t_max;
  tr.ratios.reserve(t_max + 1);
  tr.ratios.push_back(hc_dc_ratio(z));
  std::vector<double> next(z.size());
  for (std::size_t t = 1; t <= t_max; ++t) {
    for (std::size_t i = 0; i < a.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * z[j];
      next[i] = s;
    }
    z.swap(next);
    tr.ratios.push_back(hc_dc_ratio(z));
  }
  return tr;
}

/// First index whose ratio drops below ratios[0]; the trace is expected to
/// keep falling from there on. Returns t_max + 1 if it never drops.
inline std::size_t decay_onset(const SmoothingTrace& tr) {
  for (std::size_t t = 1; t < tr.ratios.size(); ++t) {
    if (tr.ratios[t] < tr.ratios[0]) return t;
  }
  return tr.ratios.size();
}

/// Softmax of iid normal logits scaled by `temperature`: a strictly positive
/// row-stochastic matrix shaped like an attention map.
inline Matrix random_attention(std::size_t n, std::uint64_t seed, double temperature = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -1e300;
    std::vector<double> logits(n);
    for (auto& l : logits) {
      l = normal(rng) * temperature;
      mx = std::max(mx, l);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = std::exp(logits[j] - mx);
      s += a(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= s;
  }
  return a;
}

inline Matrix uniform_attention(std::size_t n) {
  return Matrix(n, n, std::vector<double>(n * n, 1.0 / static_cast<double>(n)));
}

}  // namespace luvc::theory
