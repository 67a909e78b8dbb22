// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

namespace luvc::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Iterative radix-2 transform for power-of-two lengths. Twiddles are
/// evaluated directly rather than by recurrence to keep the error at a few
/// ulps for n up to 2^20.
class Radix2 {
 public:
  explicit Radix2(std::size_t n) : n_(n), twiddle_(n / 2), rev_(n) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = cplx(std::cos(a), std::sin(a));
    }
    unsigned bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (unsigned b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      rev_[i] = r;
    }
  }

  std::size_t size() const { return n_; }

  // Unnormalized in both directions.
  void transform(std::span<cplx> x, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < rev_[i]) std::swap(x[i], x[rev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          cplx w = twiddle_[j * stride];
          if (inverse) w = std::conj(w);
          const cplx u = x[start + j];
          const cplx v = x[start + j + half] * w;
          x[start + j] = u + v;
          x[start + j + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<cplx> twiddle_;
  std::vector<std::size_t> rev_;
};

/// Discrete Fourier transform of any length. Powers of two go straight to
/// radix-2; other lengths use Bluestein's chirp-z convolution on a padded
/// power-of-two grid.
class Plan {
 public:
  explicit Plan(std::size_t n) : n_(n) {
    if (n <= 1) return;
    if (is_pow2(n)) {
      radix_ = std::make_unique<Radix2>(n);
      return;
    }
    const std::size_t m = next_pow2(2 * n - 1);
    radix_ = std::make_unique<Radix2>(m);
    chirp_.resize(n);
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
    for (std::size_t k = 0; k < n; ++k) {
      // exp(-i*pi*k^2/n); reduce k^2 mod 2n in integers first.
      const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % two_n;
      const double a = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
      chirp_[k] = cplx(std::cos(a), std::sin(a));
    }
    kernel_.assign(m, cplx(0.0, 0.0));
    kernel_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) {
      kernel_[k] = std::conj(chirp_[k]);
      kernel_[m - k] = std::conj(chirp_[k]);
    }
    radix_->transform(kernel_, false);
  }

  std::size_t size() const { return n_; }

  /// X[k] = sum_n x[n] exp(-2 pi i k n / N).
  void forward(std::span<cplx> x) const { run(x, false); }

  /// x[n] = (1/N) sum_k X[k] exp(+2 pi i k n / N).
  void inverse(std::span<cplx> x) const {
    run(x, true);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : x) v *= scale;
  }

 private:
  void run(std::span<cplx> x, bool inverse) const {
    if (n_ <= 1) return;
    if (chirp_.empty()) {
      radix_->transform(x, inverse);
      return;
    }
    // The inverse is conj(forward(conj(x))).
    const std::size_t m = radix_->size();
    std::vector<cplx> a(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n_; ++k) {
      const cplx v = inverse ? std::conj(x[k]) : x[k];
      a[k] = v * chirp_[k];
    }
    radix_->transform(a, false);
    for (std::size_t k = 0; k < m; ++k) a[k] *= kernel_[k];
    radix_->transform(a, true);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n_; ++k) {
      const cplx v = a[k] * scale * chirp_[k];
      x[k] = inverse ? std::conj(v) : v;
    }
  }

  std::size_t n_;
  std::unique_ptr<Radix2> radix_;
  std::vector<cplx> chirp_;
  std::vector<cplx> kernel_;
};

}  // namespace luvc::fft
