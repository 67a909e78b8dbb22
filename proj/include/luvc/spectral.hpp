// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Spectrum pruning: transform a visual token sequence along the token axis,
// low-pass it with a Hamming-tapered mask, return to the token domain, and
// keep the tokens whose filtered representation carries the most energy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/fft.hpp"
#include "luvc/tensor.hpp"

namespace luvc::spectral {

enum class FilterMode {
  // Taper 0.54 - 0.46 cos(2 pi k / (N-1)) on bins k <= sigma_t, zero above.
  // Conjugate bins are dropped too, so the filtered signal is complex.
  kAsWritten,
  // Pass band mirrored around DC, taper peaks at 1 on DC. Real in, real out.
  kSymmetric,
};

inline std::string_view to_string(FilterMode m) {
  return m == FilterMode::kAsWritten ? "as-written" : "symmetric";
}

inline FilterMode parse_filter_mode(std::string_view s) {
  if (s == "as-written") return FilterMode::kAsWritten;
  if (s == "symmetric") return FilterMode::kSymmetric;
  throw ArgumentError("unknown filter mode '" + std::string(s) +
                      "' (expected as-written or symmetric)");
}

struct SpectrumFilter {
  std::size_t n = 0;
  std::size_t sigma_t = 0;
  FilterMode mode = FilterMode::kAsWritten;
  std::vector<double> coeffs;
};

struct EnergyRanking {
  std::vector<double> energies;
  std::vector<std::size_t> kept;  // ascending token indices
};

namespace detail {

inline void transform_channels(ComplexSequence& z, bool inverse, unsigned threads) {
  if (z.n == 0 || z.d == 0) return;
  const fft::Plan plan(z.n);
  auto work = [&](std::size_t c0, std::size_t c1) {
    std::vector<fft::cplx> buf(z.n);
    for (std::size_t c = c0; c < c1; ++c) {
      for (std::size_t k = 0; k < z.n; ++k) buf[k] = {z.re[k * z.d + c], z.im[k * z.d + c]};
      if (inverse) {
        plan.inverse(buf);
      } else {
        plan.forward(buf);
      }
      for (std::size_t k = 0; k < z.n; ++k) {
        z.re[k * z.d + c] = buf[k].real();
        z.im[k * z.d + c] = buf[k].imag();
      }
    }
  };
  // Channels are independent, so the split never changes a single result bit.
  const std::size_t t = std::clamp<std::size_t>(threads, 1, z.d);
  if (t == 1) {
    work(0, z.d);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (z.d + t - 1) / t;
  for (std::size_t c0 = 0; c0 < z.d; c0 += chunk) {
    pool.emplace_back(work, c0, std::min(z.d, c0 + chunk));
  }
}

}  // namespace detail

/// Per-channel DFT along the token axis. Layout of the result is bin-major:
/// re[k * d + c].
inline ComplexSequence dft_forward(const TokenSequence& seq, unsigned threads = 1) {
  if (seq.n() == 0) throw ShapeError("dft_forward: empty sequence");
  ComplexSequence z(seq.n(), seq.d());
  std::copy(seq.data().begin(), seq.data().end(), z.re.begin());
  detail::transform_channels(z, false, threads);
  return z;
}

inline ComplexSequence dft_inverse(const ComplexSequence& freq, unsigned threads = 1) {
  ComplexSequence z = freq;
  detail::transform_channels(z, true, threads);
  return z;
}

inline SpectrumFilter make_filter(std::size_t n, std::size_t sigma_t, FilterMode mode) {
  if (n == 0 || sigma_t >= n) {
    throw ArgumentError("make_filter: sigma_t=" + std::to_string(sigma_t) +
                        " out of range for n=" + std::to_string(n));
  }
  SpectrumFilter f{n, sigma_t, mode, std::vector<double>(n, 0.0)};
  if (mode == FilterMode::kAsWritten) {
    // n == 1 leaves the (N-1) denominator at zero; the only bin is DC.
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (std::size_t k = 0; k <= sigma_t; ++k) {
      f.coeffs[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / denom);
    }
  } else {
    const double span = static_cast<double>(sigma_t + 1);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t dist = std::min(k, n - k);
      if (dist <= sigma_t) {
        f.coeffs[k] = 0.54 + 0.46 * std::cos(std::numbers::pi * static_cast<double>(dist) / span);
      }
    }
  }
  return f;
}

/// Cutoff bin for a cutoff expressed as a fraction of the token count.
inline std::size_t sigma_from_ratio(double sigma_ratio, std::size_t n) {
  if (!(sigma_ratio > 0.0 && sigma_ratio <= 1.0)) {
    throw ArgumentError("sigma_ratio must lie in (0, 1]");
  }
  const double c = std::ceil(sigma_ratio * static_cast<double>(n)) - 1.0;
  return c < 0.0 ? 0 : std::min(static_cast<std::size_t>(c), n == 0 ? 0 : n - 1);
}

inline ComplexSequence apply_filter(const ComplexSequence& freq, const SpectrumFilter& filt) {
  if (freq.n != filt.n) {
    throw ShapeError("apply_filter: spectrum has " + std::to_string(freq.n) +
                     " bins, filter has " + std::to_string(filt.n));
  }
  ComplexSequence out = freq;
  for (std::size_t k = 0; k < freq.n; ++k) {
    const double m = filt.coeffs[k];
    for (std::size_t c = 0; c < freq.d; ++c) {
      out.re[k * freq.d + c] *= m;
      out.im[k * freq.d + c] *= m;
    }
  }
  return out;
}

/// L2 norm of each token's complex feature vector.
inline std::vector<double> token_energy(const ComplexSequence& filtered) {
  std::vector<double> e(filtered.n, 0.0);
  for (std::size_t i = 0; i < filtered.n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < filtered.d; ++c) {
      const double re = filtered.re[i * filtered.d + c];
      const double im = filtered.im[i * filtered.d + c];
      acc += re * re + im * im;
    }
    e[i] = std::sqrt(acc);
  }
  return e;
}

/// Indices of the `keep` largest energies, lower index first on ties,
/// returned in ascending index order.
inline std::vector<std::size_t> top_k_in_order(const std::vector<double>& energies,
                                               std::size_t keep) {
  if (keep > energies.size()) throw ArgumentError("top_k: keep exceeds token count");
  std::vector<std::size_t> idx(energies.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (energies[a] != energies[b]) return energies[a] > energies[b];
                      return a < b;
                    });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Keeps rows `kept` (ascending) of `seq`, carrying their original positions.
inline TokenSequence gather(const TokenSequence& seq, const std::vector<std::size_t>& kept) {
  std::vector<double> data;
  data.reserve(kept.size() * seq.d());
  std::vector<std::size_t> pos;
  pos.reserve(kept.size());
  for (std::size_t i : kept) {
    auto r = seq.row(i);
    data.insert(data.end(), r.begin(), r.end());
    pos.push_back(seq.positions()[i]);
  }
  return TokenSequence(kept.size(), seq.d(), std::move(data), std::move(pos),
                       seq.source_length());
}

struct SpuResult {
  TokenSequence tokens;
  EnergyRanking ranking;
};

struct SpuOptions {
  double sigma_ratio = 0.25;
  FilterMode mode = FilterMode::kAsWritten;
  unsigned threads = 1;
};

/// Spectrum pruning unit. The filtered signal is only used for scoring; the
/// surviving tokens keep their original features and order.
inline SpuResult spu_prune(const TokenSequence& seq, std::size_t keep, const SpuOptions& opt = {}) {
  if (keep > seq.n()) {
    throw ArgumentError("spu_prune: keep=" + std::to_string(keep) + " exceeds " +
                        std::to_string(seq.n()) + " tokens");
  }
  if (!(opt.sigma_ratio > 0.0 && opt.sigma_ratio <= 1.0)) {
    throw ArgumentError("spu_prune: sigma_ratio must lie in (0, 1]");
  }
  if (seq.n() == 0) return {seq, {}};

  const auto filt = make_filter(seq.n(), sigma_from_ratio(opt.sigma_ratio, seq.n()), opt.mode);
  const auto spectrum = dft_forward(seq, opt.threads);
  const auto filtered = dft_inverse(apply_filter(spectrum, filt), opt.threads);
  EnergyRanking ranking{token_energy(filtered), {}};
  ranking.kept = top_k_in_order(ranking.energies, keep);
  if (keep == seq.n()) return {seq, std::move(ranking)};
  return {gather(seq, ranking.kept), std::move(ranking)};
}

}  // namespace luvc::spectral
