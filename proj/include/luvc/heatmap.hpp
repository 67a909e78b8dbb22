// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/grid_io.hpp"
#include "luvc/image.hpp"
#include "luvc/spectral.hpp"

namespace luvc::heatmap {

struct Heatmap {
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<double> values;  // in [0, 1]
};

/// Min-max normalisation; a constant field maps to 0.5 everywhere.
inline Heatmap normalize(std::size_t h, std::size_t w, std::span<const double> raw) {
  if (raw.size() != h * w) {
    throw ShapeError("heatmap: " + std::to_string(raw.size()) + " values for a " +
                     std::to_string(h) + "x" + std::to_string(w) + " map");
  }
  Heatmap m{h, w, std::vector<double>(raw.size(), 0.5)};
  if (raw.empty()) return m;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (*hi > *lo) {
    for (std::size_t i = 0; i < raw.size(); ++i) m.values[i] = (raw[i] - *lo) / (*hi - *lo);
  }
  return m;
}

/// Writes the token energies as a P5 image, one pixel per token. When
/// `mask_path` is non-empty a second P5 marks kept tokens 255, pruned 0.
inline void emit_energy_heatmap(std::size_t h, std::size_t w, const spectral::EnergyRanking& ranking,
                                const std::string& path, const std::string& mask_path = {}) {
  const auto m = normalize(h, w, ranking.energies);
  io::write_file(path, image::encode_pgm(w, h, m.values));
  if (!mask_path.empty()) {
    std::vector<double> mask(h * w, 0.0);
    for (std::size_t i : ranking.kept) {
      if (i >= mask.size()) throw ShapeError("heatmap: kept index outside the map");
      mask[i] = 1.0;
    }
    io::write_file(mask_path, image::encode_pgm(w, h, mask));
  }
}

inline Heatmap load_heatmap(const std::string& path) {
  const auto img = image::load_pnm(path);
  if (img.channels != 1) throw FormatError("heatmap: expected a grayscale PGM");
  return {img.height, img.width, img.pixels};
}

}  // namespace luvc::heatmap
