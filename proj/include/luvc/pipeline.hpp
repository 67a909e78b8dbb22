// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "luvc/errors.hpp"
#include "luvc/matrix.hpp"
#include "luvc/metrics.hpp"
#include "luvc/model.hpp"
#include "luvc/oim.hpp"
#include "luvc/spectral.hpp"
#include "luvc/tensor.hpp"

namespace luvc::pipeline {

using model::ToyModelConfig;

/// Encoder merge plan plus LLM pruning cascade.
struct CompressionSchedule {
  std::size_t enc_layers = 0;
  // (width layer, height layer); the height layer must directly follow.
  std::vector<std::pair<std::size_t, std::size_t>> oim_pairs;
  std::size_t m_w = 2;
  std::size_t m_h = 2;

  std::size_t llm_layers = 0;
  std::size_t l0 = 6;
  std::size_t l_delta = 3;
  // Keep count after each SPU layer. Unset means a linear ramp from the
  // incoming visual count down to zero, resolved at run time.
  std::optional<std::vector<std::size_t>> keep_ladder = std::vector<std::size_t>{};
  double sigma_ratio = 0.25;
  spectral::FilterMode filter_mode = spectral::FilterMode::kAsWritten;
  // Single-cut baseline: every visual token is dropped after this LLM layer.
  std::optional<std::size_t> drop_all_layer;

  /// Layers l0, l0 + l_delta, ... below llm_layers; empty when the ladder is
  /// explicitly empty.
  std::vector<std::size_t> spu_layers() const {
    std::vector<std::size_t> out;
    if (keep_ladder && keep_ladder->empty()) return out;
    if (l_delta == 0) return out;
    for (std::size_t l = l0; l < llm_layers; l += l_delta) {
      out.push_back(l);
      if (keep_ladder && out.size() == keep_ladder->size()) break;
    }
    return out;
  }

  bool is_width_layer(std::size_t l) const {
    return std::any_of(oim_pairs.begin(), oim_pairs.end(), [&](auto& p) { return p.first == l; });
  }
  bool is_height_layer(std::size_t l) const {
    return std::any_of(oim_pairs.begin(), oim_pairs.end(), [&](auto& p) { return p.second == l; });
  }

  void validate() const {
    std::vector<char> used(enc_layers, 0);
    for (auto [i, j] : oim_pairs) {
      if (j != i + 1) {
        throw ArgumentError("schedule: OIM pair (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") violates height layer = width layer + 1");
      }
      if (j >= enc_layers) throw ArgumentError("schedule: OIM pair beyond encoder depth");
      if (used[i] || used[j]) throw ArgumentError("schedule: OIM pairs overlap");
      used[i] = used[j] = 1;
    }
    if (keep_ladder && !keep_ladder->empty()) {
      if (l_delta == 0) throw ArgumentError("schedule: l_delta must be >= 1");
      const auto& k = *keep_ladder;
      for (std::size_t i = 1; i < k.size(); ++i) {
        if (k[i] >= k[i - 1]) throw ArgumentError("schedule: keep_ladder must strictly decrease");
      }
      if (k.back() != 0) throw ArgumentError("schedule: keep_ladder must end at 0");
      const std::size_t last = l0 + (k.size() - 1) * l_delta;
      if (last >= llm_layers) {
        throw ArgumentError("schedule: " + std::to_string(k.size()) + " SPU layers from l0=" +
                            std::to_string(l0) + " step " + std::to_string(l_delta) +
                            " do not fit in " + std::to_string(llm_layers) + " LLM layers");
      }
    }
    if (!(sigma_ratio > 0.0 && sigma_ratio <= 1.0)) {
      throw ArgumentError("schedule: sigma_ratio must lie in (0, 1]");
    }
    if (drop_all_layer && *drop_all_layer >= llm_layers) {
      throw ArgumentError("schedule: drop_all_layer beyond LLM depth");
    }
  }

  /// Nothing merged, nothing pruned.
  static CompressionSchedule none(std::size_t enc_layers, std::size_t llm_layers) {
    CompressionSchedule s;
    s.enc_layers = enc_layers;
    s.llm_layers = llm_layers;
    return s;
  }

  /// `steps` orthogonal iterations in the middle of the encoder and a linear
  /// cascade to zero starting at l0.
  static CompressionSchedule preset(std::size_t enc_layers, std::size_t steps, std::size_t m,
                                    std::size_t llm_layers, std::size_t l0, std::size_t l_delta) {
    CompressionSchedule s;
    s.enc_layers = enc_layers;
    if (2 * steps > enc_layers) throw ArgumentError("schedule: too many OIM steps for encoder depth");
    const std::size_t first = (enc_layers - 2 * steps) / 2;
    for (std::size_t i = 0; i < steps; ++i) s.oim_pairs.emplace_back(first + 2 * i, first + 2 * i + 1);
    s.m_w = s.m_h = m;
    s.llm_layers = llm_layers;
    s.l0 = l0;
    s.l_delta = l_delta;
    s.keep_ladder.reset();
    return s;
  }
};

/// Linear ramp from `initial` to zero over `layers` pruning steps:
/// keep_i = floor(initial * (layers - 1 - i) / layers). Duplicates from a
/// small `initial` are removed so the ladder stays strictly decreasing.
inline std::vector<std::size_t> linear_ladder(std::size_t initial, std::size_t layers) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t k = initial * (layers - 1 - i) / layers;
    if (out.empty() || k < out.back()) out.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoder

struct EncoderResult {
  TokenGrid grid;
  metrics::Trace trace;
  std::size_t similarity_ops = 0;
};

inline Matrix embed_grid(const TokenGrid& grid, const ToyModelConfig& cfg) {
  const Matrix w = model::random_weight(grid.d(), cfg.d, cfg.seed, model::kEmbedId);
  Matrix x(grid.count(), grid.d(), {grid.data().begin(), grid.data().end()});
  Matrix e = matmul(x, w);
  for (std::size_t i = 0; i < e.rows; ++i) model::add_position(e.row(i), i);
  return e;
}

inline TokenGrid grid_of(const Matrix& x, const TokenGrid& shape) {
  return TokenGrid(shape.h(), shape.w(), x.cols, x.v, {shape.sizes().begin(), shape.sizes().end()});
}

/// Runs the toy encoder. Each layer is attention with value enhancement and a
/// feed-forward block; a width merge follows every width layer and a height
/// merge every height layer.
inline EncoderResult encoder_forward(const TokenGrid& input, const ToyModelConfig& cfg,
                                     const CompressionSchedule& sched) {
  cfg.validate();
  sched.validate();
  std::size_t h = input.h(), w = input.w();
  for (auto [wi, hi] : sched.oim_pairs) {
    (void)wi;
    (void)hi;
    if (w < 2 * sched.m_w || h < 2 * sched.m_h) {
      throw ShapeError("encoder: " + std::to_string(input.h()) + "x" + std::to_string(input.w()) +
                       " grid cannot absorb the scheduled merges");
    }
    w -= sched.m_w;
    h -= sched.m_h;
  }

  EncoderResult res;
  if (input.empty()) {
    res.grid = TokenGrid::empty(cfg.d);
    for (std::size_t l = 0; l < sched.enc_layers; ++l) {
      res.trace.push_back({metrics::Stage::kEncoder, l, 0, 0, 0});
    }
    return res;
  }
  TokenGrid g = grid_of(embed_grid(input, cfg), input);
  const std::size_t base = input.count();
  oim::MergeStats stats;
  oim::MergeOptions opt;
  opt.stats = &stats;
  for (std::size_t l = 0; l < sched.enc_layers; ++l) {
    res.trace.push_back({metrics::Stage::kEncoder, l, g.count(), 0, base});
    const auto blk = model::make_block(cfg, model::kEncoderBase + 8 * l);
    Matrix x(g.count(), g.d(), {g.data().begin(), g.data().end()});
    g = grid_of(model::block_forward(x, g.sizes(), blk, cfg.heads, false), g);
    if (sched.is_width_layer(l)) g = oim::merge_width(g, sched.m_w, opt);
    if (sched.is_height_layer(l)) g = oim::merge_height(g, sched.m_h, opt);
  }
  res.grid = std::move(g);
  res.similarity_ops = stats.similarity_ops;
  return res;
}

// ---------------------------------------------------------------------------
// Projector

/// Folds each factor x factor neighbourhood into one token of dim
/// d * factor^2 (row-major inside the block). Needs an intact grid.
inline TokenSequence projector_pixel_shuffle(const TokenGrid& grid, std::size_t factor) {
  if (factor == 0) throw ArgumentError("projector: factor must be >= 1");
  if (grid.h() % factor != 0 || grid.w() % factor != 0) {
    throw ProjectorIncompatibleError("projector: " + std::to_string(grid.h()) + "x" +
                                     std::to_string(grid.w()) + " grid is not divisible by " +
                                     std::to_string(factor));
  }
  const std::size_t oh = grid.h() / factor, ow = grid.w() / factor, d = grid.d();
  const std::size_t od = d * factor * factor;
  std::vector<double> data;
  data.reserve(oh * ow * od);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      for (std::size_t dr = 0; dr < factor; ++dr) {
        for (std::size_t dc = 0; dc < factor; ++dc) {
          auto t = grid.at(r * factor + dr, c * factor + dc);
          data.insert(data.end(), t.begin(), t.end());
        }
      }
    }
  }
  return TokenSequence(oh * ow, od, std::move(data));
}

/// Pixel shuffle for a token set that only knows its original row-major
/// positions on a source grid `src_w` wide (for example after 1D merging).
/// The tokens must still occupy the same columns in every occupied row;
/// otherwise there is no 2D layout to fold and the call fails.
inline TokenSequence projector_pixel_shuffle(const TokenSequence& tokens, std::size_t src_w,
                                             std::size_t factor) {
  if (src_w == 0) throw ArgumentError("projector: source width must be >= 1");
  std::vector<std::size_t> rows;
  std::vector<std::vector<std::size_t>> cols;
  for (std::size_t p : tokens.positions()) {
    const std::size_t r = p / src_w, c = p % src_w;
    if (rows.empty() || rows.back() != r) {
      rows.push_back(r);
      cols.emplace_back();
    }
    cols.back().push_back(c);
  }
  for (std::size_t i = 1; i < cols.size(); ++i) {
    if (cols[i] != cols[0]) {
      throw ProjectorIncompatibleError(
          "projector: tokens do not form a 2D grid (source row " + std::to_string(rows[i]) +
          " keeps " + std::to_string(cols[i].size()) + " tokens, row " + std::to_string(rows[0]) +
          " keeps " + std::to_string(cols[0].size()) + "); 1D merging destroyed the layout");
    }
  }
  const std::size_t h = rows.size(), w = cols.empty() ? 0 : cols[0].size();
  return projector_pixel_shuffle(
      grid_from_sequence(TokenSequence(tokens.n(), tokens.d(), {tokens.data().begin(), tokens.data().end()}), h, w),
      factor);
}

/// Two-layer MLP from the folded dim to the LLM hidden dim.
inline TokenSequence projector_mlp(const TokenSequence& folded, const ToyModelConfig& cfg) {
  if (folded.empty()) return TokenSequence(cfg.d);
  const Matrix w1 = model::random_weight(folded.d(), cfg.d, cfg.seed, model::kProjector1Id);
  const Matrix w2 = model::random_weight(cfg.d, cfg.d, cfg.seed, model::kProjector2Id);
  Matrix x(folded.n(), folded.d(), {folded.data().begin(), folded.data().end()});
  Matrix h = matmul(x, w1);
  for (auto& v : h.v) v = v > 0.0 ? v : 0.0;
  Matrix y = matmul(h, w2);
  return TokenSequence(folded.n(), cfg.d, std::move(y.v));
}

/// Deterministic stand-in for embedded prompt tokens.
inline TokenSequence synthetic_text(const ToyModelConfig& cfg) {
  model::SplitMix64 rng(model::tensor_seed(cfg.seed, model::kTextId));
  std::vector<double> data(cfg.text_len * cfg.d);
  for (auto& v : data) v = rng.symmetric();
  return TokenSequence(cfg.text_len, cfg.d, std::move(data));
}

// ---------------------------------------------------------------------------
// LLM

struct LlmResult {
  Matrix hidden;  // surviving visual rows first, then text rows
  metrics::Trace trace;
  std::vector<std::vector<std::size_t>> kept_positions;  // per SPU layer
};

/// Resolves the keep ladder for `visual_n` incoming tokens.
inline std::vector<std::size_t> resolve_ladder(const CompressionSchedule& sched, std::size_t visual_n) {
  if (sched.keep_ladder) return *sched.keep_ladder;
  std::size_t layers = 0;
  for (std::size_t l = sched.l0; l < sched.llm_layers && sched.l_delta > 0; l += sched.l_delta) ++layers;
  return linear_ladder(visual_n, layers);
}

/// Runs the toy LLM over [visual; text]. After each SPU layer the visual
/// segment alone is pruned to that layer's keep count; text is untouched.
inline LlmResult llm_forward(const TokenSequence& visual, const TokenSequence& text,
                             const ToyModelConfig& cfg, const CompressionSchedule& sched) {
  cfg.validate();
  if (!visual.empty() && visual.d() != cfg.d) throw ShapeError("llm: visual dim differs from model dim");
  if (!text.empty() && text.d() != cfg.d) throw ShapeError("llm: text dim differs from model dim");

  CompressionSchedule resolved = sched;
  resolved.keep_ladder = resolve_ladder(sched, visual.n());
  resolved.validate();
  const auto& ladder = *resolved.keep_ladder;
  if (!ladder.empty() && !visual.empty() && ladder.front() > visual.n()) {
    throw ArgumentError("llm: keep_ladder starts at " + std::to_string(ladder.front()) +
                        " but only " + std::to_string(visual.n()) + " visual tokens arrive");
  }
  const auto spu_layers = resolved.spu_layers();

  const TokenSequence joined = concat_tokens(visual, text);
  Matrix x(joined.n(), cfg.d, {joined.data().begin(), joined.data().end()});
  for (std::size_t i = 0; i < x.rows; ++i) model::add_position(x.row(i), i);

  // Visual provenance: original indices of the rows still present.
  std::vector<std::size_t> vis_pos(visual.positions().begin(), visual.positions().end());
  const std::size_t t = text.n();
  const spectral::SpuOptions spu{resolved.sigma_ratio, resolved.filter_mode, 1};

  LlmResult res;
  std::size_t next_spu = 0;
  for (std::size_t l = 0; l < resolved.llm_layers; ++l) {
    const std::size_t v = vis_pos.size();
    res.trace.push_back({metrics::Stage::kLlm, l, v, t, visual.n()});
    const auto blk = model::make_block(cfg, model::kLlmBase + 8 * l);
    const std::vector<double> ones(x.rows, 1.0);
    x = model::block_forward(x, ones, blk, cfg.heads, true);

    std::optional<std::size_t> keep;
    if (next_spu < spu_layers.size() && spu_layers[next_spu] == l) {
      keep = std::min(ladder[next_spu], v);
      ++next_spu;
    }
    if (resolved.drop_all_layer && *resolved.drop_all_layer == l) keep = 0;
    if (!keep) continue;

    std::vector<std::size_t> kept_rows;
    if (v > 0) {
      TokenSequence seg(v, cfg.d, {x.v.begin(), x.v.begin() + static_cast<std::ptrdiff_t>(v * cfg.d)});
      kept_rows = spectral::spu_prune(seg, *keep, spu).ranking.kept;
    }
    Matrix nx(kept_rows.size() + t, cfg.d);
    std::vector<std::size_t> npos;
    std::size_t o = 0;
    for (std::size_t r : kept_rows) {
      std::copy_n(x.row(r).begin(), cfg.d, nx.row(o++).begin());
      npos.push_back(vis_pos[r]);
    }
    for (std::size_t r = v; r < v + t; ++r) std::copy_n(x.row(r).begin(), cfg.d, nx.row(o++).begin());
    x = std::move(nx);
    vis_pos = std::move(npos);
    res.kept_positions.push_back(vis_pos);
  }
  res.hidden = std::move(x);
  return res;
}

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineKind { kRandom2d, kNearest, kBilinear, kDropAll };

inline BaselineKind parse_baseline(std::string_view s) {
  if (s == "random2d") return BaselineKind::kRandom2d;
  if (s == "nearest") return BaselineKind::kNearest;
  if (s == "bilinear") return BaselineKind::kBilinear;
  if (s == "drop_all") return BaselineKind::kDropAll;
  throw ArgumentError("unknown baseline '" + std::string(s) +
                      "' (expected random2d, nearest, bilinear or drop_all)");
}

/// Reference compressors that keep the grid shape but ignore token content.
/// Resampling uses centre-aligned coordinates: source = (i + 0.5) * src / dst - 0.5.
/// Output sizes are reset to one; these paths prune or resample, they do not merge.
inline TokenGrid baseline_compress(const TokenGrid& grid, BaselineKind kind, std::size_t target_h,
                                   std::size_t target_w, std::uint64_t seed) {
  if (kind == BaselineKind::kDropAll) return TokenGrid::empty(grid.d());
  if (target_h == 0 || target_w == 0 || target_h > grid.h() || target_w > grid.w()) {
    throw ArgumentError("baseline: target " + std::to_string(target_h) + "x" +
                        std::to_string(target_w) + " invalid for " + std::to_string(grid.h()) +
                        "x" + std::to_string(grid.w()) + " grid");
  }
  const std::size_t d = grid.d();
  std::vector<double> out;
  out.reserve(target_h * target_w * d);

  if (kind == BaselineKind::kRandom2d) {
    // Partial Fisher-Yates over row-major cell indices, then restore order.
    model::SplitMix64 rng(seed);
    std::vector<std::size_t> cells(grid.count());
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
    const std::size_t k = target_h * target_w;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next() % (cells.size() - i));
      std::swap(cells[i], cells[j]);
    }
    cells.resize(k);
    std::sort(cells.begin(), cells.end());
    for (std::size_t c : cells) {
      auto t = grid.at(c / grid.w(), c % grid.w());
      out.insert(out.end(), t.begin(), t.end());
    }
    return TokenGrid(target_h, target_w, d, std::move(out));
  }

  auto src_coord = [](std::size_t i, std::size_t src, std::size_t dst) {
    return (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
  };
  for (std::size_t r = 0; r < target_h; ++r) {
    const double sy = src_coord(r, grid.h(), target_h);
    for (std::size_t c = 0; c < target_w; ++c) {
      const double sx = src_coord(c, grid.w(), target_w);
      if (kind == BaselineKind::kNearest) {
        const auto ny = std::min(grid.h() - 1, static_cast<std::size_t>(std::max(0.0, std::round(sy))));
        const auto nx = std::min(grid.w() - 1, static_cast<std::size_t>(std::max(0.0, std::round(sx))));
        auto t = grid.at(ny, nx);
        out.insert(out.end(), t.begin(), t.end());
        continue;
      }
      const double cy = std::clamp(sy, 0.0, static_cast<double>(grid.h() - 1));
      const double cx = std::clamp(sx, 0.0, static_cast<double>(grid.w() - 1));
      const auto y0 = static_cast<std::size_t>(std::floor(cy));
      const auto x0 = static_cast<std::size_t>(std::floor(cx));
      const std::size_t y1 = std::min(y0 + 1, grid.h() - 1), x1 = std::min(x0 + 1, grid.w() - 1);
      const double fy = cy - static_cast<double>(y0), fx = cx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < d; ++ch) {
        const double top = (1 - fx) * grid.at(y0, x0)[ch] + fx * grid.at(y0, x1)[ch];
        const double bot = (1 - fx) * grid.at(y1, x0)[ch] + fx * grid.at(y1, x1)[ch];
        out.push_back((1 - fy) * top + fy * bot);
      }
    }
  }
  return TokenGrid(target_h, target_w, d, std::move(out));
}

/// Seeded test image stand-in: each channel is a sum of three random 2D
/// sinusoids plus 10% uniform noise, so neighbouring tokens are correlated
/// the way patch features of a natural image are.
inline TokenGrid synthetic_grid(std::size_t h, std::size_t w, std::size_t d, std::uint64_t seed) {
  model::SplitMix64 rng(seed);
  std::vector<double> data(h * w * d);
  for (std::size_t c = 0; c < d; ++c) {
    double fy[3], fx[3], ph[3], amp[3];
    for (int k = 0; k < 3; ++k) {
      fy[k] = rng.uniform() * 0.5;
      fx[k] = rng.uniform() * 0.5;
      ph[k] = rng.uniform() * 2.0 * std::numbers::pi;
      amp[k] = rng.symmetric();
    }
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t col = 0; col < w; ++col) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) {
          v += amp[k] * std::sin(fy[k] * static_cast<double>(r) + fx[k] * static_cast<double>(col) + ph[k]);
        }
        data[(r * w + col) * d + c] = v + 0.1 * rng.symmetric();
      }
    }
  }
  if (h * w == 0) return TokenGrid::empty(d);
  return TokenGrid(h, w, d, std::move(data));
}

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentResult {
  metrics::CompressionReport report;
  TokenGrid encoder_output;
  LlmResult llm;
};

/// Encoder -> pixel-shuffle projector -> LLM with the SPU cascade.
inline ExperimentResult run_experiment_full(const TokenGrid& input, const ToyModelConfig& cfg,
                                            const CompressionSchedule& sched) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  const auto t0 = clock::now();

  ExperimentResult out;
  auto enc = encoder_forward(input, cfg, sched);
  const auto t1 = clock::now();
  const auto folded = enc.grid.empty() ? TokenSequence(cfg.d * cfg.projector_factor * cfg.projector_factor)
                                       : projector_pixel_shuffle(enc.grid, cfg.projector_factor);
  const auto visual = projector_mlp(folded, cfg);
  const auto t2 = clock::now();
  auto llm = llm_forward(visual, synthetic_text(cfg), cfg, sched);
  const auto t3 = clock::now();

  // Without compression the LLM would see the uncompressed grid folded.
  const std::size_t f2 = cfg.projector_factor * cfg.projector_factor;
  const std::size_t llm_base = input.count() / f2;
  auto& rep = out.report;
  rep.hidden_dim = cfg.d;
  rep.per_layer_counts = enc.trace;
  for (auto e : llm.trace) {
    e.base_visual = llm_base;
    rep.per_layer_counts.push_back(e);
  }
  rep.encoder_tokens_in = input.count();
  rep.encoder_tokens_out = enc.grid.count();
  rep.similarity_ops = enc.similarity_ops;
  rep.timings_ms = {{"encoder", ms(t1 - t0)},
                    {"projector", ms(t2 - t1)},
                    {"llm", ms(t3 - t2)},
                    {"total", ms(t3 - t0)}};
  metrics::finalize(rep);
  out.encoder_output = std::move(enc.grid);
  out.llm = std::move(llm);
  return out;
}

inline metrics::CompressionReport run_experiment(const TokenGrid& input, const ToyModelConfig& cfg,
                                                 const CompressionSchedule& sched) {
  return run_experiment_full(input, cfg, sched).report;
}

}  // namespace luvc::pipeline
