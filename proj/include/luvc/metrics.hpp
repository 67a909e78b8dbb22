// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "luvc/errors.hpp"

namespace luvc::metrics {

enum class Stage { kEncoder, kLlm };

inline std::string_view to_string(Stage s) { return s == Stage::kEncoder ? "encoder" : "llm"; }

inline Stage parse_stage(std::string_view s) {
  if (s == "encoder") return Stage::kEncoder;
  if (s == "llm") return Stage::kLlm;
  throw FormatError("unknown stage '" + std::string(s) + "'");
}

/// Tokens processed by one layer. `base_visual` is what the same layer would
/// see with every compression hook disabled.
struct LayerCount {
  Stage stage = Stage::kLlm;
  std::size_t layer = 0;
  std::size_t visual = 0;
  std::size_t text = 0;
  std::size_t base_visual = 0;
  bool operator==(const LayerCount&) const = default;
};

using Trace = std::vector<LayerCount>;

/// Leading-order cost of one transformer layer: n^2 d (attention) + n d^2
/// (projections and feed-forward). Constant factors are dropped.
inline std::uint64_t layer_flops(std::uint64_t n, std::uint64_t d) { return n * n * d + n * d * d; }

struct FlopsPair {
  std::uint64_t base = 0;
  std::uint64_t compressed = 0;
  double ratio() const {
    return base == 0 ? 1.0 : static_cast<double>(compressed) / static_cast<double>(base);
  }
};

inline FlopsPair pipeline_flops(const Trace& trace, std::uint64_t d) {
  FlopsPair f;
  for (const auto& e : trace) {
    f.base += layer_flops(e.base_visual + e.text, d);
    f.compressed += layer_flops(e.visual + e.text, d);
  }
  return f;
}

struct Reduction {
  double retention = 1.0;  // L_p / L_o
  double pruning = 0.0;    // 1 - L_p / L_o
};

/// L_p and L_o are the layer-averaged compressed and uncompressed visual
/// counts. Both averages run over the same layers, so the ratio of sums is
/// used directly. A trace with no visual tokens at all reports retention 1.
inline Reduction reduction_ratio(const Trace& trace) {
  if (trace.empty()) throw ArgumentError("reduction_ratio: empty trace");
  double lp = 0.0, lo = 0.0;
  for (const auto& e : trace) {
    lp += static_cast<double>(e.visual);
    lo += static_cast<double>(e.base_visual);
  }
  Reduction r;
  if (lo > 0.0) {
    r.retention = lp / lo;
    r.pruning = 1.0 - r.retention;
  }
  return r;
}

inline Reduction reduction_ratio(const Trace& trace, Stage stage) {
  Trace sub;
  for (const auto& e : trace) {
    if (e.stage == stage) sub.push_back(e);
  }
  if (sub.empty()) return {};
  return reduction_ratio(sub);
}

struct CompressionReport {
  Trace per_layer_counts;
  std::uint64_t flops_base = 0;
  std::uint64_t flops_compressed = 0;
  double retention_ratio = 1.0;
  double pruning_ratio = 0.0;
  Reduction encoder;
  Reduction llm;
  // Encoder-stage merge accounting, reported both ways because "merge x% of
  // the tokens" reads either as the kept or the removed share.
  std::size_t encoder_tokens_in = 0;
  std::size_t encoder_tokens_out = 0;
  std::size_t similarity_ops = 0;
  std::size_t hidden_dim = 0;
  std::map<std::string, double> timings_ms;

  double flops_ratio() const {
    return flops_base == 0 ? 1.0
                           : static_cast<double>(flops_compressed) / static_cast<double>(flops_base);
  }
};

/// Fills the derived fields of a report from its trace.
inline void finalize(CompressionReport& r) {
  const auto f = pipeline_flops(r.per_layer_counts, r.hidden_dim);
  r.flops_base = f.base;
  r.flops_compressed = f.compressed;
  if (!r.per_layer_counts.empty()) {
    const auto all = reduction_ratio(r.per_layer_counts);
    r.retention_ratio = all.retention;
    r.pruning_ratio = all.pruning;
  }
  r.encoder = reduction_ratio(r.per_layer_counts, Stage::kEncoder);
  r.llm = reduction_ratio(r.per_layer_counts, Stage::kLlm);
}

// Stable field names; CI fixtures diff against them.
inline nlohmann::json to_json(const CompressionReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& e : r.per_layer_counts) {
    layers.push_back({{"stage", to_string(e.stage)},
                      {"layer", e.layer},
                      {"visual", e.visual},
                      {"text", e.text},
                      {"base_visual", e.base_visual}});
  }
  const double enc_kept =
      r.encoder_tokens_in == 0
          ? 1.0
          : static_cast<double>(r.encoder_tokens_out) / static_cast<double>(r.encoder_tokens_in);
  return {{"schema", 1},
          {"hidden_dim", r.hidden_dim},
          {"per_layer_counts", layers},
          {"flops_base", r.flops_base},
          {"flops_compressed", r.flops_compressed},
          {"flops_ratio", r.flops_ratio()},
          {"retention_ratio", r.retention_ratio},
          {"pruning_ratio", r.pruning_ratio},
          {"encoder", {{"retention_ratio", r.encoder.retention},
                       {"pruning_ratio", r.encoder.pruning},
                       {"tokens_in", r.encoder_tokens_in},
                       {"tokens_out", r.encoder_tokens_out},
                       {"kept_fraction", enc_kept},
                       {"merged_fraction", 1.0 - enc_kept}}},
          {"llm", {{"retention_ratio", r.llm.retention}, {"pruning_ratio", r.llm.pruning}}},
          {"similarity_ops", r.similarity_ops},
          {"timings_ms", r.timings_ms}};
}

inline CompressionReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<int>() != 1) throw FormatError("report JSON: unsupported schema");
    CompressionReport r;
    r.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    for (const auto& e : j.at("per_layer_counts")) {
      r.per_layer_counts.push_back({parse_stage(e.at("stage").get<std::string>()),
                                    e.at("layer").get<std::size_t>(),
                                    e.at("visual").get<std::size_t>(),
                                    e.at("text").get<std::size_t>(),
                                    e.at("base_visual").get<std::size_t>()});
    }
    r.flops_base = j.at("flops_base").get<std::uint64_t>();
    r.flops_compressed = j.at("flops_compressed").get<std::uint64_t>();
    r.retention_ratio = j.at("retention_ratio").get<double>();
    r.pruning_ratio = j.at("pruning_ratio").get<double>();
    r.encoder = {j.at("encoder").at("retention_ratio").get<double>(),
                 j.at("encoder").at("pruning_ratio").get<double>()};
    r.encoder_tokens_in = j.at("encoder").at("tokens_in").get<std::size_t>();
    r.encoder_tokens_out = j.at("encoder").at("tokens_out").get<std::size_t>();
    r.llm = {j.at("llm").at("retention_ratio").get<double>(),
             j.at("llm").at("pruning_ratio").get<double>()};
    r.similarity_ops = j.at("similarity_ops").get<std::size_t>();
    r.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
}

/// Dataset-level aggregate: per-run ratios averaged over runs.
inline Reduction average_over_runs(const std::vector<CompressionReport>& runs) {
  if (runs.empty()) throw ArgumentError("average_over_runs: no runs");
  Reduction r{0.0, 0.0};
  for (const auto& run : runs) r.retention += run.retention_ratio;
  r.retention /= static_cast<double>(runs.size());
  r.pruning = 1.0 - r.retention;
  return r;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace luvc::metrics
