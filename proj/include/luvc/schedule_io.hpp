// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Schedule documents (see docs/formats.md):
//
// {
//   "schema": 1,
//   "encoder": {"layers": 8, "oim_pairs": [[1, 2], [3, 4], [5, 6]], "m": 2},
//   "llm": {"layers": 16, "l0": 6, "l_delta": 3, "keep_ladder": "linear",
//           "sigma_ratio": 0.25, "filter_mode": "as-written", "drop_all_layer": null},
//   "model": {"d": 32, "heads": 4, "seed": 0, "text_len": 16, "projector_factor": 2}
// }
//
// "m" may be replaced by "m_w" / "m_h". "keep_ladder" is either "linear" or
// an explicit array ending in 0. "model" is optional.

#include <string>

#include <nlohmann/json.hpp>

#include "luvc/errors.hpp"
#include "luvc/pipeline.hpp"

namespace luvc::pipeline {

inline nlohmann::json schedule_to_json(const CompressionSchedule& s, const ToyModelConfig& cfg) {
  nlohmann::json pairs = nlohmann::json::array();
  for (auto [i, j] : s.oim_pairs) pairs.push_back({i, j});
  nlohmann::json ladder = s.keep_ladder ? nlohmann::json(*s.keep_ladder) : nlohmann::json("linear");
  nlohmann::json drop = s.drop_all_layer ? nlohmann::json(*s.drop_all_layer) : nlohmann::json(nullptr);
  return {{"schema", 1},
          {"encoder", {{"layers", s.enc_layers}, {"oim_pairs", pairs}, {"m_w", s.m_w}, {"m_h", s.m_h}}},
          {"llm", {{"layers", s.llm_layers},
                   {"l0", s.l0},
                   {"l_delta", s.l_delta},
                   {"keep_ladder", ladder},
                   {"sigma_ratio", s.sigma_ratio},
                   {"filter_mode", spectral::to_string(s.filter_mode)},
                   {"drop_all_layer", drop}}},
          {"model", {{"d", cfg.d},
                     {"heads", cfg.heads},
                     {"seed", cfg.seed},
                     {"text_len", cfg.text_len},
                     {"ffn_mult", cfg.ffn_mult},
                     {"projector_factor", cfg.projector_factor}}}};
}

/// Reads a schedule and, when present, the model section into `cfg`.
inline CompressionSchedule schedule_from_json(const nlohmann::json& j, ToyModelConfig& cfg) {
  try {
    if (!j.is_object() || j.value("schema", 0) != 1) {
      throw FormatError("schedule JSON: expected an object with \"schema\": 1");
    }
    CompressionSchedule s;
    const auto& enc = j.at("encoder");
    s.enc_layers = enc.at("layers").get<std::size_t>();
    for (const auto& p : enc.value("oim_pairs", nlohmann::json::array())) {
      if (!p.is_array() || p.size() != 2) throw FormatError("schedule JSON: oim_pairs entries must be [i, j]");
      s.oim_pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
    }
    const std::size_t m = enc.value("m", std::size_t{2});
    s.m_w = enc.value("m_w", m);
    s.m_h = enc.value("m_h", m);

    const auto& llm = j.at("llm");
    s.llm_layers = llm.at("layers").get<std::size_t>();
    s.l0 = llm.value("l0", std::size_t{6});
    s.l_delta = llm.value("l_delta", std::size_t{3});
    const auto ladder = llm.value("keep_ladder", nlohmann::json(std::vector<std::size_t>{}));
    if (ladder.is_string()) {
      if (ladder.get<std::string>() != "linear") {
        throw FormatError("schedule JSON: keep_ladder must be \"linear\" or an array");
      }
      s.keep_ladder.reset();
    } else {
      s.keep_ladder = ladder.get<std::vector<std::size_t>>();
    }
    s.sigma_ratio = llm.value("sigma_ratio", 0.25);
    s.filter_mode = spectral::parse_filter_mode(llm.value("filter_mode", std::string("as-written")));
    if (llm.contains("drop_all_layer") && !llm.at("drop_all_layer").is_null()) {
      s.drop_all_layer = llm.at("drop_all_layer").get<std::size_t>();
    }

    if (j.contains("model")) {
      const auto& mj = j.at("model");
      cfg.d = mj.value("d", cfg.d);
      cfg.heads = mj.value("heads", cfg.heads);
      cfg.seed = mj.value("seed", cfg.seed);
      cfg.text_len = mj.value("text_len", cfg.text_len);
      cfg.ffn_mult = mj.value("ffn_mult", cfg.ffn_mult);
      cfg.projector_factor = mj.value("projector_factor", cfg.projector_factor);
    }
    cfg.validate();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("schedule JSON: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("schedule JSON: ") + e.what());
  }
}

}  // namespace luvc::pipeline
