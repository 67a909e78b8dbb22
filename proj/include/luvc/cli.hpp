// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Batch command line front end. `run` is the whole program; tools/luvc.cpp
// only forwards argv. Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "luvc/errors.hpp"
#include "luvc/grid_io.hpp"
#include "luvc/heatmap.hpp"
#include "luvc/image.hpp"
#include "luvc/metrics.hpp"
#include "luvc/oim.hpp"
#include "luvc/pipeline.hpp"
#include "luvc/schedule_io.hpp"
#include "luvc/spectral.hpp"
#include "luvc/theory.hpp"

namespace luvc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Loads a token grid from LUVC1, grid JSON, or a PGM/PPM image (featurized).
inline TokenGrid load_tokens(const std::string& path, std::size_t patch, image::Featurizer feat) {
  const auto bytes = io::read_file(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, io::kGridMagic)) {
    return io::decode_grid(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    return image::featurize_image(image::decode_pnm(bytes), patch, feat);
  }
  auto first = std::find_if(bytes.begin(), bytes.end(), [](std::uint8_t c) { return !std::isspace(c); });
  if (first != bytes.end() && *first == '{') {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw FormatError("grid JSON: parse error in " + path);
    return io::grid_from_json(j);
  }
  throw FormatError(path + ": not an LUVC1 grid, grid JSON or PGM/PPM image");
}

inline nlohmann::json load_json(const std::string& path) {
  const auto bytes = io::read_file(path);
  auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) throw FormatError(path + ": invalid JSON");
  return j;
}

inline void emit_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw FormatError("write failed: " + path);
}

struct InputFlags {
  std::string input;
  std::size_t patch = 16;
  std::string featurizer = "dct";

  void add(CLI::App* app, bool required) {
    auto* o = app->add_option("-i,--input", input, "LUVC1 grid, grid JSON, or PGM/PPM image");
    if (required) o->required();
    app->add_option("--patch", patch, "patch size when the input is an image")->check(CLI::PositiveNumber);
    app->add_option("--featurizer", featurizer, "image featurizer")->check(CLI::IsMember({"raw", "dct"}));
  }
  TokenGrid load() const { return load_tokens(input, patch, image::parse_featurizer(featurizer)); }
};

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token compression toolkit: spectrum pruning, orthogonal merging, pipeline simulation", "luvc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "luvc 1.0.0");

  // spectrum
  InputFlags sp_in;
  double sp_sigma = 0.25;
  std::optional<std::size_t> sp_keep;
  std::string sp_mode = "as-written", sp_out, sp_heat, sp_mask;
  auto* sp = app.add_subcommand("spectrum", "Score tokens by low-pass energy and keep the top-k in order");
  sp_in.add(sp, true);
  sp->add_option("--sigma-ratio", sp_sigma, "cutoff as a fraction of the token count")->check(CLI::Range(0.0, 1.0));
  sp->add_option("--keep", sp_keep, "tokens to keep (default: half)");
  sp->add_option("--filter-mode", sp_mode)->check(CLI::IsMember({"as-written", "symmetric"}));
  sp->add_option("-o,--out", sp_out, "JSON result path (default stdout)");
  sp->add_option("--heatmap", sp_heat, "write token energies as PGM");
  sp->add_option("--mask", sp_mask, "write kept-token mask as PGM");

  // merge
  InputFlags mg_in;
  std::size_t mg_m = 2, mg_steps = 1;
  std::optional<std::size_t> mg_mh;
  std::string mg_out;
  auto* mg = app.add_subcommand("merge", "Run orthogonal iterative merging and write the merged grid");
  mg_in.add(mg, true);
  mg->add_option("--m", mg_m, "merges per lane (width axis, and height unless --m-h)");
  mg->add_option("--m-h", mg_mh, "merges per lane on the height axis");
  mg->add_option("--oim-steps", mg_steps, "orthogonal iterations");
  mg->add_option("-o,--out", mg_out, "LUVC1 output path");

  // simulate
  InputFlags sim_in;
  std::string sim_sched, sim_out;
  std::uint64_t sim_seed = 0;
  std::size_t sim_m = 2, sim_steps = 3, sim_l0 = 6, sim_ld = 3, sim_enc = 8, sim_llm = 16, sim_grid = 16;
  double sim_sigma = 0.25;
  std::string sim_mode = "as-written";
  auto* sim = app.add_subcommand("simulate", "Run the toy pipeline and emit a compression report");
  sim_in.add(sim, false);
  sim->add_option("--schedule", sim_sched, "schedule JSON (flags below are ignored when given)");
  sim->add_option("--seed", sim_seed, "model and synthetic-input seed");
  sim->add_option("--m", sim_m);
  sim->add_option("--oim-steps", sim_steps);
  sim->add_option("--l0", sim_l0);
  sim->add_option("--l-delta", sim_ld)->check(CLI::PositiveNumber);
  sim->add_option("--enc-layers", sim_enc);
  sim->add_option("--llm-layers", sim_llm);
  sim->add_option("--grid", sim_grid, "side of the synthetic input grid when --input is absent");
  sim->add_option("--sigma-ratio", sim_sigma)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--filter-mode", sim_mode)->check(CLI::IsMember({"as-written", "symmetric"}));
  sim->add_option("-o,--out", sim_out, "report JSON path (default stdout)");

  // baseline
  InputFlags bl_in;
  std::string bl_kind = "bilinear", bl_out;
  std::size_t bl_h = 0, bl_w = 0;
  std::uint64_t bl_seed = 0;
  auto* bl = app.add_subcommand("baseline", "Shrink a grid with a content-agnostic baseline");
  bl_in.add(bl, true);
  bl->add_option("--kind", bl_kind)->check(CLI::IsMember({"random2d", "nearest", "bilinear", "drop_all"}));
  bl->add_option("--target-h", bl_h);
  bl->add_option("--target-w", bl_w);
  bl->add_option("--seed", bl_seed);
  bl->add_option("-o,--out", bl_out, "LUVC1 output path");

  // theory
  std::size_t th_n = 64, th_t = 50;
  std::uint64_t th_seed = 0;
  double th_temp = 1.0;
  bool th_uniform = false;
  std::string th_out;
  auto* th = app.add_subcommand("theory", "Trace the HC/DC ratio under repeated attention");
  th->add_option("--n", th_n)->check(CLI::PositiveNumber);
  th->add_option("--t", th_t);
  th->add_option("--seed", th_seed);
  th->add_option("--temperature", th_temp, "logit scale of the random attention matrix");
  th->add_flag("--uniform", th_uniform, "use uniform attention instead of a random one");
  th->add_option("-o,--out", th_out, "CSV path (default stdout)");

  // bench
  std::vector<std::size_t> bn_sizes{64, 256, 1024, 4096};
  std::uint64_t bn_seed = 0;
  unsigned bn_threads = 1;
  std::string bn_out;
  auto* bn = app.add_subcommand("bench", "Similarity-evaluation scaling of OIM against 1D matching");
  bn->add_option("--sizes", bn_sizes, "square token counts")->delimiter(',');
  bn->add_option("--seed", bn_seed);
  bn->add_option("--threads", bn_threads)->check(CLI::PositiveNumber);
  bn->add_option("-o,--out", bn_out, "CSV path (default stdout)");

  // featurize
  InputFlags ft_in;
  std::string ft_out;
  auto* ft = app.add_subcommand("featurize", "Convert a PGM/PPM image into an LUVC1 token grid");
  ft_in.add(ft, true);
  ft->add_option("-o,--out", ft_out, "LUVC1 output path")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (sp->parsed()) {
      const auto grid = sp_in.load();
      const auto seq = sequence_from_grid(grid);
      const std::size_t keep = sp_keep.value_or(seq.n() / 2);
      spectral::SpuOptions opt{sp_sigma, spectral::parse_filter_mode(sp_mode), 1};
      const auto res = spectral::spu_prune(seq, keep, opt);
      nlohmann::json j = {{"schema", 1},
                          {"h", grid.h()},
                          {"w", grid.w()},
                          {"n", seq.n()},
                          {"keep", keep},
                          {"sigma_ratio", sp_sigma},
                          {"sigma_t", seq.n() == 0 ? 0 : spectral::sigma_from_ratio(sp_sigma, seq.n())},
                          {"filter_mode", sp_mode},
                          {"kept", res.ranking.kept},
                          {"energies", res.ranking.energies},
                          {"retention_ratio", seq.n() == 0 ? 1.0 : double(keep) / double(seq.n())}};
      emit_text(sp_out, j.dump(2) + "\n", out);
      if (!sp_heat.empty()) heatmap::emit_energy_heatmap(grid.h(), grid.w(), res.ranking, sp_heat, sp_mask);
    } else if (mg->parsed()) {
      const auto grid = mg_in.load();
      TokenGrid g = grid;
      oim::MergeStats stats;
      for (std::size_t s = 0; s < mg_steps; ++s) g = oim::oim_step(g, mg_m, mg_mh.value_or(mg_m), &stats);
      if (!mg_out.empty()) io::save_grid(mg_out, g);
      const double kept = grid.count() == 0 ? 1.0 : double(g.count()) / double(grid.count());
      nlohmann::json j = {{"schema", 1},
                          {"input", {grid.h(), grid.w(), grid.d()}},
                          {"output", {g.h(), g.w(), g.d()}},
                          {"tokens_in", grid.count()},
                          {"tokens_out", g.count()},
                          {"kept_fraction", kept},
                          {"merged_fraction", 1.0 - kept},
                          {"size_total", g.total_size()},
                          {"similarity_ops", stats.similarity_ops}};
      out << j.dump(2) << "\n";
    } else if (sim->parsed()) {
      model::ToyModelConfig cfg;
      cfg.seed = sim_seed;
      pipeline::CompressionSchedule sched;
      if (!sim_sched.empty()) {
        sched = pipeline::schedule_from_json(load_json(sim_sched), cfg);
      } else {
        sched = pipeline::CompressionSchedule::preset(sim_enc, sim_steps, sim_m, sim_llm, sim_l0, sim_ld);
        sched.sigma_ratio = sim_sigma;
        sched.filter_mode = spectral::parse_filter_mode(sim_mode);
      }
      const auto grid = sim_in.input.empty() ? pipeline::synthetic_grid(sim_grid, sim_grid, 16, cfg.seed)
                                             : sim_in.load();
      const auto rep = pipeline::run_experiment(grid, cfg, sched);
      emit_text(sim_out, metrics::to_json(rep).dump(2) + "\n", out);
    } else if (bl->parsed()) {
      const auto grid = bl_in.load();
      const auto kind = pipeline::parse_baseline(bl_kind);
      const auto g = pipeline::baseline_compress(grid, kind, bl_h, bl_w, bl_seed);
      if (!bl_out.empty()) io::save_grid(bl_out, g);
      nlohmann::json j = {{"schema", 1},
                          {"kind", bl_kind},
                          {"input", {grid.h(), grid.w(), grid.d()}},
                          {"output", {g.h(), g.w(), g.d()}}};
      out << j.dump(2) << "\n";
    } else if (th->parsed()) {
      const Matrix a = th_uniform ? theory::uniform_attention(th_n) : theory::random_attention(th_n, th_seed, th_temp);
      std::mt19937_64 rng(th_seed ^ 0x5EEDull);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> z(th_n);
      for (auto& v : z) v = normal(rng);
      const double nz = theory::norm2(z);
      for (auto& v : z) v /= nz;
      const auto tr = theory::smoothing_trace(a, z, th_t);
      std::ostringstream csv;
      csv << "t,ratio\n" << std::setprecision(17);
      for (std::size_t t = 0; t < tr.ratios.size(); ++t) csv << t << "," << tr.ratios[t] << "\n";
      emit_text(th_out, csv.str(), out);
    } else if (bn->parsed()) {
      struct Point {
        std::size_t n, oim_formula, d1_formula, oim_measured, d1_measured;
      };
      auto measure = [&](std::size_t n) {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(n))));
        Point p{n, oim::similarity_op_count(n, oim::MatchMode::kOim),
                oim::similarity_op_count(n, oim::MatchMode::k1d), 0, 0};
        const auto g = pipeline::synthetic_grid(side, side, 8, bn_seed + n);
        oim::MergeStats so, s1;
        (void)oim::oim_step(g, 1, &so);
        (void)oim::merge_1d(sequence_from_grid(g), 1, &s1);
        p.oim_measured = so.similarity_ops;
        p.d1_measured = s1.similarity_ops;
        return p;
      };
      std::vector<std::future<Point>> jobs;
      std::vector<Point> points;
      for (std::size_t i = 0; i < bn_sizes.size(); ++i) {
        const auto policy = bn_threads > 1 ? std::launch::async : std::launch::deferred;
        jobs.push_back(std::async(policy, measure, bn_sizes[i]));
        if (jobs.size() >= bn_threads || i + 1 == bn_sizes.size()) {
          for (auto& f : jobs) points.push_back(f.get());
          jobs.clear();
        }
      }
      std::vector<double> xs, yo, y1;
      std::ostringstream csv;
      csv << "n,oim_ops,oim_measured,ops_1d,ops_1d_measured\n";
      for (const auto& p : points) {
        csv << p.n << "," << p.oim_formula << "," << p.oim_measured << "," << p.d1_formula << ","
            << p.d1_measured << "\n";
        xs.push_back(double(p.n));
        yo.push_back(double(p.oim_measured));
        y1.push_back(double(p.d1_measured));
      }
      if (points.size() >= 2) {
        csv << std::setprecision(6) << "# slope_oim=" << metrics::loglog_slope(xs, yo)
            << " slope_1d=" << metrics::loglog_slope(xs, y1) << "\n";
      }
      emit_text(bn_out, csv.str(), out);
    } else if (ft->parsed()) {
      const auto g = ft_in.load();
      io::save_grid(ft_out, g);
      out << nlohmann::json({{"schema", 1}, {"h", g.h()}, {"w", g.w()}, {"d", g.d()}}).dump(2) << "\n";
    }
  } catch (const Error& e) {
    err << "luvc: error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "luvc: error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::bad_alloc&) {
    err << "luvc: error: out of memory\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace luvc::cli
