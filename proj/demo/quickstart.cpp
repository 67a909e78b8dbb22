// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

// Walks a synthetic 16x16 patch grid through orthogonal merging, spectrum
// pruning and the toy pipeline, printing what each stage keeps.

#include <cstdio>

#include "luvc/luvc.hpp"

int main() {
  using namespace luvc;

  const TokenGrid grid = pipeline::synthetic_grid(16, 16, 8, 7);
  std::printf("input grid        %zux%zu, %zu tokens\n", grid.h(), grid.w(), grid.count());

  TokenGrid merged = grid;
  oim::MergeStats stats;
  for (int step = 0; step < 3; ++step) merged = oim::oim_step(merged, 2, &stats);
  std::printf("after 3 OIM steps %zux%zu, size mass %.0f, %zu similarity evaluations\n", merged.h(),
              merged.w(), merged.total_size(), stats.similarity_ops);

  const TokenSequence seq = sequence_from_grid(merged);
  const auto pruned = spectral::spu_prune(seq, seq.n() / 4, {0.25, spectral::FilterMode::kSymmetric, 1});
  std::printf("spectrum pruning  kept %zu of %zu, first kept index %zu\n", pruned.tokens.n(), seq.n(),
              pruned.ranking.kept.front());

  model::ToyModelConfig cfg;
  const auto sched = pipeline::CompressionSchedule::preset(8, 3, 2, 16, 6, 3);
  const auto rep = pipeline::run_experiment(grid, cfg, sched);
  std::printf("pipeline          pruning ratio %.4f, FLOPs ratio %.4f\n", rep.pruning_ratio, rep.flops_ratio());
  for (const auto& e : rep.per_layer_counts) {
    std::printf("  %-7s layer %2zu  visual %3zu  text %2zu\n", std::string(metrics::to_string(e.stage)).c_str(),
                e.layer, e.visual, e.text);
  }
  return 0;
}
