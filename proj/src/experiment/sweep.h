// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_EXPERIMENT_SWEEP_H_
#define MUTE_EXPERIMENT_SWEEP_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "experiment/config.h"

namespace mute::experiment {

inline constexpr const char* kResultsFile = "results.tsv";
inline constexpr const char* kSummaryFile = "summary.tsv";
inline constexpr const char* kTableFile = "summary.txt";

struct SweepCell {
  Variant variant = Variant::kMuteL;
  double ratio = 0.0;
  std::uint64_t seed = 1;
  double wer_clean = 0.0;
  double wer_noisy = 0.0;
  double valid_wer = 0.0;
  std::size_t best_step = 0;
  std::size_t text_steps = 0;
  std::size_t steps = 0;
  double seconds = 0.0;  // wall time of the cell task; not written out
};

struct Spread {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SweepRow {
  Variant variant = Variant::kMuteL;
  double ratio = 0.0;
  std::size_t seeds = 0;
  Spread clean;
  Spread noisy;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // variant-major, then ratio, then seed
  std::vector<SweepRow> rows;    // one per (variant, ratio)
  std::vector<double> stage1_seconds;  // per seed, in sweep seed order
};

// Per seed: stage 1 once, then stage 2, decode and score of every
// (variant, ratio) cell on both test splits. Cells run on up to
// [experiment] jobs threads; each has its own model, rng and directory, so
// the results do not depend on the thread count. Errors name the failing
// cell.
SweepResult cmd_sweep(ExperimentConfig config, const std::string& out_dir,
                      std::ostream* progress = nullptr);

std::vector<SweepRow> aggregate(const std::vector<SweepCell>& cells,
                                const std::vector<Variant>& variants,
                                const std::vector<double>& ratios);

std::string render_results(const std::vector<SweepCell>& cells);
std::vector<SweepCell> parse_results(const std::string& text);
std::string render_summary(const std::vector<SweepRow>& rows);
// Aligned text table, one row per (variant, ratio), clean and noisy
// columns as mean [min, max] in percent.
std::string render_table(const std::vector<SweepRow>& rows);

std::string cell_name(Variant variant, double ratio);

}  // namespace mute::experiment

#endif  // MUTE_EXPERIMENT_SWEEP_H_
