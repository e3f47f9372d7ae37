// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_COMPARE_HPP_
#define TRIGEN_COMPARE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trigen/metrics.hpp"
#include "trigen/plot.hpp"

namespace trigen {

struct ComparisonRow {
  std::string label;  // e.g. "ours eps=25 lambda=0.05"
  std::string method;
  std::string config_hash;
  double epsilon_255 = 0.0;
  double lambda = 0.0;
  uint64_t seed = 0;
  // Stealth and effectiveness columns, in table order.
  double lpips = 0.0;
  std::optional<double> psnr;
  double linf = 0.0;
  double asr = 0.0;
  double ba = 0.0;
  // Extra columns for the epsilon table.
  double fr = 0.0;
  double asr_clean = 0.0;
  double fr_clean = 0.0;
};

struct Comparison {
  std::string profile;
  std::vector<ComparisonRow> rows;         // input order
  std::vector<EpsilonRow> epsilon_sweep;   // ours runs at lambda of the first ours run, by epsilon
  std::vector<RateSeries> rate_series;     // per method, sorted by lambda
};

// Reads report.json of every run directory. Needs at least two runs, all of
// the same dataset profile (Error(kConfig) otherwise).
Comparison compare_runs(const std::vector<std::filesystem::path>& run_dirs);

// Writes comparison.csv, epsilon_sweep.csv, rate_sweep.csv, rate_plot.png and
// a copy of every STRIP histogram into `out`.
void write_comparison(const Comparison& comparison, const std::vector<std::filesystem::path>& run_dirs,
                      const std::filesystem::path& out);

// Table rendered as text, one run per line.
std::string format_comparison_table(const Comparison& comparison);

}  // namespace trigen

#endif  // TRIGEN_COMPARE_HPP_
