// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_PLOT_HPP_
#define TRIGEN_PLOT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <torch/types.h>

namespace trigen {

struct RateSeries {
  std::string method;
  std::vector<double> lambdas;
  std::vector<double> asr;
  std::vector<double> ba;
};

// ASR (solid, left axis) and BA (dashed, right axis) against the poisoning
// rate, one colour per method.
void write_rate_plot(const std::filesystem::path& path, const std::vector<RateSeries>& series);

// Overlaid histograms of clean and triggered STRIP entropies.
void write_entropy_histogram(const std::filesystem::path& path, const std::vector<double>& clean,
                             const std::vector<double>& triggered, int bins = 30);

// Tiles [3, H, W] images row-major, upscaled by an integer factor.
void write_image_grid(const std::filesystem::path& path, const std::vector<torch::Tensor>& images, int columns,
                      int scale = 4);

}  // namespace trigen

#endif  // TRIGEN_PLOT_HPP_
