// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_STRIP_HPP_
#define TRIGEN_STRIP_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trigen/classifier.hpp"

namespace trigen {

// Shannon entropy in bits of each row of a [N, C] probability matrix.
torch::Tensor entropy_bits(const torch::Tensor& probabilities);

// Mean prediction entropy (bits) of x superimposed with every overlay:
// clamp(x + overlay, 0, 1). Throws Error(kConfig) if there are no overlays.
double strip_entropy(const ClassifierModel& model, const torch::Tensor& image, const torch::Tensor& overlays);

struct EntropyDistribution {
  std::string label;  // "clean" or "triggered"
  std::vector<double> per_sample_entropy;

  double median() const;
};

struct StripOptions {
  int64_t n_overlays = 100;
  uint64_t seed = 0;
};

// A set of inputs to screen. source[i] is the index of sample i's clean
// image in the overlay pool, or -1; that overlay is never drawn for it.
struct StripInputs {
  torch::Tensor images;
  std::vector<int64_t> source;
};

// Per-sample entropies of both sets. Sample i of either set draws its
// overlays from a stream seeded by (seed, i, source[i]), so identical inputs
// get identical overlays.
std::pair<EntropyDistribution, EntropyDistribution> strip_evaluate(const ClassifierModel& model,
                                                                  const StripInputs& clean,
                                                                  const StripInputs& triggered,
                                                                  const torch::Tensor& overlays,
                                                                  const StripOptions& options);

// A defender's low-entropy rule: reject inputs whose entropy is below the
// threshold. The threshold is chosen from the clean distribution so at most
// `clean_reject_fraction` of clean inputs are rejected.
struct StripThreshold {
  double threshold = 0.0;
  double clean_rejected = 0.0;
  double triggered_rejected = 0.0;
};
StripThreshold strip_threshold(const EntropyDistribution& clean, const EntropyDistribution& triggered,
                               double clean_reject_fraction = 0.10);

struct StripReport {
  StripOptions options;
  EntropyDistribution clean;
  EntropyDistribution triggered;
  StripThreshold threshold;

  nlohmann::json to_json() const;
  static StripReport from_json(const nlohmann::json& j);
};

}  // namespace trigen

#endif  // TRIGEN_STRIP_HPP_
