// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_BASELINES_HPP_
#define TRIGEN_BASELINES_HPP_

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "trigen/classifier.hpp"
#include "trigen/image.hpp"

namespace trigen {

// A fixed square pattern pasted flush into the bottom-right corner.
struct PatchTrigger {
  torch::Tensor pattern;  // [3, h, w], values in [0, 1]

  int64_t height() const { return pattern.size(1); }
  int64_t width() const { return pattern.size(2); }

  // Seeded uniform random RGB pattern.
  static PatchTrigger random(int64_t size, uint64_t seed);
  // 50 px at 224 and 7 px at 32 (the same fraction of the shorter side).
  static int64_t default_size(Resolution r);

  void save(const std::filesystem::path& path) const;
  static PatchTrigger load(const std::filesystem::path& path);
};

// One noise array added to every image.
struct GlobalNoiseTrigger {
  torch::Tensor noise;  // [3, H, W], values in [-epsilon, epsilon]
  double epsilon = 0.0;
  uint64_t seed = 0;

  // Uniform in [-epsilon, epsilon], sampled once from `seed`.
  static GlobalNoiseTrigger sample(Resolution r, double epsilon, uint64_t seed);

  void save(const std::filesystem::path& path) const;
  static GlobalNoiseTrigger load(const std::filesystem::path& path);
};

// One untargeted gradient-sign step on the true-class cross-entropy:
// clamp(x + eps * sign(grad), 0, 1). Works on a [N, 3, H, W] batch.
torch::Tensor fgsm_perturb(const ClassifierModel& model, const torch::Tensor& images, const torch::Tensor& labels,
                           double eps);
LabeledImage fgsm_perturb(const ClassifierModel& model, const LabeledImage& image, double eps);

// Overwrites the bottom-right corner region with the pattern.
torch::Tensor apply_patch(const torch::Tensor& images, const PatchTrigger& patch);
LabeledImage apply_patch(const LabeledImage& image, const PatchTrigger& patch);

// FGSM, then the patch.
torch::Tensor clba_poison(const ClassifierModel& model, const torch::Tensor& images, const torch::Tensor& labels,
                          double eps, const PatchTrigger& patch);
// clamp(x + noise, 0, 1).
torch::Tensor grtba_poison(const torch::Tensor& images, const GlobalNoiseTrigger& trigger);
LabeledImage grtba_poison(const LabeledImage& image, const GlobalNoiseTrigger& trigger);

}  // namespace trigen

#endif  // TRIGEN_BASELINES_HPP_
