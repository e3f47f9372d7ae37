// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_AUGMENT_HPP_
#define TRIGEN_AUGMENT_HPP_

#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>
#include <torch/types.h>

namespace trigen {

// Random rotation, random resized crop and horizontal flip, applied per image.
struct AugmentationPolicy {
  double rotation_degrees = 20.0;               // uniform in [-r, r]
  std::array<double, 2> crop_scale{0.64, 1.0};  // area fraction of the crop
  double hflip_prob = 0.5;

  static AugmentationPolicy identity() { return {0.0, {1.0, 1.0}, 0.0}; }
  bool is_identity() const;
  void validate() const;
  nlohmann::json to_json() const;
  static AugmentationPolicy from_json(const nlohmann::json& j);
};

// Augments a [N, 3, H, W] batch. The random draws depend only on `seed`, so a
// step-derived seed makes augmented training reproducible. Rotated-in corners
// are filled with zeros; crops are resized back to H x W bilinearly.
torch::Tensor augment_batch(const torch::Tensor& images, const AugmentationPolicy& policy, uint64_t seed);

}  // namespace trigen

#endif  // TRIGEN_AUGMENT_HPP_
