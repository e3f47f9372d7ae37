// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_PERCEPTUAL_HPP_
#define TRIGEN_PERCEPTUAL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/types.h>

namespace trigen {

// LPIPS distance: a frozen convolutional feature extractor, per-layer
// channel-normalized feature differences, non-negative 1x1 weights, spatial
// averaging, summed over the tapped layers.
//
// The network is described by <stem>.json and its weights live in <stem>.pt.
// Two layouts are produced by the toolkit: "alex" (the published LPIPS
// AlexNet configuration, exported from the reference weights) and
// "desk-random" (a seeded random-feature network for small images that needs
// no downloads). Weights are never trained.
class PerceptualMetric {
 public:
  // Throws Error(kInitialization) if either file is missing or malformed.
  static PerceptualMetric load(const std::filesystem::path& stem);
  // Writes a desk-random network description and weights.
  static void write_desk_random(const std::filesystem::path& stem, uint64_t seed);

  // Per-pair distance for two [N, 3, H, W] batches in [0, 1]; differentiable
  // with respect to both inputs.
  torch::Tensor distance(const torch::Tensor& a, const torch::Tensor& b) const;
  // Mean distance without autograd, computed in chunks.
  double mean_distance(const torch::Tensor& a, const torch::Tensor& b) const;
  // Per-pair distances without autograd.
  torch::Tensor distances(const torch::Tensor& a, const torch::Tensor& b) const;

  // Backbone name plus the SHA-256 of the weights file.
  const std::string& identity() const { return identity_; }
  const std::string& backbone() const { return backbone_; }

  // Casts every weight, e.g. to kFloat64 for finite-difference checks.
  void to(torch::Dtype dtype);

 private:
  struct Layer {
    std::string kind;  // "conv", "relu" or "maxpool"
    int64_t stride = 1;
    int64_t padding = 0;
    int64_t kernel = 0;
    bool tap = false;
    torch::Tensor weight;
    torch::Tensor bias;
  };

  std::vector<torch::Tensor> features(torch::Tensor x) const;

  std::string backbone_;
  std::string identity_;
  std::vector<Layer> layers_;
  std::vector<torch::Tensor> lin_;
  torch::Tensor shift_;
  torch::Tensor scale_;
};

}  // namespace trigen

#endif  // TRIGEN_PERCEPTUAL_HPP_
