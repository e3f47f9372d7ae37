// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_TRIGGER_HPP_
#define TRIGEN_TRIGGER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "trigen/image.hpp"
#include "trigen/unet.hpp"

namespace trigen {

// A U-Net whose output is bounded to [-epsilon, epsilon] by epsilon * tanh.
//
// Copies share the underlying network (like torch module holders); use
// clone() for an independent copy. Inference through triggers() is safe to
// call concurrently on a generator nobody is training.
class TriggerGenerator {
 public:
  TriggerGenerator(const GeneratorArchitecture& arch, double epsilon, uint64_t seed);

  const GeneratorArchitecture& architecture() const { return arch_; }
  double epsilon() const { return epsilon_; }
  uint64_t seed() const { return seed_; }
  const std::string& training_config_hash() const { return training_config_hash_; }
  void set_training_config_hash(std::string hash) { training_config_hash_ = std::move(hash); }

  UNet& network() { return net_; }
  const UNet& network() const { return net_; }

  // Differentiable bounded output for a [N, 3, H, W] batch (training path).
  torch::Tensor bounded(const torch::Tensor& images);
  // Inference triggers for a batch: no autograd, chunked, hard-clamped to
  // [-epsilon, epsilon] as a second guard.
  torch::Tensor triggers(const torch::Tensor& images) const;

  TriggerGenerator clone() const;
  std::string weights_hash() const;

  // Writes <stem>.pt and <stem>.json {arch, epsilon, seed, training_config_hash}.
  void save(const std::filesystem::path& stem) const;
  static TriggerGenerator load(const std::filesystem::path& stem);

 private:
  void check_resolution(const torch::Tensor& images) const;

  GeneratorArchitecture arch_;
  double epsilon_;
  uint64_t seed_;
  std::string training_config_hash_;
  UNet net_;
};

// Trigger for a single image, shape [3, H, W].
torch::Tensor generate_trigger(const TriggerGenerator& generator, const LabeledImage& image);

// clamp(x + delta, 0, 1) keeping the label.
LabeledImage apply_trigger(const LabeledImage& image, const torch::Tensor& delta);
// Batched form; shapes must match exactly.
torch::Tensor apply_trigger(const torch::Tensor& images, const torch::Tensor& deltas);

}  // namespace trigen

#endif  // TRIGEN_TRIGGER_HPP_
