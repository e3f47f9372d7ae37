// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_UNET_HPP_
#define TRIGEN_UNET_HPP_

#include <string>

#include <nlohmann/json.hpp>
#include <torch/nn.h>

#include "trigen/image.hpp"

namespace trigen {

enum class NormKind { kInstance, kBatch, kNone };

NormKind parse_norm_kind(const std::string& name);
std::string to_string(NormKind kind);

struct GeneratorArchitecture {
  int64_t depth = 3;            // number of 2x down/up stages
  int64_t base_channels = 32;   // width of the first stage, doubled per stage
  NormKind norm = NormKind::kInstance;
  Resolution input_resolution{32, 32};

  // Throws Error(kConfig) unless depth >= 2 and H, W are divisible by 2^depth.
  void validate() const;
  // Depth 4 / 64 channels at 224x224 and above, depth 3 / 32 channels otherwise.
  static GeneratorArchitecture default_for(Resolution resolution);

  nlohmann::json to_json() const;
  static GeneratorArchitecture from_json(const nlohmann::json& j);
  friend bool operator==(const GeneratorArchitecture&, const GeneratorArchitecture&) = default;
};

// Two 3x3 convolutions, each followed by normalization and ReLU.
class DoubleConvImpl : public torch::nn::Module {
 public:
  DoubleConvImpl(int64_t in_channels, int64_t out_channels, NormKind norm);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::Sequential body_;
};
TORCH_MODULE(DoubleConv);

// Encoder/decoder with concatenated skip connections. Returns the raw
// (unbounded) 3-channel map at the input resolution.
class UNetImpl : public torch::nn::Module {
 public:
  explicit UNetImpl(const GeneratorArchitecture& arch);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::ModuleList encoders_;
  DoubleConv bottleneck_{nullptr};
  torch::nn::ModuleList upsamplers_;
  torch::nn::ModuleList decoders_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(UNet);

}  // namespace trigen

#endif  // TRIGEN_UNET_HPP_
