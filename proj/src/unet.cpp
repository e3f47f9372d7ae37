// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/unet.hpp"

#include "trigen/error.hpp"

namespace trigen {

NormKind parse_norm_kind(const std::string& name) {
  if (name == "instance") return NormKind::kInstance;
  if (name == "batch") return NormKind::kBatch;
  if (name == "none") return NormKind::kNone;
  throw Error(ErrorKind::kConfig, "unknown norm kind '" + name + "'");
}

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::kInstance: return "instance";
    case NormKind::kBatch: return "batch";
    case NormKind::kNone: return "none";
  }
  return "none";
}

void GeneratorArchitecture::validate() const {
  if (depth < 2) throw Error(ErrorKind::kConfig, "generator depth must be >= 2");
  if (base_channels < 1) throw Error(ErrorKind::kConfig, "generator base_channels must be positive");
  const int64_t factor = int64_t{1} << depth;
  if (input_resolution.height <= 0 || input_resolution.width <= 0 || input_resolution.height % factor != 0 ||
      input_resolution.width % factor != 0) {
    throw Error(ErrorKind::kConfig, "input resolution " + to_string(input_resolution) +
                                        " is not divisible by 2^depth = " + std::to_string(factor));
  }
}

GeneratorArchitecture GeneratorArchitecture::default_for(Resolution resolution) {
  GeneratorArchitecture arch;
  arch.input_resolution = resolution;
  if (std::min(resolution.height, resolution.width) >= 224) {
    arch.depth = 4;
    arch.base_channels = 64;
  }
  return arch;
}

nlohmann::json GeneratorArchitecture::to_json() const {
  return {{"depth", depth},
          {"base_channels", base_channels},
          {"norm_kind", to_string(norm)},
          {"input_resolution", {input_resolution.height, input_resolution.width}}};
}

GeneratorArchitecture GeneratorArchitecture::from_json(const nlohmann::json& j) {
  GeneratorArchitecture a;
  a.depth = j.at("depth").get<int64_t>();
  a.base_channels = j.at("base_channels").get<int64_t>();
  a.norm = parse_norm_kind(j.at("norm_kind").get<std::string>());
  auto r = j.at("input_resolution").get<std::vector<int64_t>>();
  if (r.size() != 2) throw Error(ErrorKind::kConfig, "input_resolution must be [H, W]");
  a.input_resolution = {r[0], r[1]};
  return a;
}

namespace {

void append_norm(torch::nn::Sequential& seq, int64_t channels, NormKind norm) {
  switch (norm) {
    case NormKind::kInstance:
      seq->push_back(torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(channels).affine(true)));
      break;
    case NormKind::kBatch:
      seq->push_back(torch::nn::BatchNorm2d(channels));
      break;
    case NormKind::kNone:
      break;
  }
}

}  // namespace

DoubleConvImpl::DoubleConvImpl(int64_t in_channels, int64_t out_channels, NormKind norm) {
  using torch::nn::Conv2dOptions;
  body_->push_back(torch::nn::Conv2d(Conv2dOptions(in_channels, out_channels, 3).padding(1)));
  append_norm(body_, out_channels, norm);
  body_->push_back(torch::nn::ReLU());
  body_->push_back(torch::nn::Conv2d(Conv2dOptions(out_channels, out_channels, 3).padding(1)));
  append_norm(body_, out_channels, norm);
  body_->push_back(torch::nn::ReLU());
  register_module("body", body_);
}

torch::Tensor DoubleConvImpl::forward(torch::Tensor x) { return body_->forward(x); }

UNetImpl::UNetImpl(const GeneratorArchitecture& arch) {
  arch.validate();
  std::vector<int64_t> widths;
  int64_t in = 3;
  for (int64_t d = 0; d < arch.depth; ++d) {
    const int64_t out = arch.base_channels << d;
    encoders_->push_back(DoubleConv(in, out, arch.norm));
    widths.push_back(out);
    in = out;
  }
  bottleneck_ = DoubleConv(in, in * 2, arch.norm);
  in *= 2;
  for (int64_t d = arch.depth - 1; d >= 0; --d) {
    const int64_t out = widths[d];
    upsamplers_->push_back(torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, out, 2).stride(2)));
    decoders_->push_back(DoubleConv(out * 2, out, arch.norm));
    in = out;
  }
  head_ = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 3, 1));
  register_module("encoders", encoders_);
  register_module("bottleneck", bottleneck_);
  register_module("upsamplers", upsamplers_);
  register_module("decoders", decoders_);
  register_module("head", head_);
}

torch::Tensor UNetImpl::forward(torch::Tensor x) {
  std::vector<torch::Tensor> skips;
  skips.reserve(encoders_->size());
  for (const auto& enc : *encoders_) {
    x = enc->as<DoubleConv>()->forward(x);
    skips.push_back(x);
    x = torch::max_pool2d(x, 2);
  }
  x = bottleneck_->forward(x);
  for (std::size_t i = 0; i < decoders_->size(); ++i) {
    x = upsamplers_[i]->as<torch::nn::ConvTranspose2d>()->forward(x);
    x = decoders_[i]->as<DoubleConv>()->forward(torch::cat({x, skips[skips.size() - 1 - i]}, 1));
  }
  return head_->forward(x);
}

}  // namespace trigen
