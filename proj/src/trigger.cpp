// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/trigger.hpp"

#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"

namespace trigen {

namespace {

UNet make_network(const GeneratorArchitecture& arch, uint64_t seed) {
  torch::manual_seed(seed);
  return UNet(arch);
}

}  // namespace

TriggerGenerator::TriggerGenerator(const GeneratorArchitecture& arch, double epsilon, uint64_t seed)
    : arch_(arch), epsilon_(epsilon), seed_(seed), net_(make_network(arch, seed)) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::kConfig, "epsilon must lie in [0, 1]");
}

void TriggerGenerator::check_resolution(const torch::Tensor& images) const {
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != arch_.input_resolution.height ||
      images.size(3) != arch_.input_resolution.width) {
    throw Error(ErrorKind::kShape, "generator expects [N, 3, " + std::to_string(arch_.input_resolution.height) + ", " +
                                       std::to_string(arch_.input_resolution.width) + "] input");
  }
}

torch::Tensor TriggerGenerator::bounded(const torch::Tensor& images) {
  check_resolution(images);
  return epsilon_ * torch::tanh(net_->forward(images));
}

torch::Tensor TriggerGenerator::triggers(const torch::Tensor& images) const {
  check_resolution(images);
  torch::NoGradGuard no_grad;
  auto& net = const_cast<UNet&>(net_);
  const bool was_training = net->is_training();
  net->eval();
  constexpr int64_t kChunk = 128;
  std::vector<torch::Tensor> parts;
  for (int64_t start = 0; start < images.size(0); start += kChunk) {
    auto chunk = images.slice(0, start, std::min(start + kChunk, images.size(0)));
    parts.push_back((epsilon_ * torch::tanh(net->forward(chunk))).clamp(-epsilon_, epsilon_));
  }
  if (was_training) net->train();
  if (parts.empty()) return torch::zeros_like(images);
  return torch::cat(parts);
}

TriggerGenerator TriggerGenerator::clone() const {
  TriggerGenerator copy(arch_, epsilon_, seed_);
  copy.training_config_hash_ = training_config_hash_;
  copy_module_state(*net_, *copy.net_);
  return copy;
}

std::string TriggerGenerator::weights_hash() const { return module_hash(*net_); }

void TriggerGenerator::save(const std::filesystem::path& stem) const {
  save_tensors(weights_path(stem), module_state(*net_));
  write_json(manifest_path(stem), {{"kind", "trigger_generator"},
                                   {"arch", arch_.to_json()},
                                   {"epsilon", epsilon_},
                                   {"seed", seed_},
                                   {"training_config_hash", training_config_hash_},
                                   {"weights_sha256", weights_hash()}});
}

TriggerGenerator TriggerGenerator::load(const std::filesystem::path& stem) {
  const auto manifest = read_json(manifest_path(stem));
  try {
    TriggerGenerator g(GeneratorArchitecture::from_json(manifest.at("arch")), manifest.at("epsilon").get<double>(),
                       manifest.at("seed").get<uint64_t>());
    g.training_config_hash_ = manifest.value("training_config_hash", "");
    load_module_state(*g.net_, load_tensors(weights_path(stem)));
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "malformed generator manifest " + manifest_path(stem).string() + ": " + e.what());
  }
}

torch::Tensor generate_trigger(const TriggerGenerator& generator, const LabeledImage& image) {
  if (image.pixels.dim() != 3) throw Error(ErrorKind::kShape, "expected a [3, H, W] image");
  return generator.triggers(image.pixels.unsqueeze(0)).squeeze(0);
}

LabeledImage apply_trigger(const LabeledImage& image, const torch::Tensor& delta) {
  if (image.pixels.sizes() != delta.sizes()) throw Error(ErrorKind::kShape, "trigger shape differs from image shape");
  return {(image.pixels + delta).clamp(0.0, 1.0), image.label};
}

torch::Tensor apply_trigger(const torch::Tensor& images, const torch::Tensor& deltas) {
  if (images.sizes() != deltas.sizes()) throw Error(ErrorKind::kShape, "trigger shape differs from image shape");
  return (images + deltas).clamp(0.0, 1.0);
}

}  // namespace trigen
