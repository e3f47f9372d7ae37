// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/baselines.hpp"

#include <cmath>

#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"

namespace trigen {

namespace {

torch::Generator seeded(uint64_t seed) {
  auto g = at::make_generator<at::CPUGeneratorImpl>(seed);
  return g;
}

void check_batch(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3) throw Error(ErrorKind::kShape, "expected a [N, 3, H, W] batch");
}

}  // namespace

PatchTrigger PatchTrigger::random(int64_t size, uint64_t seed) {
  if (size < 1) throw Error(ErrorKind::kConfig, "patch size must be >= 1");
  return {torch::rand({3, size, size}, seeded(seed), torch::kFloat32)};
}

int64_t PatchTrigger::default_size(Resolution r) {
  return std::max<int64_t>(1, std::llround(50.0 / 224.0 * static_cast<double>(std::min(r.height, r.width))));
}

void PatchTrigger::save(const std::filesystem::path& path) const { save_tensors(path, {{"pattern", pattern}}); }

PatchTrigger PatchTrigger::load(const std::filesystem::path& path) {
  auto t = load_tensors(path);
  if (!t.count("pattern")) throw Error(ErrorKind::kInitialization, "no pattern in " + path.string());
  return {t.at("pattern")};
}

GlobalNoiseTrigger GlobalNoiseTrigger::sample(Resolution r, double epsilon, uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::kConfig, "epsilon must lie in [0, 1]");
  auto u = torch::rand({3, r.height, r.width}, seeded(seed), torch::kFloat32);
  return {((u * 2.0 - 1.0) * epsilon).clamp(-epsilon, epsilon), epsilon, seed};
}

void GlobalNoiseTrigger::save(const std::filesystem::path& path) const {
  save_tensors(path, {{"noise", noise},
                      {"epsilon", torch::tensor(epsilon, torch::kFloat64)},
                      {"seed", torch::tensor(static_cast<int64_t>(seed), torch::kLong)}});
}

GlobalNoiseTrigger GlobalNoiseTrigger::load(const std::filesystem::path& path) {
  auto t = load_tensors(path);
  if (!t.count("noise") || !t.count("epsilon")) throw Error(ErrorKind::kInitialization, "no noise in " + path.string());
  return {t.at("noise"), t.at("epsilon").item<double>(),
          t.count("seed") ? static_cast<uint64_t>(t.at("seed").item<int64_t>()) : 0};
}

torch::Tensor fgsm_perturb(const ClassifierModel& model, const torch::Tensor& images, const torch::Tensor& labels,
                           double eps) {
  check_batch(images);
  if (images.size(0) != labels.size(0)) throw Error(ErrorKind::kShape, "image and label counts differ");
  if (eps == 0.0 || images.size(0) == 0) return images.clone();
  model.set_training(false);
  constexpr int64_t kChunk = 128;
  std::vector<torch::Tensor> parts;
  for (int64_t start = 0; start < images.size(0); start += kChunk) {
    const auto end = std::min(start + kChunk, images.size(0));
    auto x = images.slice(0, start, end).detach().clone().set_requires_grad(true);
    auto loss = torch::cross_entropy_loss(model.logits(x), labels.slice(0, start, end),
                                          /*weight=*/{}, at::Reduction::Sum);
    auto grad = torch::autograd::grad({loss}, {x})[0];
    parts.push_back((x.detach() + eps * grad.sign()).clamp(0.0, 1.0));
  }
  return torch::cat(parts);
}

LabeledImage fgsm_perturb(const ClassifierModel& model, const LabeledImage& image, double eps) {
  auto x = fgsm_perturb(model, image.pixels.unsqueeze(0), torch::tensor({image.label}, torch::kLong), eps);
  return {x.squeeze(0), image.label};
}

torch::Tensor apply_patch(const torch::Tensor& images, const PatchTrigger& patch) {
  check_batch(images);
  const auto h = patch.height();
  const auto w = patch.width();
  if (h > images.size(2) || w > images.size(3)) throw Error(ErrorKind::kShape, "patch is larger than the image");
  auto out = images.clone();
  out.slice(2, images.size(2) - h).slice(3, images.size(3) - w).copy_(patch.pattern.to(images.dtype()).unsqueeze(0).expand({images.size(0), 3, h, w}));
  return out;
}

LabeledImage apply_patch(const LabeledImage& image, const PatchTrigger& patch) {
  return {apply_patch(image.pixels.unsqueeze(0), patch).squeeze(0), image.label};
}

torch::Tensor clba_poison(const ClassifierModel& model, const torch::Tensor& images, const torch::Tensor& labels,
                          double eps, const PatchTrigger& patch) {
  return apply_patch(fgsm_perturb(model, images, labels, eps), patch);
}

torch::Tensor grtba_poison(const torch::Tensor& images, const GlobalNoiseTrigger& trigger) {
  check_batch(images);
  if (images.sizes().slice(1) != trigger.noise.sizes()) throw Error(ErrorKind::kShape, "noise shape differs from image shape");
  return (images + trigger.noise.to(images.dtype()).unsqueeze(0)).clamp(0.0, 1.0);
}

LabeledImage grtba_poison(const LabeledImage& image, const GlobalNoiseTrigger& trigger) {
  return {grtba_poison(image.pixels.unsqueeze(0), trigger).squeeze(0), image.label};
}

}  // namespace trigen
