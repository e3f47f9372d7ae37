// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_CLASSIFIER_HPP_
#define TRIGEN_CLASSIFIER_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/nn.h>

#include "trigen/data.hpp"
#include "trigen/image.hpp"

namespace trigen {

// Network body of a classifier: normalized [N, 3, H, W] in, [N, C] logits out.
class ClassifierNetImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(torch::Tensor x) = 0;
};

struct ClassifierSpec {
  // "resnet-mini" (3-stage residual CNN for small inputs), "resnet18",
  // "tiny-cnn" or "linear" (toy models for tests and gradient checks).
  std::string architecture = "resnet-mini";
  int64_t class_count = 10;
  int64_t width = 16;
  Resolution input_resolution{32, 32};
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stddev{0.25, 0.25, 0.25};

  void validate() const;
  nlohmann::json to_json() const;
  static ClassifierSpec from_json(const nlohmann::json& j);
};

std::shared_ptr<ClassifierNetImpl> make_classifier_net(const ClassifierSpec& spec);

enum class Provenance { kClean, kBackdoor };
std::string to_string(Provenance p);

// The victim model f: per-channel normalization followed by a network body.
// Normalization constants are fixed when the model is created and travel
// with every copy and checkpoint.
class ClassifierModel {
 public:
  ClassifierModel(const ClassifierSpec& spec, uint64_t seed);
  ClassifierModel(const ClassifierSpec& spec, std::shared_ptr<ClassifierNetImpl> net);

  const ClassifierSpec& spec() const { return spec_; }
  int64_t class_count() const { return spec_.class_count; }
  Provenance provenance() const { return provenance_; }
  const std::string& parent_hash() const { return parent_hash_; }
  void set_provenance(Provenance p, std::string parent_hash);

  ClassifierNetImpl& net() const { return *net_; }
  void set_training(bool training) const;
  // Freezes parameters (requires_grad = false) and switches to inference mode.
  void freeze() const;

  // Raw logits in the current train/eval mode; gradients flow to inputs and
  // (unless frozen) parameters.
  torch::Tensor logits(const torch::Tensor& images) const;
  // Inference-mode logits without autograd, computed in chunks.
  torch::Tensor eval_logits(const torch::Tensor& images) const;
  torch::Tensor probabilities(const torch::Tensor& images) const;
  // Top-1 labels; ties go to the lowest class index.
  torch::Tensor predict(const torch::Tensor& images) const;
  int64_t predict(const LabeledImage& image) const;

  std::string weights_hash() const;
  ClassifierModel clone() const;

  // <stem>.pt plus <stem>.json {architecture, class_count, normalization,
  // provenance, parent_hash}.
  void save(const std::filesystem::path& stem) const;
  static ClassifierModel load(const std::filesystem::path& stem);

 private:
  ClassifierSpec spec_;
  std::shared_ptr<ClassifierNetImpl> net_;
  torch::Tensor mean_;
  torch::Tensor stddev_;
  Provenance provenance_ = Provenance::kClean;
  std::string parent_hash_;
};

// Maps a training batch to an augmented batch; used for augmented fine-tuning.
using BatchTransform = std::function<torch::Tensor(const torch::Tensor& images, uint64_t step)>;

struct FitOptions {
  int64_t epochs = 1;
  int64_t batch_size = 100;
  double lr = 1e-4;
  std::array<double, 2> betas{0.5, 0.999};
  uint64_t seed = 0;
  // Epoch index from which the learning rate is multiplied by 0.1; negative disables.
  int64_t decay_epoch = -1;
  BatchTransform transform;
};

// Cross-entropy training of every parameter with Adam; throws Error(kDivergence)
// if the loss becomes NaN. Returns the mean loss of the last epoch.
double fit_classifier(ClassifierModel& model, const ImageSet& data, const FitOptions& options);

struct PretrainConfig {
  int64_t epochs = 12;
  int64_t batch_size = 64;
  double lr = 1e-3;
  int64_t decay_epoch = 8;
  uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static PretrainConfig from_json(const nlohmann::json& j);
};

// Per-channel mean and standard deviation of a [N, 3, H, W] set.
std::pair<std::array<double, 3>, std::array<double, 3>> channel_statistics(const torch::Tensor& images);

// Trains a clean classifier from scratch on split.train; normalization
// constants are taken from the train images.
ClassifierModel pretrain_classifier(const DatasetSplit& split, ClassifierSpec spec, const PretrainConfig& config);

}  // namespace trigen

#endif  // TRIGEN_CLASSIFIER_HPP_
