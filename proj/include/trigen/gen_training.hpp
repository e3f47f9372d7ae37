// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_GEN_TRAINING_HPP_
#define TRIGEN_GEN_TRAINING_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trigen/classifier.hpp"
#include "trigen/data.hpp"
#include "trigen/perceptual.hpp"
#include "trigen/trigger.hpp"

namespace trigen {

struct GenTrainConfig {
  double alpha = 1.0;   // weight of the erasure term on target images
  double beta = 1.0;    // weight of the activation term on non-target images
  double gamma = 10.0;  // weight of the perceptual term
  double epsilon = 25.0 / 255.0;
  int64_t batch_size = 30;
  int64_t iterations_per_epoch = 50;
  int64_t epochs = 15;
  double lr = 2e-4;
  std::array<double, 2> adam_betas{0.5, 0.999};
  uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static GenTrainConfig from_json(const nlohmann::json& j);
  // SHA-256 of the canonical JSON form.
  std::string hash() const;
};

struct LossBreakdown {
  double l_target = 0.0;
  double l_nontarget = 0.0;
  double l_lpips = 0.0;
  double l_total = 0.0;
};

// A batch-mean loss term. `empty` marks a batch with no images of that kind;
// the value is then an exact zero so the weighted total still composes.
struct BatchLoss {
  torch::Tensor value;
  bool empty = false;
};

// argmin of the clean model's logits; ties go to the lowest class index.
int64_t least_likely_class(const ClassifierModel& model, const LabeledImage& image);
torch::Tensor least_likely_classes(const ClassifierModel& model, const torch::Tensor& images);

// Mean cross-entropy of crafted target images toward their least-likely classes.
BatchLoss target_loss(const ClassifierModel& model, const torch::Tensor& crafted_targets, const torch::Tensor& y_llc);
// Mean cross-entropy of crafted non-target images toward the target class.
BatchLoss nontarget_loss(const ClassifierModel& model, const torch::Tensor& crafted_nontargets, int64_t target_class);
// Mean perceptual distance over aligned (clean, crafted) pairs.
torch::Tensor perceptual_loss(const PerceptualMetric& metric, const torch::Tensor& clean, const torch::Tensor& crafted);

struct LossTerms {
  BatchLoss target;
  BatchLoss nontarget;
  torch::Tensor lpips;
  torch::Tensor total;

  LossBreakdown values() const;
};

// Full objective for one batch: generator output, trigger application, and the
// three weighted terms. Images are routed to the erasure or activation term by
// label, as in the training algorithm.
LossTerms generator_objective(TriggerGenerator& generator, const ClassifierModel& victim,
                              const PerceptualMetric& metric, const torch::Tensor& images,
                              const torch::Tensor& labels, const torch::Tensor& y_llc, int64_t target_class,
                              const GenTrainConfig& config);

struct StepLog {
  int64_t epoch = 0;
  int64_t step = 0;
  LossBreakdown loss;
};

struct GeneratorTrainingResult {
  TriggerGenerator generator;
  std::vector<StepLog> steps;
  std::vector<LossBreakdown> epoch_means;
};

// Where training writes gen_train_log.csv and gen_epoch_<k> checkpoints.
struct TrainingOutputs {
  std::optional<std::filesystem::path> directory;
};

// Trains a trigger generator against a frozen victim. The victim's weights
// are not modified. Throws Error(kConfig) for an infeasible config and
// Error(kDivergence) if the total loss becomes NaN (after keeping the last
// good epoch checkpoint, when an output directory is set).
GeneratorTrainingResult train_generator(const ClassifierModel& victim, const GeneratorDataset& dg,
                                        const PerceptualMetric& metric, const GenTrainConfig& config,
                                        const GeneratorArchitecture& arch, const TrainingOutputs& outputs = {});

void write_training_log_csv(const std::filesystem::path& path, const std::vector<StepLog>& steps);

}  // namespace trigen

#endif  // TRIGEN_GEN_TRAINING_HPP_
