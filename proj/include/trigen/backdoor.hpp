// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_BACKDOOR_HPP_
#define TRIGEN_BACKDOOR_HPP_

#include <array>
#include <cstdint>
#include <optional>

#include <nlohmann/json.hpp>

#include "trigen/augment.hpp"
#include "trigen/classifier.hpp"
#include "trigen/data.hpp"
#include "trigen/trigger.hpp"

namespace trigen {

struct ImplantConfig {
  int64_t batch_size = 100;
  int64_t epochs = 1;
  double lr = 1e-4;
  std::array<double, 2> adam_betas{0.5, 0.999};
  uint64_t seed = 0;
  // When set, every training batch is augmented (after triggers were applied).
  std::optional<AugmentationPolicy> augmentation;

  void validate() const;
  nlohmann::json to_json() const;
  static ImplantConfig from_json(const nlohmann::json& j);
};

// Fine-tunes every layer of a copy of `pretrained` on d_prime.train and
// returns the backdoor model. The input model is left untouched.
ClassifierModel implant(const ClassifierModel& pretrained, const DatasetSplit& d_prime, const ImplantConfig& config);

// Prediction of `model` on the image with its generated trigger applied.
int64_t activate(const ClassifierModel& model, const LabeledImage& image, const TriggerGenerator& generator);

}  // namespace trigen

#endif  // TRIGEN_BACKDOOR_HPP_
