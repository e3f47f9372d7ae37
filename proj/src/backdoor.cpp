// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/backdoor.hpp"

#include "trigen/error.hpp"
#include "trigen/log.hpp"

namespace trigen {

void ImplantConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::kConfig, "implant epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "implant batch_size must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kConfig, "implant lr must be positive");
  for (double b : adam_betas) {
    if (!(b >= 0.0 && b < 1.0)) throw Error(ErrorKind::kConfig, "implant adam betas must lie in [0, 1)");
  }
  if (augmentation) augmentation->validate();
}

nlohmann::json ImplantConfig::to_json() const {
  nlohmann::json j{{"batch_size", batch_size},
                   {"epochs", epochs},
                   {"lr", lr},
                   {"adam_betas", adam_betas},
                   {"seed", seed},
                   {"augmentation", nullptr}};
  if (augmentation) j["augmentation"] = augmentation->to_json();
  return j;
}

ImplantConfig ImplantConfig::from_json(const nlohmann::json& j) {
  ImplantConfig c;
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.adam_betas = j.value("adam_betas", c.adam_betas);
    c.seed = j.value("seed", c.seed);
    if (j.contains("augmentation") && !j.at("augmentation").is_null()) {
      c.augmentation = AugmentationPolicy::from_json(j.at("augmentation"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed implant config: ") + e.what());
  }
  c.validate();
  return c;
}

ClassifierModel implant(const ClassifierModel& pretrained, const DatasetSplit& d_prime, const ImplantConfig& config) {
  config.validate();
  if (pretrained.class_count() != d_prime.class_count()) {
    throw Error(ErrorKind::kConfig, "model has " + std::to_string(pretrained.class_count()) + " classes but the dataset has " +
                                        std::to_string(d_prime.class_count()));
  }
  ClassifierModel model = pretrained.clone();
  FitOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch_size;
  options.lr = config.lr;
  options.betas = config.adam_betas;
  options.seed = config.seed;
  if (config.augmentation && !config.augmentation->is_identity()) {
    const AugmentationPolicy policy = *config.augmentation;
    const uint64_t seed = config.seed;
    options.transform = [policy, seed](const torch::Tensor& images, uint64_t step) {
      return augment_batch(images, policy, seed * 1000003ULL + step);
    };
  }
  log::info("implanting: ", d_prime.train.size(), " images, ", config.epochs, " epoch(s)",
            config.augmentation ? " with augmentation" : "");
  fit_classifier(model, d_prime.train, options);
  model.set_training(false);
  model.set_provenance(Provenance::kBackdoor, pretrained.weights_hash());
  return model;
}

int64_t activate(const ClassifierModel& model, const LabeledImage& image, const TriggerGenerator& generator) {
  return model.predict(apply_trigger(image, generate_trigger(generator, image)));
}

}  // namespace trigen
