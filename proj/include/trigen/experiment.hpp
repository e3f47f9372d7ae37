// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_EXPERIMENT_HPP_
#define TRIGEN_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trigen/augment.hpp"
#include "trigen/backdoor.hpp"
#include "trigen/classifier.hpp"
#include "trigen/data.hpp"
#include "trigen/gen_training.hpp"
#include "trigen/unet.hpp"

namespace trigen {

enum class Method { kOurs, kClba, kGrtba };
Method parse_method(const std::string& name);
std::string to_string(Method method);

// Bound used when a config leaves epsilon out: the generator bound for ours,
// the FGSM step for CLBA and the noise amplitude for GRTBA.
double default_epsilon(Method method);

struct StripDefenseConfig {
  int64_t n_overlays = 100;
  // Number of validation images screened (clean and triggered each).
  int64_t samples = 500;
};

struct DefensesConfig {
  std::optional<StripDefenseConfig> strip;
  std::optional<AugmentationPolicy> augment;
};

struct DatasetConfig {
  DatasetProfile profile = DatasetProfile::kCifar10;
  std::filesystem::path root;
  // Render the built-in shapes dataset into `root` when it is missing.
  bool synthetic = false;
  SyntheticDatasetSpec synthetic_spec;
};

struct ClassifierConfig {
  ClassifierSpec spec;
  PretrainConfig pretrain;
  // Use this checkpoint stem instead of pretraining.
  std::optional<std::filesystem::path> checkpoint;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  int64_t target_class = 0;
  Method method = Method::kOurs;
  double epsilon = 25.0 / 255.0;
  double lambda = 0.05;
  GenTrainConfig generator;
  GeneratorArchitecture generator_architecture;
  ClassifierConfig classifier;
  // "desk-random" or the checkpoint stem of an exported network.
  std::string perceptual = "desk-random";
  ImplantConfig implant;
  int64_t patch_size = 0;  // 0 picks the size from the resolution
  DefensesConfig defenses;
  uint64_t seed = 0;
  std::filesystem::path output_dir = "runs";
  // Shared artifacts (clean model, generators); defaults to output_dir/cache.
  std::optional<std::filesystem::path> cache_dir;

  // Parses a TOML document, or JSON when the file ends in .json. Throws
  // Error(kConfig) for malformed or invalid configs.
  static ExperimentConfig load(const std::filesystem::path& path);
  // The raw document of a config file as JSON, before validation.
  static nlohmann::json read_document(const std::filesystem::path& path);
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Fully resolved form; seeds of sub-configs follow the experiment seed.
  nlohmann::json to_json() const;
  // Copies the experiment seed and epsilon into the sub-configs.
  void resolve();
  void validate() const;
  // SHA-256 of the resolved JSON without output and cache locations.
  std::string hash() const;
  std::filesystem::path run_dir() const { return output_dir / hash(); }
  std::filesystem::path cache() const { return cache_dir ? *cache_dir : output_dir / "cache"; }
};

enum class Stage { kTrainGenerator, kPoison, kImplant, kEvaluate, kDefendStrip, kDefendAugment };
std::string to_string(Stage stage);

struct RunManifest {
  std::string config_hash;
  std::string status;  // "running", "completed" or "failed"
  std::string last_completed_stage;
  std::string error;
  std::map<std::string, std::string> artifacts;
  std::string started_at;
  std::string finished_at;
  std::string toolkit_version;
  std::filesystem::path run_dir;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::filesystem::path& run_dir);
};

// Runs the method pipeline up to and including `until` (everything when
// unset), persisting artifacts under cfg.run_dir(). Stages whose artifacts
// already exist are reused. Errors propagate after the manifest is written
// with status "failed".
RunManifest run_experiment(ExperimentConfig cfg, std::optional<Stage> until = std::nullopt);

// The toolkit version string compiled into the library.
const char* toolkit_version();

// Clean classifier for the config, trained once per (dataset, spec, pretrain
// settings) and cached.
ClassifierModel clean_model_for(const ExperimentConfig& cfg, const DatasetSplit& split);
DatasetSplit dataset_for(const ExperimentConfig& cfg);

}  // namespace trigen

#endif  // TRIGEN_EXPERIMENT_HPP_
