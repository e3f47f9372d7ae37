// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_DATA_HPP_
#define TRIGEN_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trigen/image.hpp"

namespace trigen {

enum class DatasetProfile { kImagenette160, kCifar10 };

DatasetProfile parse_profile(const std::string& name);
std::string to_string(DatasetProfile profile);
Resolution profile_resolution(DatasetProfile profile);
inline constexpr int64_t kProfileClassCount = 10;

struct DatasetSplit {
  ImageSet train;
  ImageSet val;
  std::vector<std::string> class_names;
  Resolution resolution;

  int64_t class_count() const { return static_cast<int64_t>(class_names.size()); }
  // Throws Error(kStructure) if the invariants of a split do not hold.
  void validate() const;
};

// Reads <root>/{train,val}/<class_name>/<image>. Class indices follow the
// lexicographic order of the class directory names.
DatasetSplit load_dataset(const std::filesystem::path& root, DatasetProfile profile);

// Number of regular files under <root>/<split>/<class>, counted without decoding.
std::vector<int64_t> count_images_on_disk(const std::filesystem::path& root, const std::string& split);

struct GeneratorDataset {
  ImageSet target_images;
  ImageSet nontarget_images;
  int64_t target_class = 0;
  // Train-split indices the images were taken from, target images first.
  std::vector<int64_t> source_indices;

  int64_t size() const { return target_images.size() + nontarget_images.size(); }
  ImageSet combined() const { return ImageSet::concat(target_images, nontarget_images); }
};

// All target-class train images plus floor(|target| / (C - 1)) images drawn
// uniformly from every non-target class.
GeneratorDataset build_generator_dataset(const DatasetSplit& split, int64_t target_class, uint64_t seed);

struct PoisonPlan {
  int64_t target_class = 0;
  double lambda = 0.0;
  uint64_t seed = 0;
  std::vector<int64_t> indices;  // ascending train-split indices

  nlohmann::json to_json() const;
  static PoisonPlan from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static PoisonPlan load(const std::filesystem::path& path);

  friend bool operator==(const PoisonPlan&, const PoisonPlan&) = default;
};

int64_t planned_poison_count(double lambda, int64_t train_size);

// Selects round(lambda * |train|) target-class images uniformly at random.
PoisonPlan make_poison_plan(const DatasetSplit& split, int64_t target_class, double lambda, uint64_t seed);

// Maps a batch [K, 3, H, W] of clean images (and their labels) to poisoned images.
using PoisonFn = std::function<torch::Tensor(const torch::Tensor& images, const torch::Tensor& labels)>;

// Replaces exactly the planned train images with poison(image); labels and the
// val split are left untouched.
DatasetSplit build_poisoned_dataset(const DatasetSplit& split, const PoisonPlan& plan, const PoisonFn& poison);

class TriggerGenerator;
DatasetSplit build_poisoned_dataset(const DatasetSplit& split, const PoisonPlan& plan,
                                    const TriggerGenerator& generator);

// A procedurally drawn 10-class shape dataset in the cifar10 profile layout,
// for running the pipeline without downloading anything.
struct SyntheticDatasetSpec {
  int64_t train_per_class = 500;
  int64_t val_per_class = 100;
  int64_t image_size = 32;
  uint64_t seed = 1;
};

const std::vector<std::string>& synthetic_class_names();
// Draws one image of the given shape class (index into synthetic_class_names()).
torch::Tensor render_synthetic_image(int64_t shape_class, int64_t image_size, uint64_t seed);
void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticDatasetSpec& spec);

}  // namespace trigen

#endif  // TRIGEN_DATA_HPP_
