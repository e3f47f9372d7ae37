// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "trigen/error.hpp"
#include "trigen/log.hpp"
#include "trigen/trigger.hpp"

namespace fs = std::filesystem;

namespace trigen {

DatasetProfile parse_profile(const std::string& name) {
  if (name == "imagenette-160" || name == "imagenette") return DatasetProfile::kImagenette160;
  if (name == "cifar10") return DatasetProfile::kCifar10;
  throw Error(ErrorKind::kConfig, "unknown dataset profile '" + name + "'");
}

std::string to_string(DatasetProfile profile) {
  return profile == DatasetProfile::kImagenette160 ? "imagenette-160" : "cifar10";
}

Resolution profile_resolution(DatasetProfile profile) {
  return profile == DatasetProfile::kImagenette160 ? Resolution{224, 224} : Resolution{32, 32};
}

void DatasetSplit::validate() const {
  if (train.empty() || val.empty()) throw Error(ErrorKind::kStructure, "train and val splits must be non-empty");
  if (train.resolution() != resolution || val.resolution() != resolution) {
    throw Error(ErrorKind::kStructure, "all images must be " + to_string(resolution));
  }
  const auto c = class_count();
  for (const auto* set : {&train, &val}) {
    for (auto label : set->labels()) {
      if (label < 0 || label >= c) throw Error(ErrorKind::kStructure, "label out of range");
    }
  }
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ImageSet load_split(const fs::path& split_dir, const std::vector<std::string>& class_names,
                    Resolution resolution, ResizeMode mode) {
  std::vector<std::pair<fs::path, int64_t>> files;
  for (int64_t c = 0; c < static_cast<int64_t>(class_names.size()); ++c) {
    const auto class_dir = split_dir / class_names[c];
    if (!fs::is_directory(class_dir)) {
      throw Error(ErrorKind::kStructure, "missing class directory " + class_dir.string());
    }
    for (auto& f : sorted_entries(class_dir, false)) files.emplace_back(f, c);
  }
  auto images = torch::empty({static_cast<int64_t>(files.size()), 3, resolution.height, resolution.width});
  std::vector<int64_t> labels;
  labels.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    images[static_cast<int64_t>(i)].copy_(read_image(files[i].first, resolution, mode));
    labels.push_back(files[i].second);
  }
  return ImageSet(images, std::move(labels));
}

}  // namespace

DatasetSplit load_dataset(const fs::path& root, DatasetProfile profile) {
  if (!fs::is_directory(root)) throw Error(ErrorKind::kDatasetNotFound, "no dataset at " + root.string());
  for (const char* split : {"train", "val"}) {
    if (!fs::is_directory(root / split)) {
      throw Error(ErrorKind::kDatasetNotFound, "missing split directory " + (root / split).string());
    }
  }
  std::vector<std::string> class_names;
  for (auto& d : sorted_entries(root / "train", true)) class_names.push_back(d.filename().string());
  std::vector<std::string> val_names;
  for (auto& d : sorted_entries(root / "val", true)) val_names.push_back(d.filename().string());
  if (static_cast<int64_t>(class_names.size()) != kProfileClassCount) {
    throw Error(ErrorKind::kStructure, "profile " + to_string(profile) + " expects " +
                                           std::to_string(kProfileClassCount) + " classes, found " +
                                           std::to_string(class_names.size()));
  }
  if (val_names != class_names) throw Error(ErrorKind::kStructure, "train and val class directories differ");

  DatasetSplit split;
  split.class_names = class_names;
  split.resolution = profile_resolution(profile);
  const auto mode = profile == DatasetProfile::kImagenette160 ? ResizeMode::kShortSideCenterCrop : ResizeMode::kNone;
  split.train = load_split(root / "train", class_names, split.resolution, mode);
  split.val = load_split(root / "val", class_names, split.resolution, mode);
  split.validate();
  log::info("loaded ", to_string(profile), " from ", root.string(), ": ", split.train.size(), " train / ",
            split.val.size(), " val");
  return split;
}

std::vector<int64_t> count_images_on_disk(const fs::path& root, const std::string& split) {
  std::vector<int64_t> counts;
  for (auto& d : sorted_entries(root / split, true)) {
    counts.push_back(static_cast<int64_t>(sorted_entries(d, false).size()));
  }
  return counts;
}

GeneratorDataset build_generator_dataset(const DatasetSplit& split, int64_t target_class, uint64_t seed) {
  const auto c = split.class_count();
  if (target_class < 0 || target_class >= c) {
    throw Error(ErrorKind::kInvalidTarget, "target class " + std::to_string(target_class) + " not in [0, " +
                                               std::to_string(c) + ")");
  }
  if (c < 2) throw Error(ErrorKind::kInsufficientData, "need at least one non-target class");
  auto target = split.train.indices_of(target_class);
  if (target.empty()) throw Error(ErrorKind::kInsufficientData, "no train images of the target class");
  const int64_t per_class = static_cast<int64_t>(target.size()) / (c - 1);

  std::mt19937_64 rng(seed);
  std::vector<int64_t> nontarget;
  for (int64_t k = 0; k < c; ++k) {
    if (k == target_class) continue;
    auto pool = split.train.indices_of(k);
    if (static_cast<int64_t>(pool.size()) < per_class || pool.empty()) {
      const auto name = k < static_cast<int64_t>(split.class_names.size()) ? split.class_names[k] : std::to_string(k);
      throw Error(ErrorKind::kInsufficientData, "class '" + name + "' has " + std::to_string(pool.size()) +
                                                    " train images, need " + std::to_string(std::max<int64_t>(per_class, 1)));
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(per_class);
    std::sort(pool.begin(), pool.end());
    nontarget.insert(nontarget.end(), pool.begin(), pool.end());
  }

  GeneratorDataset dg;
  dg.target_class = target_class;
  dg.target_images = split.train.subset(target);
  dg.nontarget_images = split.train.subset(nontarget);
  dg.source_indices = target;
  dg.source_indices.insert(dg.source_indices.end(), nontarget.begin(), nontarget.end());
  return dg;
}

nlohmann::json PoisonPlan::to_json() const {
  return {{"target_class", target_class}, {"lambda", lambda}, {"seed", seed}, {"indices", indices}};
}

PoisonPlan PoisonPlan::from_json(const nlohmann::json& j) {
  try {
    PoisonPlan p;
    p.target_class = j.at("target_class").get<int64_t>();
    p.lambda = j.at("lambda").get<double>();
    p.seed = j.at("seed").get<uint64_t>();
    p.indices = j.at("indices").get<std::vector<int64_t>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed poison plan: ") + e.what());
  }
}

void PoisonPlan::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

PoisonPlan PoisonPlan::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kConfig, "poison plan " + path.string() + ": " + e.what());
  }
}

int64_t planned_poison_count(double lambda, int64_t train_size) {
  return static_cast<int64_t>(std::llround(lambda * static_cast<double>(train_size)));
}

PoisonPlan make_poison_plan(const DatasetSplit& split, int64_t target_class, double lambda, uint64_t seed) {
  if (target_class < 0 || target_class >= split.class_count()) {
    throw Error(ErrorKind::kInvalidTarget, "target class " + std::to_string(target_class) + " out of range");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::kConfig, "poisoning rate must lie in [0, 1]");
  auto pool = split.train.indices_of(target_class);
  const auto n = split.train.size();
  const auto count = planned_poison_count(lambda, n);
  if (count > static_cast<int64_t>(pool.size())) {
    throw InfeasibleRateError(lambda, static_cast<double>(pool.size()) / static_cast<double>(n));
  }
  PoisonPlan plan;
  plan.target_class = target_class;
  plan.lambda = lambda;
  plan.seed = seed;
  if (count == 0) {
    log::warn("poisoning rate ", lambda, " selects no images out of ", n, "; the plan is empty");
    return plan;
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  plan.indices = std::move(pool);
  return plan;
}

DatasetSplit build_poisoned_dataset(const DatasetSplit& split, const PoisonPlan& plan, const PoisonFn& poison) {
  std::set<int64_t> seen;
  for (auto i : plan.indices) {
    if (i < 0 || i >= split.train.size()) {
      throw Error(ErrorKind::kPlanMismatch, "plan index " + std::to_string(i) + " outside the train split");
    }
    if (split.train.labels()[i] != plan.target_class) {
      throw Error(ErrorKind::kPlanMismatch, "plan index " + std::to_string(i) + " is not a target-class image");
    }
    if (!seen.insert(i).second) throw Error(ErrorKind::kPlanMismatch, "duplicate plan index " + std::to_string(i));
  }
  DatasetSplit out = split;
  if (plan.indices.empty()) return out;

  auto images = split.train.images().clone();
  auto labels = split.train.labels_tensor();
  auto idx = torch::tensor(plan.indices, torch::kLong);
  constexpr int64_t kChunk = 256;
  for (int64_t start = 0; start < idx.size(0); start += kChunk) {
    auto part = idx.slice(0, start, std::min(start + kChunk, idx.size(0)));
    auto poisoned = poison(images.index_select(0, part), labels.index_select(0, part));
    if (poisoned.sizes() != images.index_select(0, part).sizes()) {
      throw Error(ErrorKind::kShape, "poison function changed the image shape");
    }
    images.index_copy_(0, part, poisoned.to(images.dtype()).clamp(0.0, 1.0));
  }
  out.train = ImageSet(images, split.train.labels());
  return out;
}

DatasetSplit build_poisoned_dataset(const DatasetSplit& split, const PoisonPlan& plan,
                                    const TriggerGenerator& generator) {
  return build_poisoned_dataset(split, plan, [&](const torch::Tensor& images, const torch::Tensor&) {
    return apply_trigger(images, generator.triggers(images));
  });
}

}  // namespace trigen
