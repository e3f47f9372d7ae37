// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support.hpp"
#include "trigen/backdoor.hpp"

namespace trigen {
namespace {

using testing::error_kind_of;

DatasetSplit toy_split(int64_t classes, int64_t per_class, uint64_t seed) {
  torch::manual_seed(static_cast<int64_t>(seed));
  std::vector<int64_t> labels;
  for (int64_t c = 0; c < classes; ++c) labels.insert(labels.end(), per_class, c);
  const auto n = static_cast<int64_t>(labels.size());
  // Class-dependent brightness so the toy classifier has something to learn.
  auto lab = torch::tensor(labels, torch::kFloat32).view({n, 1, 1, 1});
  auto images = (torch::rand({n, 3, 8, 8}) * 0.3 + lab / static_cast<double>(classes) * 0.7).clamp(0.0, 1.0);
  DatasetSplit s;
  s.train = ImageSet(images, labels);
  s.val = s.train.subset([&] {
    std::vector<int64_t> idx;
    for (int64_t i = 0; i < n; i += 2) idx.push_back(i);
    return idx;
  }());
  for (int64_t c = 0; c < classes; ++c) s.class_names.push_back("c" + std::to_string(c));
  s.resolution = {8, 8};
  return s;
}

ImplantConfig quick_implant() {
  ImplantConfig c;
  c.batch_size = 10;
  c.epochs = 2;
  c.lr = 1e-2;
  c.seed = 3;
  return c;
}

TEST(Implant, LeavesTheInputModelUntouched) {
  const ClassifierModel clean(testing::toy_spec(4, {8, 8}), 1);
  const auto before = clean.weights_hash();
  const auto split = toy_split(4, 10, 2);
  const auto backdoor = implant(clean, split, quick_implant());
  EXPECT_EQ(clean.weights_hash(), before);
  EXPECT_NE(backdoor.weights_hash(), before);
  EXPECT_EQ(backdoor.provenance(), Provenance::kBackdoor);
  EXPECT_EQ(backdoor.parent_hash(), before);
  EXPECT_EQ(clean.provenance(), Provenance::kClean);
}

TEST(Implant, ClassCountMismatchIsConfigError) {
  const ClassifierModel clean(testing::toy_spec(4, {8, 8}), 1);
  const auto split = toy_split(3, 10, 2);
  EXPECT_EQ(error_kind_of([&] { implant(clean, split, quick_implant()); }), ErrorKind::kConfig);
}

TEST(Implant, Deterministic) {
  const ClassifierModel clean(testing::toy_spec(4, {8, 8}), 1);
  const auto split = toy_split(4, 10, 2);
  EXPECT_EQ(implant(clean, split, quick_implant()).weights_hash(), implant(clean, split, quick_implant()).weights_hash());
}

TEST(Implant, IdentityAugmentationMatchesPlainFineTuning) {
  const ClassifierModel clean(testing::toy_spec(4, {8, 8}), 1);
  const auto split = toy_split(4, 10, 2);
  auto cfg = quick_implant();
  const auto plain = implant(clean, split, cfg);
  cfg.augmentation = AugmentationPolicy::identity();
  EXPECT_EQ(implant(clean, split, cfg).weights_hash(), plain.weights_hash());
  cfg.augmentation = AugmentationPolicy{};
  EXPECT_NE(implant(clean, split, cfg).weights_hash(), plain.weights_hash());
}

TEST(Implant, EmptyPoisonPlanEqualsCleanFineTuning) {
  const ClassifierModel clean(testing::toy_spec(4, {8, 8}), 1);
  const auto split = toy_split(4, 10, 2);
  const auto plan = make_poison_plan(split, 1, 0.0, 4);
  EXPECT_TRUE(plan.indices.empty());
  const TriggerGenerator g([] {
    GeneratorArchitecture a;
    a.depth = 2;
    a.base_channels = 4;
    a.input_resolution = {8, 8};
    return a;
  }(), 0.1, 2);
  const auto d_prime = build_poisoned_dataset(split, plan, g);
  EXPECT_TRUE(torch::equal(d_prime.train.images(), split.train.images()));
  EXPECT_EQ(implant(clean, d_prime, quick_implant()).weights_hash(),
            implant(clean, split, quick_implant()).weights_hash());
}

TEST(Implant, ConfigValidationAndJson) {
  auto cfg = quick_implant();
  cfg.augmentation = AugmentationPolicy{};
  const auto back = ImplantConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  cfg.batch_size = 0;
  EXPECT_EQ(error_kind_of([&] { cfg.validate(); }), ErrorKind::kConfig);
  cfg = quick_implant();
  cfg.lr = -1.0;
  EXPECT_EQ(error_kind_of([&] { cfg.validate(); }), ErrorKind::kConfig);
}

TEST(Activate, MatchesPredictionOnTriggeredInput) {
  const ClassifierModel model(testing::toy_spec(4, {8, 8}), 6);
  GeneratorArchitecture a;
  a.depth = 2;
  a.base_channels = 4;
  a.input_resolution = {8, 8};
  const TriggerGenerator g(a, 0.2, 8);
  for (int i = 0; i < 5; ++i) {
    LabeledImage x{torch::rand({3, 8, 8}), 0};
    const auto triggered = apply_trigger(x.pixels.unsqueeze(0), g.triggers(x.pixels.unsqueeze(0)));
    EXPECT_EQ(activate(model, x, g), model.predict(triggered).item<int64_t>());
  }
}

}  // namespace
}  // namespace trigen
