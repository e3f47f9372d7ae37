// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

// Checks against a local Imagenette-160 copy; skipped unless IMAGENETTE_ROOT
// points at it.

#include <cstdlib>
#include <numeric>

#include <gtest/gtest.h>

#include "trigen/baselines.hpp"
#include "trigen/data.hpp"
#include "trigen/unet.hpp"

namespace trigen {
namespace {

std::optional<std::filesystem::path> imagenette_root() {
  const char* root = std::getenv("IMAGENETTE_ROOT");
  if (root == nullptr || *root == '\0') return std::nullopt;
  return std::filesystem::path(root);
}

TEST(Imagenette, LoadsEveryImageAtFullResolution) {
  const auto root = imagenette_root();
  if (!root) GTEST_SKIP() << "IMAGENETTE_ROOT is not set";
  const auto split = load_dataset(*root, DatasetProfile::kImagenette160);
  EXPECT_EQ(split.class_count(), 10);
  EXPECT_EQ(split.resolution, (Resolution{224, 224}));
  const auto train = count_images_on_disk(*root, "train");
  const auto val = count_images_on_disk(*root, "val");
  EXPECT_EQ(split.train.size(), std::accumulate(train.begin(), train.end(), int64_t{0}));
  EXPECT_EQ(split.val.size(), std::accumulate(val.begin(), val.end(), int64_t{0}));
  for (int64_t c = 0; c < 10; ++c) {
    EXPECT_EQ(static_cast<int64_t>(split.train.indices_of(c).size()), train[static_cast<std::size_t>(c)]);
  }
}

TEST(Imagenette, FullScaleShapesFit) {
  const auto root = imagenette_root();
  if (!root) GTEST_SKIP() << "IMAGENETTE_ROOT is not set";
  const auto split = load_dataset(*root, DatasetProfile::kImagenette160);
  EXPECT_NO_THROW(GeneratorArchitecture::default_for(split.resolution).validate());
  EXPECT_EQ(PatchTrigger::default_size(split.resolution), 50);
  const auto plan = make_poison_plan(split, 0, 0.05, 0);
  EXPECT_EQ(static_cast<int64_t>(plan.indices.size()), planned_poison_count(0.05, split.train.size()));
  for (auto i : plan.indices) EXPECT_EQ(split.train.labels()[static_cast<std::size_t>(i)], 0);
}

}  // namespace
}  // namespace trigen
