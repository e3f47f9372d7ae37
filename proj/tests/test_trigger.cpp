// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support.hpp"
#include "trigen/checkpoint.hpp"
#include "trigen/trigger.hpp"

namespace trigen {
namespace {

using testing::error_kind_of;
using testing::ScratchDir;

GeneratorArchitecture small_arch(int64_t side = 16) {
  GeneratorArchitecture a;
  a.depth = 2;
  a.base_channels = 4;
  a.input_resolution = {side, side};
  return a;
}

TEST(Architecture, Validation) {
  auto a = small_arch();
  EXPECT_NO_THROW(a.validate());
  a.depth = 1;
  EXPECT_EQ(error_kind_of([&] { a.validate(); }), ErrorKind::kConfig);
  a = small_arch(18);
  EXPECT_EQ(error_kind_of([&] { a.validate(); }), ErrorKind::kConfig);
  EXPECT_EQ(GeneratorArchitecture::default_for({224, 224}).depth, 4);
  EXPECT_EQ(GeneratorArchitecture::default_for({224, 224}).base_channels, 64);
  EXPECT_EQ(GeneratorArchitecture::default_for({32, 32}).depth, 3);
  EXPECT_EQ(GeneratorArchitecture::default_for({32, 32}).base_channels, 32);
}

TEST(Generator, ZeroBoundGivesZeroTrigger) {
  const TriggerGenerator g(small_arch(), 0.0, 1);
  auto x = torch::rand({4, 3, 16, 16});
  EXPECT_EQ(g.triggers(x).abs().max().item<float>(), 0.0f);
}

TEST(Generator, BoundHoldsAndShapeIsPreserved) {
  const double eps = 25.0 / 255.0;
  TriggerGenerator g(small_arch(), eps, 2);
  // Scale the weights up so tanh saturates and the bound is actually tested.
  {
    torch::NoGradGuard no_grad;
    for (auto& p : g.network()->parameters()) p.mul_(8.0);
  }
  auto x = torch::rand({32, 3, 16, 16});
  auto d = g.triggers(x);
  EXPECT_EQ(d.sizes(), x.sizes());
  EXPECT_LE(d.abs().max().item<double>(), eps + 1e-6);
}

TEST(Generator, TriggersAreImageSpecific) {
  const TriggerGenerator g(small_arch(), 0.1, 3);
  auto x = torch::rand({2, 3, 16, 16});
  auto d = g.triggers(x);
  EXPECT_FALSE(torch::allclose(d[0], d[1]));
}

TEST(Generator, InferenceIsDeterministic) {
  const TriggerGenerator g(small_arch(), 0.1, 3);
  auto x = torch::rand({3, 3, 16, 16});
  EXPECT_TRUE(torch::equal(g.triggers(x), g.triggers(x)));
  EXPECT_TRUE(torch::allclose(generate_trigger(g, {x[1], 0}), g.triggers(x).select(0, 1), 1e-5, 1e-6));
}

TEST(Generator, ResolutionMismatchIsShapeError) {
  const TriggerGenerator g(small_arch(), 0.1, 3);
  EXPECT_EQ(error_kind_of([&] { g.triggers(torch::rand({1, 3, 8, 8})); }), ErrorKind::kShape);
}

TEST(Generator, SeedFixesInitialWeights) {
  EXPECT_EQ(TriggerGenerator(small_arch(), 0.1, 7).weights_hash(), TriggerGenerator(small_arch(), 0.1, 7).weights_hash());
  EXPECT_NE(TriggerGenerator(small_arch(), 0.1, 7).weights_hash(), TriggerGenerator(small_arch(), 0.1, 8).weights_hash());
}

TEST(Generator, CheckpointRoundTrip) {
  ScratchDir dir;
  TriggerGenerator g(small_arch(), 0.05, 4);
  g.set_training_config_hash("abc");
  g.save(dir / "g");
  const auto manifest = read_json(manifest_path(dir / "g"));
  for (const char* key : {"arch", "epsilon", "seed", "training_config_hash"}) EXPECT_TRUE(manifest.contains(key)) << key;
  const auto h = TriggerGenerator::load(dir / "g");
  EXPECT_EQ(h.weights_hash(), g.weights_hash());
  EXPECT_EQ(h.training_config_hash(), "abc");
  EXPECT_DOUBLE_EQ(h.epsilon(), 0.05);
  auto x = torch::rand({2, 3, 16, 16});
  EXPECT_TRUE(torch::equal(h.triggers(x), g.triggers(x)));
}

TEST(Generator, CloneIsIndependent) {
  TriggerGenerator g(small_arch(), 0.05, 4);
  auto c = g.clone();
  {
    torch::NoGradGuard no_grad;
    for (auto& p : c.network()->parameters()) p.add_(1.0);
  }
  EXPECT_NE(c.weights_hash(), g.weights_hash());
}

TEST(Generator, BoundedTransformGradientMatchesFiniteDifferences) {
  // 8 x 8 toy generator in double precision; checks d(sum(w * bounded(x)))/d(theta).
  auto arch = small_arch(8);
  TriggerGenerator g(arch, 0.2, 5);
  g.network()->to(torch::kFloat64);
  auto x = torch::rand({2, 3, 8, 8}, torch::kFloat64);
  auto w = torch::randn({2, 3, 8, 8}, torch::kFloat64);
  auto objective = [&] { return (g.bounded(x) * w).sum(); };
  auto params = g.network()->parameters();
  g.network()->zero_grad();
  objective().backward();
  int checked = 0;
  int ok = 0;
  torch::NoGradGuard no_grad;
  for (auto& p : params) {
    auto flat = p.view(-1);
    auto grad = p.grad().view(-1);
    for (int64_t i = 0; i < flat.size(0); i += std::max<int64_t>(1, flat.size(0) / 5)) {
      const double h = 1e-6;
      const double orig = flat[i].item<double>();
      flat[i] = orig + h;
      const double up = objective().item<double>();
      flat[i] = orig - h;
      const double down = objective().item<double>();
      flat[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grad[i].item<double>();
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-5});
      ++checked;
      if (std::abs(numeric - analytic) / scale <= 1e-3) ++ok;
    }
  }
  EXPECT_GE(static_cast<double>(ok) / checked, 0.99) << ok << "/" << checked;
}

TEST(ApplyTrigger, ZeroIsIdentityAndLabelKept) {
  LabeledImage x{torch::rand({3, 8, 8}), 4};
  auto y = apply_trigger(x, torch::zeros({3, 8, 8}));
  EXPECT_TRUE(torch::equal(y.pixels, x.pixels));
  EXPECT_EQ(y.label, 4);
}

TEST(ApplyTrigger, SaturatesAtOne) {
  LabeledImage x{torch::ones({3, 8, 8}), 0};
  auto y = apply_trigger(x, torch::full({3, 8, 8}, 0.1));
  EXPECT_TRUE(torch::equal(y.pixels, torch::ones({3, 8, 8})));
}

TEST(ApplyTrigger, NeverMovesMoreThanTheTrigger) {
  for (int trial = 0; trial < 20; ++trial) {
    auto x = torch::rand({3, 8, 8});
    auto d = (torch::rand({3, 8, 8}) - 0.5) * 0.6;
    auto y = apply_trigger(LabeledImage{x, 1}, d);
    EXPECT_LE((y.pixels - x).abs().max().item<float>(), d.abs().max().item<float>() + 1e-7f);
  }
}

TEST(ApplyTrigger, ShapeMismatch) {
  EXPECT_EQ(error_kind_of([] { apply_trigger(LabeledImage{torch::rand({3, 8, 8}), 0}, torch::zeros({3, 4, 4})); }),
            ErrorKind::kShape);
}

}  // namespace
}  // namespace trigen
