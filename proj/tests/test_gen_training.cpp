// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "support.hpp"
#include "trigen/checkpoint.hpp"
#include "trigen/gen_training.hpp"

namespace trigen {
namespace {

using testing::error_kind_of;
using testing::fixed_logits_model;
using testing::ScratchDir;

GeneratorArchitecture arch8() {
  GeneratorArchitecture a;
  a.depth = 2;
  a.base_channels = 4;
  a.input_resolution = {8, 8};
  return a;
}

PerceptualMetric desk_metric(const ScratchDir& dir) {
  PerceptualMetric::write_desk_random(dir / "lpips", 3);
  return PerceptualMetric::load(dir / "lpips");
}

GeneratorDataset toy_generator_dataset(int64_t per_group, int64_t target) {
  torch::manual_seed(11);
  GeneratorDataset dg;
  dg.target_class = target;
  dg.target_images = ImageSet(torch::rand({per_group, 3, 8, 8}), std::vector<int64_t>(per_group, target));
  std::vector<int64_t> other;
  for (int64_t i = 0; i < per_group; ++i) other.push_back((target + 1 + i) % 10 == target ? 0 : (target + 1 + i) % 10);
  dg.nontarget_images = ImageSet(torch::rand({per_group, 3, 8, 8}), other);
  return dg;
}

GenTrainConfig toy_config() {
  GenTrainConfig c;
  c.batch_size = 4;
  c.iterations_per_epoch = 4;
  c.epochs = 6;
  c.lr = 2e-3;
  c.epsilon = 0.1;
  c.seed = 5;
  return c;
}

ClassifierModel toy_victim() { return ClassifierModel(testing::toy_spec(10, {8, 8}), 21); }

TEST(LeastLikely, TiesResolveToLowestIndex) {
  const auto uniform = fixed_logits_model(std::vector<double>(10, 0.0));
  EXPECT_EQ(least_likely_class(uniform, {torch::rand({3, 8, 8}), 0}), 0);
  const auto two = fixed_logits_model({5.0, -1.0});
  EXPECT_EQ(least_likely_class(two, {torch::rand({3, 8, 8}), 0}), 1);
}

TEST(Losses, UniformCrossEntropyIsLogClassCount) {
  const auto uniform = fixed_logits_model(std::vector<double>(10, 0.0));
  auto x = torch::rand({5, 3, 8, 8});
  auto y = torch::full({5}, 3, torch::kLong);
  EXPECT_NEAR(target_loss(uniform, x, y).value.item<double>(), std::log(10.0), 1e-6);
  EXPECT_NEAR(nontarget_loss(uniform, x, 7).value.item<double>(), std::log(10.0), 1e-6);
}

TEST(Losses, EmptyBatchIsZeroAndFlagged) {
  const auto uniform = fixed_logits_model(std::vector<double>(10, 0.0));
  auto none = torch::rand({0, 3, 8, 8});
  const auto t = target_loss(uniform, none, torch::zeros({0}, torch::kLong));
  EXPECT_TRUE(t.empty);
  EXPECT_EQ(t.value.item<double>(), 0.0);
  const auto n = nontarget_loss(uniform, none, 2);
  EXPECT_TRUE(n.empty);
  EXPECT_EQ(n.value.item<double>(), 0.0);
}

TEST(Losses, TotalIsWeightedSum) {
  ScratchDir dir;
  const auto metric = desk_metric(dir);
  const auto victim = toy_victim();
  TriggerGenerator g(arch8(), 0.1, 1);
  auto x = torch::rand({6, 3, 8, 8});
  auto labels = torch::tensor({2, 0, 2, 1, 5, 2}, torch::kLong);
  auto y_llc = least_likely_classes(victim, x);
  auto cfg = toy_config();
  cfg.alpha = 0.7;
  cfg.beta = 1.3;
  cfg.gamma = 4.0;
  const auto v = generator_objective(g, victim, metric, x, labels, y_llc, 2, cfg).values();
  EXPECT_NEAR(v.l_total, 0.7 * v.l_target + 1.3 * v.l_nontarget + 4.0 * v.l_lpips, 1e-6);
  EXPECT_GT(v.l_lpips, 0.0);
}

TEST(Losses, PerceptualDistanceIsZeroForIdenticalAndSymmetric) {
  ScratchDir dir;
  const auto metric = desk_metric(dir);
  auto a = torch::rand({3, 3, 8, 8});
  auto b = torch::rand({3, 3, 8, 8});
  EXPECT_NEAR(metric.mean_distance(a, a), 0.0, 1e-9);
  EXPECT_NEAR(metric.mean_distance(a, b), metric.mean_distance(b, a), 1e-6);
  EXPECT_GT(metric.mean_distance(a, b), 0.0);
}

TEST(Losses, MissingPerceptualWeightsIsInitializationError) {
  ScratchDir dir;
  EXPECT_EQ(error_kind_of([&] { PerceptualMetric::load(dir / "absent"); }), ErrorKind::kInitialization);
}

TEST(Losses, ExportedAlexNetworkLoads) {
  // Set TRIGEN_LPIPS_ALEX to a stem written by tools/export_lpips_alex.py.
  const char* stem = std::getenv("TRIGEN_LPIPS_ALEX");
  if (stem == nullptr || *stem == '\0') GTEST_SKIP() << "TRIGEN_LPIPS_ALEX is not set";
  const auto metric = PerceptualMetric::load(stem);
  EXPECT_EQ(metric.backbone(), "alex");
  auto a = torch::rand({2, 3, 64, 64});
  auto b = torch::rand({2, 3, 64, 64});
  EXPECT_NEAR(metric.mean_distance(a, a), 0.0, 1e-9);
  EXPECT_GT(metric.mean_distance(a, b), 0.0);
  EXPECT_NEAR(metric.mean_distance(a, b), metric.mean_distance(b, a), 1e-6);
}

TEST(Training, LossDecreasesAndVictimStaysFrozen) {
  ScratchDir dir;
  const auto metric = desk_metric(dir);
  const auto victim = toy_victim();
  const auto before = victim.weights_hash();
  const auto dg = toy_generator_dataset(8, 2);
  auto cfg = toy_config();
  cfg.iterations_per_epoch = 10;
  const auto result = train_generator(victim, dg, metric, cfg, arch8(), {dir / "out"});
  EXPECT_EQ(victim.weights_hash(), before);
  ASSERT_EQ(result.epoch_means.size(), 6u);
  EXPECT_LT(result.epoch_means.back().l_total, result.epoch_means.front().l_total);
  EXPECT_EQ(result.steps.size(), 60u);
  EXPECT_EQ(result.generator.training_config_hash(), cfg.hash());
  for (int e = 1; e <= 6; ++e) {
    EXPECT_TRUE(std::filesystem::exists(weights_path(dir / "out" / ("gen_epoch_" + std::to_string(e)))));
  }
  std::ifstream log(dir / "out" / "gen_train_log.csv");
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, "epoch,step,l_target,l_nontarget,l_lpips,l_total");
  int rows = 0;
  for (std::string line; std::getline(log, line);) ++rows;
  EXPECT_EQ(rows, 60);
}

TEST(Training, SameSeedSameGenerator) {
  ScratchDir dir;
  const auto metric = desk_metric(dir);
  const auto victim = toy_victim();
  const auto dg = toy_generator_dataset(6, 4);
  auto cfg = toy_config();
  cfg.epochs = 2;
  const auto a = train_generator(victim, dg, metric, cfg, arch8());
  const auto b = train_generator(victim, dg, metric, cfg, arch8());
  EXPECT_EQ(a.generator.weights_hash(), b.generator.weights_hash());
}

TEST(Training, PerceptualWeightReducesDistance) {
  ScratchDir dir;
  const auto metric = desk_metric(dir);
  const auto victim = toy_victim();
  const auto dg = toy_generator_dataset(8, 1);
  auto cfg = toy_config();
  cfg.epsilon = 0.3;
  cfg.epochs = 8;
  cfg.gamma = 0.0;
  const auto loose = train_generator(victim, dg, metric, cfg, arch8());
  cfg.gamma = 10.0;
  const auto tight = train_generator(victim, dg, metric, cfg, arch8());
  const auto x = dg.combined().images();
  const auto d_loose = metric.mean_distance(x, apply_trigger(x, loose.generator.triggers(x)));
  const auto d_tight = metric.mean_distance(x, apply_trigger(x, tight.generator.triggers(x)));
  EXPECT_LT(d_tight, d_loose);
}

TEST(Training, ConfigErrors) {
  ScratchDir dir;
  const auto metric = desk_metric(dir);
  const auto victim = toy_victim();
  const auto dg = toy_generator_dataset(2, 1);
  auto cfg = toy_config();
  cfg.batch_size = 5;
  EXPECT_EQ(error_kind_of([&] { train_generator(victim, dg, metric, cfg, arch8()); }), ErrorKind::kConfig);
  cfg = toy_config();
  cfg.gamma = -1.0;
  EXPECT_EQ(error_kind_of([&] { cfg.validate(); }), ErrorKind::kConfig);
  auto wrong = arch8();
  wrong.input_resolution = {16, 16};
  EXPECT_EQ(error_kind_of([&] { train_generator(victim, dg, metric, toy_config(), wrong); }), ErrorKind::kShape);
}

TEST(Training, ObjectiveGradientMatchesFiniteDifferences) {
  // Full three-term objective in double precision on an 8 x 8 toy.
  ScratchDir dir;
  auto metric = desk_metric(dir);
  metric.to(torch::kFloat64);
  const auto victim = toy_victim();
  victim.net().to(torch::kFloat64);
  victim.freeze();
  TriggerGenerator g(arch8(), 0.2, 9);
  g.network()->to(torch::kFloat64);
  auto x = torch::rand({4, 3, 8, 8}, torch::kFloat64);
  auto labels = torch::tensor({3, 0, 3, 6}, torch::kLong);
  auto y_llc = least_likely_classes(victim, x);
  const auto cfg = toy_config();
  auto objective = [&] { return generator_objective(g, victim, metric, x, labels, y_llc, 3, cfg).total; };
  g.network()->zero_grad();
  objective().backward();
  int checked = 0;
  int ok = 0;
  torch::NoGradGuard no_grad;
  for (auto& p : g.network()->parameters()) {
    auto flat = p.view(-1);
    auto grad = p.grad().view(-1);
    for (int64_t i = 0; i < flat.size(0); i += std::max<int64_t>(1, flat.size(0) / 4)) {
      const double h = 1e-6;
      const double orig = flat[i].item<double>();
      flat[i] = orig + h;
      const double up = objective().item<double>();
      flat[i] = orig - h;
      const double down = objective().item<double>();
      flat[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grad[i].item<double>();
      ++checked;
      if (std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-5}) <= 1e-2) ++ok;
    }
  }
  EXPECT_GE(static_cast<double>(ok) / checked, 0.99) << ok << "/" << checked;
}

}  // namespace
}  // namespace trigen
