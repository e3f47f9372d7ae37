// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/gen_training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "trigen/error.hpp"
#include "trigen/hashing.hpp"
#include "trigen/log.hpp"

namespace fs = std::filesystem;

namespace trigen {

void GenTrainConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw Error(ErrorKind::kConfig, "loss weights must be non-negative");
  if (alpha + beta + gamma <= 0.0) throw Error(ErrorKind::kConfig, "at least one loss weight must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::kConfig, "epsilon must lie in [0, 1]");
  if (batch_size < 2) throw Error(ErrorKind::kConfig, "generator batch_size must be >= 2");
  if (iterations_per_epoch < 1 || epochs < 1) throw Error(ErrorKind::kConfig, "iterations and epochs must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kConfig, "generator lr must be positive");
}

nlohmann::json GenTrainConfig::to_json() const {
  return {{"alpha", alpha},
          {"beta", beta},
          {"gamma", gamma},
          {"epsilon", epsilon},
          {"batch_size", batch_size},
          {"iterations_per_epoch", iterations_per_epoch},
          {"epochs", epochs},
          {"lr", lr},
          {"adam_betas", adam_betas},
          {"seed", seed}};
}

GenTrainConfig GenTrainConfig::from_json(const nlohmann::json& j) {
  GenTrainConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.iterations_per_epoch = j.value("iterations_per_epoch", c.iterations_per_epoch);
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  if (j.contains("adam_betas")) c.adam_betas = j.at("adam_betas").get<std::array<double, 2>>();
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::string GenTrainConfig::hash() const { return sha256_hex(to_json().dump()); }

int64_t least_likely_class(const ClassifierModel& model, const LabeledImage& image) {
  return least_likely_classes(model, image.pixels.unsqueeze(0)).item<int64_t>();
}

torch::Tensor least_likely_classes(const ClassifierModel& model, const torch::Tensor& images) {
  // argmin returns the first minimal index, so ties resolve to the lowest class.
  return model.eval_logits(images).argmin(1);
}

namespace {

BatchLoss mean_cross_entropy(const ClassifierModel& model, const torch::Tensor& images, const torch::Tensor& targets) {
  if (images.size(0) == 0) return {torch::zeros({}, images.options()), true};
  return {torch::cross_entropy_loss(model.logits(images), targets), false};
}

}  // namespace

BatchLoss target_loss(const ClassifierModel& model, const torch::Tensor& crafted_targets, const torch::Tensor& y_llc) {
  return mean_cross_entropy(model, crafted_targets, y_llc);
}

BatchLoss nontarget_loss(const ClassifierModel& model, const torch::Tensor& crafted_nontargets, int64_t target_class) {
  auto targets = torch::full({crafted_nontargets.size(0)}, target_class, torch::kLong);
  return mean_cross_entropy(model, crafted_nontargets, targets);
}

torch::Tensor perceptual_loss(const PerceptualMetric& metric, const torch::Tensor& clean, const torch::Tensor& crafted) {
  if (clean.size(0) == 0) return torch::zeros({}, clean.options());
  return metric.distance(clean, crafted).mean();
}

LossBreakdown LossTerms::values() const {
  return {target.value.item<double>(), nontarget.value.item<double>(), lpips.item<double>(), total.item<double>()};
}

LossTerms generator_objective(TriggerGenerator& generator, const ClassifierModel& victim,
                              const PerceptualMetric& metric, const torch::Tensor& images,
                              const torch::Tensor& labels, const torch::Tensor& y_llc, int64_t target_class,
                              const GenTrainConfig& config) {
  auto crafted = apply_trigger(images, generator.bounded(images));
  auto is_target = labels.eq(target_class);
  auto target_idx = is_target.nonzero().flatten();
  auto other_idx = is_target.logical_not().nonzero().flatten();

  LossTerms terms;
  terms.target = target_loss(victim, crafted.index_select(0, target_idx), y_llc.index_select(0, target_idx));
  terms.nontarget = nontarget_loss(victim, crafted.index_select(0, other_idx), target_class);
  terms.lpips = perceptual_loss(metric, images, crafted);
  terms.total = config.alpha * terms.target.value + config.beta * terms.nontarget.value + config.gamma * terms.lpips;
  return terms;
}

void write_training_log_csv(const fs::path& path, const std::vector<StepLog>& steps) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "epoch,step,l_target,l_nontarget,l_lpips,l_total\n" << std::setprecision(9);
  for (const auto& s : steps) {
    out << s.epoch << ',' << s.step << ',' << s.loss.l_target << ',' << s.loss.l_nontarget << ',' << s.loss.l_lpips
        << ',' << s.loss.l_total << '\n';
  }
}

namespace {

// Keeps the victim in inference mode with frozen parameters for the lifetime
// of the guard and restores the previous flags afterwards.
class FrozenVictim {
 public:
  explicit FrozenVictim(const ClassifierModel& model) : model_(model), was_training_(model.net().is_training()) {
    for (auto& p : model_.net().parameters()) {
      flags_.push_back(p.requires_grad());
      p.set_requires_grad(false);
    }
    model_.net().eval();
  }
  ~FrozenVictim() {
    std::size_t i = 0;
    for (auto& p : model_.net().parameters()) p.set_requires_grad(flags_[i++]);
    model_.net().train(was_training_);
  }
  FrozenVictim(const FrozenVictim&) = delete;
  FrozenVictim& operator=(const FrozenVictim&) = delete;

 private:
  const ClassifierModel& model_;
  bool was_training_;
  std::vector<bool> flags_;
};

// Endless stream of shuffled indices; reshuffles when a batch no longer fits.
class BatchSampler {
 public:
  BatchSampler(int64_t size, uint64_t seed) : order_(static_cast<std::size_t>(size)), rng_(seed) { reshuffle(); }

  std::vector<int64_t> next(int64_t batch) {
    if (cursor_ + batch > static_cast<int64_t>(order_.size())) reshuffle();
    std::vector<int64_t> out(order_.begin() + cursor_, order_.begin() + cursor_ + batch);
    cursor_ += batch;
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }

  std::vector<int64_t> order_;
  std::mt19937_64 rng_;
  int64_t cursor_ = 0;
};

}  // namespace

GeneratorTrainingResult train_generator(const ClassifierModel& victim, const GeneratorDataset& dg,
                                        const PerceptualMetric& metric, const GenTrainConfig& config,
                                        const GeneratorArchitecture& arch, const TrainingOutputs& outputs) {
  config.validate();
  arch.validate();
  const auto data = dg.combined();
  if (config.batch_size > data.size()) {
    throw Error(ErrorKind::kConfig, "batch_size " + std::to_string(config.batch_size) + " exceeds the " +
                                        std::to_string(data.size()) + " images of the generator dataset");
  }
  if (data.resolution() != arch.input_resolution) {
    throw Error(ErrorKind::kShape, "generator resolution " + to_string(arch.input_resolution) +
                                       " differs from the data " + to_string(data.resolution()));
  }

  const auto victim_hash = victim.weights_hash();
  FrozenVictim frozen(victim);
  const auto y_llc = least_likely_classes(victim, data.images());
  const auto labels = data.labels_tensor();

  GeneratorTrainingResult result{TriggerGenerator(arch, config.epsilon, config.seed), {}, {}};
  auto& generator = result.generator;
  generator.set_training_config_hash(config.hash());
  generator.network()->train();
  torch::optim::Adam optimizer(
      generator.network()->parameters(),
      torch::optim::AdamOptions(config.lr).betas({config.adam_betas[0], config.adam_betas[1]}));

  BatchSampler sampler(data.size(), config.seed);
  std::optional<fs::path> last_good;
  int64_t step = 0;
  for (int64_t epoch = 1; epoch <= config.epochs; ++epoch) {
    LossBreakdown sum;
    for (int64_t it = 0; it < config.iterations_per_epoch; ++it, ++step) {
      auto idx = torch::tensor(sampler.next(config.batch_size), torch::kLong);
      auto terms = generator_objective(generator, victim, metric, data.images().index_select(0, idx),
                                       labels.index_select(0, idx), y_llc.index_select(0, idx), dg.target_class, config);
      const auto values = terms.values();
      if (std::isnan(values.l_total)) {
        if (outputs.directory) write_training_log_csv(*outputs.directory / "gen_train_log.csv", result.steps);
        throw Error(ErrorKind::kDivergence,
                    "generator loss is NaN at epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                        (last_good ? "; last good checkpoint " + last_good->string() : "; no checkpoint yet"));
      }
      optimizer.zero_grad();
      terms.total.backward();
      optimizer.step();
      result.steps.push_back({epoch, step, values});
      sum.l_target += values.l_target;
      sum.l_nontarget += values.l_nontarget;
      sum.l_lpips += values.l_lpips;
      sum.l_total += values.l_total;
    }
    const auto n = static_cast<double>(config.iterations_per_epoch);
    result.epoch_means.push_back({sum.l_target / n, sum.l_nontarget / n, sum.l_lpips / n, sum.l_total / n});
    const auto& m = result.epoch_means.back();
    log::info("generator epoch ", epoch, "/", config.epochs, ": L_t=", m.l_target, " L_nt=", m.l_nontarget,
              " L_lpips=", m.l_lpips, " L_total=", m.l_total);
    if (outputs.directory) {
      last_good = *outputs.directory / ("gen_epoch_" + std::to_string(epoch));
      generator.save(*last_good);
      write_training_log_csv(*outputs.directory / "gen_train_log.csv", result.steps);
    }
  }
  generator.network()->eval();
  if (victim.weights_hash() != victim_hash) throw Error(ErrorKind::kRuntime, "victim weights changed during training");
  return result;
}

}  // namespace trigen
