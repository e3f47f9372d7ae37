// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_METRICS_HPP_
#define TRIGEN_METRICS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trigen/classifier.hpp"
#include "trigen/image.hpp"
#include "trigen/perceptual.hpp"
#include "trigen/trigger.hpp"

namespace trigen {

// Maps a clean [N, 3, H, W] batch to its triggered version.
using TriggerFn = std::function<torch::Tensor(const torch::Tensor& images)>;

TriggerFn generator_trigger_fn(const TriggerGenerator& generator);

// Fraction of triggered images predicted as target_class. The images must
// not contain target-class samples; throws Error(kUndefinedMetric) if empty.
double compute_asr(const ClassifierModel& model, const torch::Tensor& nontarget_images, const TriggerFn& trigger,
                   int64_t target_class);
// Top-1 accuracy on clean images.
double compute_ba(const ClassifierModel& model, const ImageSet& images);
// Fraction of images whose prediction changes when the trigger is applied.
// Ground-truth labels are not consulted.
double compute_fr(const ClassifierModel& model, const torch::Tensor& images, const TriggerFn& trigger);

// Per-pair PSNR in dB on the 0-255 scale; identical pairs give +inf.
torch::Tensor psnr(const torch::Tensor& clean, const torch::Tensor& poisoned);

struct StealthReport {
  double lpips_mean = 0.0;
  // Mean over non-identical pairs; empty when every pair is identical.
  std::optional<double> psnr_mean;
  int64_t identical_pairs = 0;
  double linf_max = 0.0;  // 0-255 units
};

// Stealth of aligned (clean, poisoned) pairs. Throws Error(kPairing) if the
// shapes differ. LPIPS is skipped (reported as 0) when metric is null.
StealthReport compute_stealth(const PerceptualMetric* metric, const torch::Tensor& clean, const torch::Tensor& poisoned);

struct MetricsReport {
  double asr = 0.0;
  double ba = 0.0;
  double fr = 0.0;
  double lpips_mean = 0.0;
  std::optional<double> psnr_mean;
  double linf_max = 0.0;
  std::string config_ref;

  // psnr_mean is written as null when undefined.
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

// One epsilon of a sweep: the generator trained at that bound and the model
// implanted with its poisons. Either may be missing in a partial sweep.
struct EpsilonArm {
  double epsilon = 0.0;
  std::optional<TriggerGenerator> generator;
  std::optional<ClassifierModel> backdoor;
};

struct EpsilonRow {
  double epsilon = 0.0;
  double fr_clean = 0.0;
  double asr_clean = 0.0;
  double fr_backdoor = 0.0;
  double asr_backdoor = 0.0;
};

// Evaluates each requested epsilon on the clean and the backdoor model.
// Rows are sorted by epsilon. Throws Error(kIncompleteSweep) naming every
// epsilon that lacks a generator or a backdoor model.
std::vector<EpsilonRow> sweep_epsilon(const ClassifierModel& clean, const std::vector<EpsilonArm>& arms,
                                      const std::vector<double>& epsilons, const ImageSet& val, int64_t target_class);

struct RateRow {
  std::string method;
  double lambda = 0.0;
  bool skipped = false;
  std::string note;
  double asr = 0.0;
  double ba = 0.0;
};

// Runs (method, lambda) -> (asr, ba) for every pair. Infeasible rates are
// skipped with a note instead of aborting the sweep.
using RateRunner = std::function<std::pair<double, double>(const std::string& method, double lambda)>;
std::vector<RateRow> sweep_poison_rate(const std::vector<std::string>& methods, const std::vector<double>& lambdas,
                                       const RateRunner& run);

}  // namespace trigen

#endif  // TRIGEN_METRICS_HPP_
