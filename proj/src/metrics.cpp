// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trigen/error.hpp"
#include "trigen/log.hpp"

namespace trigen {

namespace {

torch::Tensor triggered_predictions(const ClassifierModel& model, const torch::Tensor& images, const TriggerFn& trigger) {
  constexpr int64_t kChunk = 256;
  std::vector<torch::Tensor> parts;
  for (int64_t start = 0; start < images.size(0); start += kChunk) {
    auto chunk = images.slice(0, start, std::min(start + kChunk, images.size(0)));
    parts.push_back(model.predict(trigger(chunk)));
  }
  return torch::cat(parts);
}

void require_nonempty(const torch::Tensor& images, const char* metric) {
  if (images.dim() != 4 || images.size(0) == 0) {
    throw Error(ErrorKind::kUndefinedMetric, std::string(metric) + " is undefined on an empty set");
  }
}

}  // namespace

TriggerFn generator_trigger_fn(const TriggerGenerator& generator) {
  return [generator](const torch::Tensor& images) { return apply_trigger(images, generator.triggers(images)); };
}

double compute_asr(const ClassifierModel& model, const torch::Tensor& nontarget_images, const TriggerFn& trigger,
                   int64_t target_class) {
  require_nonempty(nontarget_images, "ASR");
  auto pred = triggered_predictions(model, nontarget_images, trigger);
  return pred.eq(target_class).sum().item<double>() / static_cast<double>(pred.size(0));
}

double compute_ba(const ClassifierModel& model, const ImageSet& images) {
  require_nonempty(images.images(), "BA");
  auto pred = model.predict(images.images());
  return pred.eq(images.labels_tensor()).sum().item<double>() / static_cast<double>(images.size());
}

double compute_fr(const ClassifierModel& model, const torch::Tensor& images, const TriggerFn& trigger) {
  require_nonempty(images, "FR");
  auto clean = model.predict(images);
  auto triggered = triggered_predictions(model, images, trigger);
  return clean.ne(triggered).sum().item<double>() / static_cast<double>(images.size(0));
}

torch::Tensor psnr(const torch::Tensor& clean, const torch::Tensor& poisoned) {
  if (clean.sizes() != poisoned.sizes()) throw Error(ErrorKind::kPairing, "clean and poisoned shapes differ");
  auto diff = (clean.to(torch::kFloat64) - poisoned.to(torch::kFloat64)) * 255.0;
  auto mse = diff.square().flatten(1).mean(1);
  return 10.0 * torch::log10(255.0 * 255.0 / mse);
}

StealthReport compute_stealth(const PerceptualMetric* metric, const torch::Tensor& clean, const torch::Tensor& poisoned) {
  if (clean.sizes() != poisoned.sizes()) {
    std::ostringstream os;
    os << "stealth needs aligned pairs, got " << clean.sizes() << " and " << poisoned.sizes();
    throw Error(ErrorKind::kPairing, os.str());
  }
  StealthReport r;
  if (clean.dim() != 4 || clean.size(0) == 0) return r;
  auto p = psnr(clean, poisoned);
  auto finite = torch::isfinite(p);
  const auto n_finite = finite.sum().item<int64_t>();
  r.identical_pairs = clean.size(0) - n_finite;
  if (n_finite > 0) r.psnr_mean = p.masked_select(finite).mean().item<double>();
  auto diff = (clean.to(torch::kFloat64) - poisoned.to(torch::kFloat64)).abs();
  r.linf_max = diff.max().item<double>() * 255.0;
  if (metric) r.lpips_mean = metric->mean_distance(clean, poisoned);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  return {{"asr", asr},
          {"ba", ba},
          {"fr", fr},
          {"lpips_mean", lpips_mean},
          {"psnr_mean", psnr_mean ? nlohmann::json(*psnr_mean) : nlohmann::json(nullptr)},
          {"linf_max", linf_max},
          {"config_ref", config_ref}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.asr = j.at("asr").get<double>();
  r.ba = j.at("ba").get<double>();
  r.fr = j.at("fr").get<double>();
  r.lpips_mean = j.at("lpips_mean").get<double>();
  if (!j.at("psnr_mean").is_null()) r.psnr_mean = j.at("psnr_mean").get<double>();
  r.linf_max = j.at("linf_max").get<double>();
  r.config_ref = j.value("config_ref", "");
  return r;
}

std::vector<EpsilonRow> sweep_epsilon(const ClassifierModel& clean, const std::vector<EpsilonArm>& arms,
                                      const std::vector<double>& epsilons, const ImageSet& val, int64_t target_class) {
  auto sorted = epsilons;
  std::sort(sorted.begin(), sorted.end());
  std::vector<const EpsilonArm*> chosen;
  std::vector<std::string> gaps;
  for (double eps : sorted) {
    auto it = std::find_if(arms.begin(), arms.end(), [eps](const EpsilonArm& a) { return std::abs(a.epsilon - eps) < 1e-9; });
    if (it == arms.end() || !it->generator || !it->backdoor) {
      std::ostringstream os;
      os << eps * 255.0 << "/255";
      if (it == arms.end() || !it->generator) os << " (no generator)";
      else os << " (no backdoor model)";
      gaps.push_back(os.str());
      continue;
    }
    chosen.push_back(&*it);
  }
  if (!gaps.empty()) {
    std::string msg = "epsilon sweep is missing";
    for (const auto& g : gaps) msg += " " + g;
    throw Error(ErrorKind::kIncompleteSweep, msg);
  }
  const auto nontarget = val.subset(val.indices_not_of(target_class)).images();
  std::vector<EpsilonRow> rows;
  for (const auto* arm : chosen) {
    auto fn = generator_trigger_fn(*arm->generator);
    EpsilonRow row;
    row.epsilon = arm->epsilon;
    row.fr_clean = compute_fr(clean, val.images(), fn);
    row.asr_clean = compute_asr(clean, nontarget, fn, target_class);
    row.fr_backdoor = compute_fr(*arm->backdoor, val.images(), fn);
    row.asr_backdoor = compute_asr(*arm->backdoor, nontarget, fn, target_class);
    rows.push_back(row);
  }
  return rows;
}

std::vector<RateRow> sweep_poison_rate(const std::vector<std::string>& methods, const std::vector<double>& lambdas,
                                       const RateRunner& run) {
  std::vector<RateRow> rows;
  for (const auto& method : methods) {
    for (double lambda : lambdas) {
      RateRow row;
      row.method = method;
      row.lambda = lambda;
      try {
        std::tie(row.asr, row.ba) = run(method, lambda);
      } catch (const InfeasibleRateError& e) {
        row.skipped = true;
        row.note = e.what();
        log::warn("skipping ", method, " at lambda=", lambda, ": ", e.what());
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace trigen
