// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/strip.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "trigen/error.hpp"

namespace trigen {

namespace {

std::vector<int64_t> draw_overlays(int64_t pool, int64_t count, uint64_t seed, int64_t sample, int64_t exclude) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(sample),
                    static_cast<uint32_t>(exclude + 1)};
  std::mt19937_64 rng(seq);
  std::vector<int64_t> candidates;
  candidates.reserve(static_cast<std::size_t>(pool));
  for (int64_t i = 0; i < pool; ++i) {
    if (i != exclude) candidates.push_back(i);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(static_cast<std::size_t>(count));
  return candidates;
}

std::vector<double> screen(const ClassifierModel& model, const StripInputs& inputs, const torch::Tensor& overlays,
                           const StripOptions& options) {
  const auto n = inputs.images.size(0);
  if (!inputs.source.empty() && static_cast<int64_t>(inputs.source.size()) != n) {
    throw Error(ErrorKind::kConfig, "STRIP source list does not match the number of inputs");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const int64_t exclude = inputs.source.empty() ? -1 : inputs.source[static_cast<std::size_t>(i)];
    const auto pool = overlays.size(0) - (exclude >= 0 && exclude < overlays.size(0) ? 1 : 0);
    if (options.n_overlays > pool) {
      throw Error(ErrorKind::kConfig, "n_overlays exceeds the " + std::to_string(pool) + " available overlays");
    }
    auto picks = draw_overlays(overlays.size(0), options.n_overlays, options.seed, i, exclude);
    auto chosen = overlays.index_select(0, torch::tensor(picks, torch::kLong));
    out.push_back(strip_entropy(model, inputs.images[i], chosen));
  }
  return out;
}

}  // namespace

torch::Tensor entropy_bits(const torch::Tensor& probabilities) {
  auto p = probabilities.to(torch::kFloat64);
  auto terms = torch::where(p > 0, -p * torch::log2(p), torch::zeros_like(p));
  return terms.sum(1);
}

double strip_entropy(const ClassifierModel& model, const torch::Tensor& image, const torch::Tensor& overlays) {
  if (overlays.dim() != 4 || overlays.size(0) == 0) throw Error(ErrorKind::kConfig, "STRIP needs at least one overlay");
  if (image.dim() != 3 || image.sizes() != overlays.sizes().slice(1)) {
    throw Error(ErrorKind::kShape, "STRIP image and overlay shapes differ");
  }
  auto blended = (image.unsqueeze(0) + overlays).clamp(0.0, 1.0);
  return entropy_bits(model.probabilities(blended)).mean().item<double>();
}

double EntropyDistribution::median() const {
  if (per_sample_entropy.empty()) throw Error(ErrorKind::kUndefinedMetric, "median of an empty distribution");
  auto v = per_sample_entropy;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<EntropyDistribution, EntropyDistribution> strip_evaluate(const ClassifierModel& model,
                                                                  const StripInputs& clean,
                                                                  const StripInputs& triggered,
                                                                  const torch::Tensor& overlays,
                                                                  const StripOptions& options) {
  if (options.n_overlays < 1) throw Error(ErrorKind::kConfig, "n_overlays must be >= 1");
  if (clean.images.size(0) == 0 || triggered.images.size(0) == 0) {
    throw Error(ErrorKind::kConfig, "STRIP needs non-empty clean and triggered sets");
  }
  torch::NoGradGuard no_grad;
  model.set_training(false);
  return {EntropyDistribution{"clean", screen(model, clean, overlays, options)},
          EntropyDistribution{"triggered", screen(model, triggered, overlays, options)}};
}

StripThreshold strip_threshold(const EntropyDistribution& clean, const EntropyDistribution& triggered,
                               double clean_reject_fraction) {
  if (clean.per_sample_entropy.empty() || triggered.per_sample_entropy.empty()) {
    throw Error(ErrorKind::kUndefinedMetric, "threshold needs both distributions");
  }
  auto sorted = clean.per_sample_entropy;
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<std::size_t>(std::floor(clean_reject_fraction * static_cast<double>(sorted.size())));
  StripThreshold t;
  // Strictly-below rule: at most k clean samples sit under sorted[k].
  t.threshold = sorted[std::min(k, sorted.size() - 1)];
  auto below = [&](const std::vector<double>& v) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double e) { return e < t.threshold; })) /
           static_cast<double>(v.size());
  };
  t.clean_rejected = below(clean.per_sample_entropy);
  t.triggered_rejected = below(triggered.per_sample_entropy);
  return t;
}

nlohmann::json StripReport::to_json() const {
  return {{"seed", options.seed},
          {"n_overlays", options.n_overlays},
          {"entropy_base", "bits"},
          {"clean", clean.per_sample_entropy},
          {"triggered", triggered.per_sample_entropy},
          {"medians", {{"clean", clean.median()}, {"triggered", triggered.median()}}},
          {"threshold",
           {{"value", threshold.threshold},
            {"clean_rejected", threshold.clean_rejected},
            {"triggered_rejected", threshold.triggered_rejected}}}};
}

StripReport StripReport::from_json(const nlohmann::json& j) {
  StripReport r;
  r.options.seed = j.at("seed").get<uint64_t>();
  r.options.n_overlays = j.at("n_overlays").get<int64_t>();
  r.clean = {"clean", j.at("clean").get<std::vector<double>>()};
  r.triggered = {"triggered", j.at("triggered").get<std::vector<double>>()};
  const auto& t = j.at("threshold");
  r.threshold = {t.at("value").get<double>(), t.at("clean_rejected").get<double>(),
                 t.at("triggered_rejected").get<double>()};
  return r;
}

}  // namespace trigen
