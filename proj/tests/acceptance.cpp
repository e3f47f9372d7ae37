// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

// Desk-scale acceptance suite. Trains every model it needs under a work
// directory (caches are reused across invocations) and prints one
// [PASS]/[FAIL] line per criterion. Exits non-zero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trigen/baselines.hpp"
#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"
#include "trigen/experiment.hpp"
#include "trigen/gen_training.hpp"
#include "trigen/log.hpp"
#include "trigen/metrics.hpp"
#include "trigen/strip.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using trigen::ExperimentConfig;

struct Outcome {
  int number;
  std::string description;
  bool pass;
  std::string details;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

// One experiment of the suite: the config plus its report once run.
struct Run {
  ExperimentConfig cfg;
  fs::path dir;
  json report;
};

class Suite {
 public:
  explicit Suite(fs::path work) : work_(std::move(work)) {
    base_ = ExperimentConfig::read_document(fs::path(TRIGEN_SOURCE_DIR) / "configs" / "desk.toml");
    base_["dataset"]["root"] = (work_ / "data").string();
    base_["output_dir"] = (work_ / "runs").string();
    base_["cache_dir"] = (work_ / "cache").string();
  }

  // Desk config with overrides; `full` keeps the defense stages.
  json doc(const std::string& method, double eps_255, double lambda, uint64_t seed, bool strip, bool augment) const {
    json d = base_;
    d["method"] = method;
    d.erase("epsilon");
    d["epsilon_255"] = eps_255;
    d["lambda"] = lambda;
    d["seed"] = seed;
    if (!strip) d["defenses"].erase("strip");
    if (!augment) d["defenses"].erase("augment");
    return d;
  }

  const Run& run(const json& d) {
    const auto cfg = ExperimentConfig::from_json(d);
    const auto key = cfg.hash();
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    const bool defenses = cfg.defenses.strip || cfg.defenses.augment;
    trigen::log::info("acceptance: ", trigen::to_string(cfg.method), " eps ", cfg.epsilon * 255.0, "/255 lambda ",
                      cfg.lambda, " seed ", cfg.seed);
    const auto manifest =
        trigen::run_experiment(cfg, defenses ? std::nullopt : std::optional<trigen::Stage>(trigen::Stage::kEvaluate));
    Run r{cfg, manifest.run_dir, trigen::read_json(manifest.run_dir / "report.json")};
    return runs_.emplace(key, std::move(r)).first->second;
  }

  const std::map<std::string, Run>& runs() const { return runs_; }
  const fs::path& work() const { return work_; }

 private:
  fs::path work_;
  json base_;
  std::map<std::string, Run> runs_;
};

double asr_of(const Run& r) { return r.report.at("metrics").at("asr").get<double>(); }

constexpr double kEps25 = 25.0;
const std::vector<uint64_t> kSeeds{0, 1, 2};

Outcome criterion1(Suite& s) {
  int ok = 0;
  std::string details;
  for (auto seed : kSeeds) {
    const auto& r = s.run(s.doc("ours", kEps25, 0.05, seed, seed == 0, true));
    const double asr = asr_of(r);
    const double drop = r.report.at("ba_drop").get<double>();
    const bool pass = asr >= 0.80 && drop <= 0.05;
    ok += pass ? 1 : 0;
    details += "seed " + std::to_string(seed) + ": ASR " + fmt(asr) + " BA drop " + fmt(drop) + (pass ? " ok" : " miss") +
               "; ";
  }
  return {1, "desk attack effectiveness (ASR >= 0.80, BA drop <= 0.05, 2 of 3 seeds)", ok >= 2, details};
}

Outcome criterion2(Suite& s) {
  bool pass = true;
  std::string details;
  for (double eps : {15.0, 25.0, 30.0}) {
    const auto& r = s.run(s.doc("ours", eps, 0.05, 0, eps == kEps25, eps == kEps25));
    const double gap = asr_of(r) - r.report.at("clean_model").at("asr").get<double>();
    pass = pass && gap >= 0.30;
    details += "eps " + fmt(eps, 0) + ": backdoor " + fmt(asr_of(r)) + " clean " +
               fmt(r.report.at("clean_model").at("asr").get<double>()) + " gap " + fmt(gap) + "; ";
  }
  return {2, "implantation separation (backdoor ASR - clean ASR >= 0.30 at eps 15/25/30)", pass, details};
}

Outcome criterion3(Suite& s) {
  const std::vector<double> grid{10.0, 15.0, 25.0, 30.0};
  std::vector<trigen::EpsilonArm> arms;
  std::vector<double> reported;
  const Run* any = nullptr;
  for (double eps : grid) {
    const auto& r = s.run(s.doc("ours", eps, 0.05, 0, eps == kEps25, eps == kEps25));
    any = &r;
    reported.push_back(asr_of(r));
    arms.push_back({r.cfg.epsilon, trigen::TriggerGenerator::load(r.dir / "generator"),
                    trigen::ClassifierModel::load(r.dir / "backdoor")});
  }
  // Independent recomputation through the sweep API from the saved models.
  const auto split = trigen::dataset_for(any->cfg);
  const auto clean = trigen::clean_model_for(any->cfg, split);
  std::vector<double> epsilons;
  for (const auto& a : arms) epsilons.push_back(a.epsilon);
  const auto rows = trigen::sweep_epsilon(clean, arms, epsilons, split.val, any->cfg.target_class);
  double mismatch = 0.0;
  int inversions = 0;
  double worst = 0.0;
  std::string details = "ASR by eps:";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    mismatch = std::max(mismatch, std::abs(rows[i].asr_backdoor - reported[i]));
    details += " " + fmt(grid[i], 0) + "->" + fmt(rows[i].asr_backdoor);
    if (i > 0 && rows[i].asr_backdoor < rows[i - 1].asr_backdoor) {
      ++inversions;
      worst = std::max(worst, rows[i - 1].asr_backdoor - rows[i].asr_backdoor);
    }
  }
  const bool pass = mismatch <= 1e-9 && (inversions == 0 || (inversions == 1 && worst <= 0.03));
  details += "; inversions " + std::to_string(inversions) + " (largest " + fmt(worst) + "); sweep vs report diff " +
             fmt(mismatch, 9);
  return {3, "monotonic eps trend (at most one inversion <= 0.03)", pass, details};
}

Outcome criterion4(Suite& s) {
  const auto& ours = s.run(s.doc("ours", kEps25, 0.05, 0, true, true));
  const auto& grtba = s.run(s.doc("grtba", 40.0, 0.05, 0, false, false));
  const auto& clba = s.run(s.doc("clba", 16.0, 0.05, 0, false, true));
  auto m = [](const Run& r, const char* k) { return r.report.at("metrics").at(k).get<double>(); };
  const bool order = m(ours, "asr") > m(grtba, "asr") && m(grtba, "asr") > m(clba, "asr");
  const bool lpips = m(ours, "lpips_mean") < m(grtba, "lpips_mean");
  const bool linf = m(ours, "linf_max") < m(clba, "linf_max");
  const std::string details = "ASR ours " + fmt(m(ours, "asr")) + " grtba " + fmt(m(grtba, "asr")) + " clba " +
                              fmt(m(clba, "asr")) + "; LPIPS ours " + fmt(m(ours, "lpips_mean")) + " grtba " +
                              fmt(m(grtba, "lpips_mean")) + "; linf ours " + fmt(m(ours, "linf_max"), 2) + " clba " +
                              fmt(m(clba, "linf_max"), 2);
  return {4, "baseline ordering (ASR ours > GRTBA > CLBA, LPIPS ours < GRTBA, linf ours < CLBA)",
          order && lpips && linf, details};
}

Outcome criterion5(Suite& s) {
  const double a0 = asr_of(s.run(s.doc("ours", kEps25, 0.0, 0, false, false)));
  const double a1 = asr_of(s.run(s.doc("ours", kEps25, 0.01, 0, false, false)));
  const double a5 = asr_of(s.run(s.doc("ours", kEps25, 0.05, 0, true, true)));
  const bool pass = a1 - a0 >= 0.15 && a5 >= a1 - 0.02;
  return {5, "poisoning-rate sweep (ASR@1% - ASR@0 >= 0.15, ASR@5% >= ASR@1% - 0.02)", pass,
          "ASR lambda 0: " + fmt(a0) + ", 1%: " + fmt(a1) + ", 5%: " + fmt(a5)};
}

// Rebuilds every poisoned training set from the saved plan and trigger
// artifacts and checks labels and counts against the clean split.
Outcome criterion6(Suite& s) {
  bool pass = true;
  int audited = 0;
  std::string problems;
  std::optional<trigen::DatasetSplit> split;
  std::optional<trigen::ClassifierModel> clean;
  for (const auto& [hash, r] : s.runs()) {
    if (!split) {
      split = trigen::dataset_for(r.cfg);
      clean = trigen::clean_model_for(r.cfg, *split);
    }
    const auto n = split->train.size();
    const auto plan = trigen::PoisonPlan::load(r.dir / "plan.json");
    const auto expected_plan = trigen::make_poison_plan(*split, r.cfg.target_class, r.cfg.lambda, r.cfg.seed);
    const auto expected_count = static_cast<int64_t>(std::llround(r.cfg.lambda * static_cast<double>(n)));
    trigen::PoisonFn poison;
    switch (r.cfg.method) {
      case trigen::Method::kOurs: {
        const auto g = trigen::TriggerGenerator::load(r.dir / "generator");
        poison = [g](const torch::Tensor& x, const torch::Tensor&) { return trigen::apply_trigger(x, g.triggers(x)); };
        break;
      }
      case trigen::Method::kClba: {
        const auto patch = trigen::PatchTrigger::load(r.dir / "patch.pt");
        const double eps = r.cfg.epsilon;
        const auto& model = *clean;
        poison = [&model, eps, patch](const torch::Tensor& x, const torch::Tensor& y) {
          return trigen::clba_poison(model, x, y, eps, patch);
        };
        break;
      }
      case trigen::Method::kGrtba: {
        const auto noise = trigen::GlobalNoiseTrigger::load(r.dir / "noise.pt");
        poison = [noise](const torch::Tensor& x, const torch::Tensor&) { return trigen::grtba_poison(x, noise); };
        break;
      }
    }
    const auto d_prime = trigen::build_poisoned_dataset(*split, plan, poison);
    int64_t mutations = 0;
    for (int64_t i = 0; i < n; ++i) {
      if (d_prime.train.labels()[static_cast<std::size_t>(i)] != split->train.labels()[static_cast<std::size_t>(i)]) {
        ++mutations;
      }
    }
    auto changed_mask = (d_prime.train.images() != split->train.images()).flatten(1).any(1);
    std::vector<bool> in_plan(static_cast<std::size_t>(n), false);
    bool targets_only = true;
    for (auto i : plan.indices) {
      in_plan[static_cast<std::size_t>(i)] = true;
      targets_only = targets_only && split->train.labels()[static_cast<std::size_t>(i)] == r.cfg.target_class;
    }
    int64_t changed_outside = 0;
    for (int64_t i = 0; i < n; ++i) {
      if (changed_mask[i].item<bool>() && !in_plan[static_cast<std::size_t>(i)]) ++changed_outside;
    }
    const auto& summary = r.report.at("poison");
    const bool ok = mutations == 0 && changed_outside == 0 && targets_only && plan == expected_plan &&
                    static_cast<int64_t>(plan.indices.size()) == expected_count &&
                    summary.at("label_mutations").get<int64_t>() == 0 &&
                    summary.at("poisoned").get<int64_t>() == expected_count;
    if (!ok) {
      problems += " " + hash.substr(0, 8) + " (mutations " + std::to_string(mutations) + ", outside " +
                  std::to_string(changed_outside) + ", count " + std::to_string(plan.indices.size()) + " vs " +
                  std::to_string(expected_count) + ")";
    }
    pass = pass && ok;
    ++audited;
  }
  return {6, "clean-label audit (no label mutations, exactly round(lambda N) poisoned)", pass && audited > 0,
          std::to_string(audited) + " poisoned sets rebuilt and audited" + (problems.empty() ? "" : ";" + problems)};
}

Outcome criterion7(Suite& s) {
  int64_t checked = 0;
  int64_t violations = 0;
  double worst_margin = -1.0;
  int generators = 0;
  std::optional<trigen::DatasetSplit> split;
  for (const auto& [hash, r] : s.runs()) {
    if (r.cfg.method != trigen::Method::kOurs) continue;
    if (!split) split = trigen::dataset_for(r.cfg);
    auto g = trigen::TriggerGenerator::load(r.dir / "generator");
    const auto& x = split->val.images();
    const double bound = r.cfg.epsilon + 1e-6;
    // Both the returned triggers and the raw bounded network output.
    const auto deltas = g.triggers(x);
    torch::Tensor raw;
    {
      torch::NoGradGuard no_grad;
      raw = g.bounded(x);
    }
    for (const auto& t : {deltas, raw}) {
      const auto per_image = t.abs().flatten(1).amax(1);
      checked += per_image.size(0);
      violations += per_image.gt(bound).sum().item<int64_t>();
      worst_margin = std::max(worst_margin, per_image.max().item<double>() - r.cfg.epsilon);
    }
    ++generators;
  }
  return {7, "trigger bound audit (||delta||_inf <= eps + 1e-6 on every validation image)",
          violations == 0 && checked > 0,
          std::to_string(generators) + " generators, " + std::to_string(checked) + " triggers checked, " +
              std::to_string(violations) + " violations, max excess over eps " + fmt(worst_margin * 255.0, 6) +
              "/255"};
}

// Metric oracles on a fixed 10-image fixture, recomputed with plain loops.
Outcome criterion8() {
  torch::manual_seed(8);
  trigen::ClassifierSpec spec;
  spec.architecture = "tiny-cnn";
  spec.class_count = 10;
  spec.input_resolution = {8, 8};
  const trigen::ClassifierModel model(spec, 8);
  auto images = torch::rand({10, 3, 8, 8});
  std::vector<int64_t> labels{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const int64_t target = 3;
  const trigen::TriggerFn trigger = [](const torch::Tensor& x) { return (x * 0.6 + 0.35).clamp(0.0, 1.0); };
  auto triggered = trigger(images);

  // Brute force: one image at a time, argmax by loop.
  auto predict_one = [&](const torch::Tensor& x) {
    const auto logits = model.eval_logits(x.unsqueeze(0))[0];
    int64_t best = 0;
    for (int64_t c = 1; c < 10; ++c) {
      if (logits[c].item<float>() > logits[best].item<float>()) best = c;
    }
    return best;
  };
  int correct = 0, flips = 0, hits = 0, nontarget = 0;
  std::vector<int64_t> nt_idx;
  for (int64_t i = 0; i < 10; ++i) {
    const auto p_clean = predict_one(images[i]);
    const auto p_trig = predict_one(triggered[i]);
    correct += p_clean == labels[static_cast<std::size_t>(i)] ? 1 : 0;
    flips += p_clean != p_trig ? 1 : 0;
    if (labels[static_cast<std::size_t>(i)] != target) {
      ++nontarget;
      nt_idx.push_back(i);
      hits += p_trig == target ? 1 : 0;
    }
  }
  double psnr_sum = 0.0;
  double linf = 0.0;
  const auto a = images.to(torch::kFloat64).contiguous();
  const auto b = triggered.to(torch::kFloat64).contiguous();
  const auto* pa = a.data_ptr<double>();
  const auto* pb = b.data_ptr<double>();
  const int64_t per = 3 * 8 * 8;
  for (int64_t i = 0; i < 10; ++i) {
    double se = 0.0;
    for (int64_t k = 0; k < per; ++k) {
      const double d = (pa[i * per + k] - pb[i * per + k]) * 255.0;
      se += d * d;
      linf = std::max(linf, std::abs(d));
    }
    psnr_sum += 10.0 * std::log10(255.0 * 255.0 / (se / static_cast<double>(per)));
  }
  const trigen::ImageSet set(images, labels);
  const double ba = trigen::compute_ba(model, set);
  const double fr = trigen::compute_fr(model, images, trigger);
  const double asr = trigen::compute_asr(model, set.subset(nt_idx).images(), trigger, target);
  const auto stealth = trigen::compute_stealth(nullptr, images, triggered);
  const bool loops_match = ba == correct / 10.0 && fr == flips / 10.0 &&
                           asr == static_cast<double>(hits) / static_cast<double>(nontarget) &&
                           stealth.psnr_mean && std::abs(*stealth.psnr_mean - psnr_sum / 10.0) <= 1e-9 &&
                           std::abs(stealth.linf_max - linf) <= 1e-9;

  const auto uniform_psnr =
      trigen::psnr(torch::full({1, 3, 8, 8}, 100.0 / 255.0), torch::full({1, 3, 8, 8}, 110.0 / 255.0)).item<double>();
  const double entropy = trigen::entropy_bits(torch::full({1, 10}, 0.1)).item<double>();
  const bool psnr_ok = std::abs(uniform_psnr - 28.136) <= 0.01;
  const bool entropy_ok = std::abs(entropy - std::log2(10.0)) <= 1e-6;
  return {8, "metric oracles (loop recomputation, uniform-offset PSNR, uniform entropy)",
          loops_match && psnr_ok && entropy_ok,
          "BA " + fmt(ba) + " FR " + fmt(fr) + " ASR " + fmt(asr) + " match loops: " + (loops_match ? "yes" : "no") +
              "; PSNR(10/255 offset) " + fmt(uniform_psnr) + " dB; entropy " + fmt(entropy, 9) + " bits"};
}

// Central finite differences of the full generator objective on an 8x8 toy.
Outcome criterion9(const fs::path& work) {
  torch::manual_seed(9);
  trigen::GeneratorArchitecture arch;
  arch.depth = 2;
  arch.base_channels = 4;
  arch.input_resolution = {8, 8};
  trigen::TriggerGenerator g(arch, 25.0 / 255.0, 9);
  g.network()->to(torch::kFloat64);
  trigen::ClassifierSpec spec;
  spec.architecture = "tiny-cnn";
  spec.class_count = 2;
  spec.input_resolution = {8, 8};
  const trigen::ClassifierModel victim(spec, 9);
  victim.net().to(torch::kFloat64);
  victim.freeze();
  const auto stem = work / "gradcheck_lpips";
  trigen::PerceptualMetric::write_desk_random(stem, 9);
  auto metric = trigen::PerceptualMetric::load(stem);
  metric.to(torch::kFloat64);
  auto x = torch::rand({6, 3, 8, 8}, torch::kFloat64);
  auto labels = torch::tensor({1, 0, 1, 0, 0, 1}, torch::kLong);
  const auto y_llc = trigen::least_likely_classes(victim, x);
  trigen::GenTrainConfig cfg;  // alpha = beta = 1, gamma = 10
  auto objective = [&] {
    return trigen::generator_objective(g, victim, metric, x, labels, y_llc, 1, cfg).total;
  };
  g.network()->zero_grad();
  objective().backward();

  std::vector<torch::Tensor> params = g.network()->parameters();
  int64_t total = 0;
  for (const auto& p : params) total += p.numel();
  const int64_t stride = std::max<int64_t>(1, total / 500);
  int64_t sampled = 0;
  int64_t ok = 0;
  double worst = 0.0;
  torch::NoGradGuard no_grad;
  int64_t flat_index = 0;
  for (auto& p : params) {
    auto flat = p.view(-1);
    auto grad = p.grad().view(-1);
    for (int64_t i = 0; i < flat.size(0); ++i, ++flat_index) {
      if (flat_index % stride != 0) continue;
      const double h = 1e-6;
      const double orig = flat[i].item<double>();
      flat[i] = orig + h;
      const double up = objective().item<double>();
      flat[i] = orig - h;
      const double down = objective().item<double>();
      flat[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad[i].item<double>();
      const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      ++sampled;
      if (rel <= 1e-2) ++ok;
      worst = std::max(worst, rel);
    }
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(sampled);
  return {9, "gradient check (relative error <= 1e-2 on >= 99% of sampled parameters)", frac >= 0.99,
          std::to_string(ok) + "/" + std::to_string(sampled) + " parameters within tolerance (" + fmt(frac * 100.0, 2) +
              "%), worst relative error " + fmt(worst, 6)};
}

Outcome criterion10(Suite& s) {
  const auto& r = s.run(s.doc("ours", kEps25, 0.05, 0, true, true));
  const auto strip = trigen::StripReport::from_json(trigen::read_json(r.dir / "strip.json"));
  const double mc = strip.clean.median();
  const double mt = strip.triggered.median();
  const bool pass = mt >= 0.8 * mc && strip.threshold.clean_rejected <= 0.10 && strip.threshold.triggered_rejected <= 0.5;
  return {10, "STRIP resistance (triggered median >= 0.8 x clean median, <= 50% triggered rejected)", pass,
          "median entropy clean " + fmt(mc) + " triggered " + fmt(mt) + " bits (ratio " + fmt(mt / mc) +
              "); threshold " + fmt(strip.threshold.threshold) + " rejects " +
              fmt(strip.threshold.clean_rejected * 100.0, 1) + "% clean, " +
              fmt(strip.threshold.triggered_rejected * 100.0, 1) + "% triggered"};
}

Outcome criterion11(Suite& s) {
  int ok = 0;
  std::string details;
  for (auto seed : kSeeds) {
    const auto& ours = s.run(s.doc("ours", kEps25, 0.05, seed, seed == 0, true));
    const auto& clba = s.run(s.doc("clba", 16.0, 0.05, seed, false, true));
    const auto ao = trigen::read_json(ours.dir / "augment.json");
    const auto ac = trigen::read_json(clba.dir / "augment.json");
    const double op = ao.at("asr_plain").get<double>(), oa = ao.at("asr").get<double>();
    const double cp = ac.at("asr_plain").get<double>(), ca = ac.at("asr").get<double>();
    const bool pass = oa >= op - 0.10 && ca <= cp;
    ok += pass ? 1 : 0;
    details += "seed " + std::to_string(seed) + ": ours " + fmt(op) + "->" + fmt(oa) + ", clba " + fmt(cp) + "->" +
               fmt(ca) + (pass ? " ok" : " miss") + "; ";
  }
  return {11, "augmentation resistance (ours drop <= 0.10, CLBA not improved, 2 of 3 seeds)", ok >= 2, details};
}

// Repeats the seed-0 headline experiment in a fresh output directory with
// fresh caches, so the clean model and generator are retrained from scratch.
Outcome criterion12(Suite& s) {
  const auto& first = s.run(s.doc("ours", kEps25, 0.05, 0, true, true));
  json d = s.doc("ours", kEps25, 0.05, 0, true, true);
  const auto fresh = s.work() / "repro";
  fs::remove_all(fresh);
  d["output_dir"] = (fresh / "runs").string();
  d["cache_dir"] = (fresh / "cache").string();
  const auto manifest = trigen::run_experiment(ExperimentConfig::from_json(d), trigen::Stage::kEvaluate);
  const auto again = trigen::read_json(manifest.run_dir / "report.json");
  double worst = 0.0;
  bool same_shape = true;
  for (const char* k : {"asr", "ba", "fr", "lpips_mean", "psnr_mean", "linf_max"}) {
    const auto& a = first.report.at("metrics").at(k);
    const auto& b = again.at("metrics").at(k);
    if (a.is_null() || b.is_null()) {
      same_shape = same_shape && a.is_null() && b.is_null();
      continue;
    }
    worst = std::max(worst, std::abs(a.get<double>() - b.get<double>()));
  }
  for (const char* k : {"asr", "ba", "fr"}) {
    worst = std::max(worst, std::abs(first.report.at("clean_model").at(k).get<double>() -
                                     again.at("clean_model").at(k).get<double>()));
  }
  return {12, "reproducibility (fresh rerun matches report metrics within 1e-4)", same_shape && worst <= 1e-4,
          "largest metric difference " + fmt(worst, 9) + " (config " + manifest.config_hash + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trigen desk-scale acceptance suite"};
  std::string work = "acceptance";
  app.add_option("--work-dir", work, "Directory for datasets, caches and runs")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const fs::path root(work);
  fs::create_directories(root);
  Suite suite(root);
  std::vector<Outcome> outcomes;
  // Property criteria first: cheap and independent of the trained models.
  const auto guarded = [&](int number, const char* what, const std::function<Outcome()>& fn) {
    try {
      outcomes.push_back(fn());
    } catch (const std::exception& e) {
      outcomes.push_back({number, what, false, std::string("error: ") + e.what()});
    }
    const auto& o = outcomes.back();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << o.number << ". " << o.description << ": " << o.details
              << std::endl;
  };
  guarded(8, "metric oracles", [] { return criterion8(); });
  guarded(9, "gradient check", [&] { return criterion9(root); });
  guarded(1, "desk attack effectiveness", [&] { return criterion1(suite); });
  guarded(2, "implantation separation", [&] { return criterion2(suite); });
  guarded(3, "monotonic eps trend", [&] { return criterion3(suite); });
  guarded(4, "baseline ordering", [&] { return criterion4(suite); });
  guarded(5, "poisoning-rate sweep", [&] { return criterion5(suite); });
  guarded(10, "STRIP resistance", [&] { return criterion10(suite); });
  guarded(11, "augmentation resistance", [&] { return criterion11(suite); });
  guarded(6, "clean-label audit", [&] { return criterion6(suite); });
  guarded(7, "trigger bound audit", [&] { return criterion7(suite); });
  guarded(12, "reproducibility", [&] { return criterion12(suite); });

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.number < b.number; });
  std::cout << "\nsummary\n";
  int failed = 0;
  for (const auto& o : outcomes) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << o.number << ". " << o.description << ": " << o.details << "\n";
    failed += o.pass ? 0 : 1;
  }
  std::cout << (outcomes.size() - static_cast<std::size_t>(failed)) << "/" << outcomes.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
