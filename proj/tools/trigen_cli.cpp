// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: one verb per pipeline stage, plus helpers for the
// desk-scale dataset, clean-model pretraining and perceptual networks.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trigen/checkpoint.hpp"
#include "trigen/compare.hpp"
#include "trigen/data.hpp"
#include "trigen/error.hpp"
#include "trigen/experiment.hpp"
#include "trigen/log.hpp"
#include "trigen/perceptual.hpp"

namespace {

namespace fs = std::filesystem;
using trigen::Error;
using trigen::ErrorKind;

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> profile;
  std::string device = "auto";
  std::optional<std::string> method;
  std::optional<double> lambda;
  std::optional<double> epsilon_255;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (TOML, or JSON by extension)")->required();
  cmd->add_option("--seed", f.seed, "Override the experiment seed");
  cmd->add_option("--out", f.out, "Override the output directory");
  cmd->add_option("--profile", f.profile, "Dataset profile: imagenette-160 or cifar10");
  cmd->add_option("--device", f.device, "auto, cpu or an accelerator index")->capture_default_str();
  cmd->add_option("--method", f.method, "Override the method: ours, clba or grtba");
  cmd->add_option("--lambda", f.lambda, "Override the poisoning rate");
  cmd->add_option("--epsilon-255", f.epsilon_255, "Override the l-infinity bound, in 0-255 units");
}

void check_device(const std::string& device) {
  if (device == "auto" || device == "cpu") return;
  try {
    std::size_t used = 0;
    (void)std::stoul(device, &used);
    if (used != device.size()) throw std::invalid_argument(device);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kConfig, "--device must be auto, cpu or an accelerator index, got '" + device + "'");
  }
  throw Error(ErrorKind::kConfig, "accelerator " + device + " requested, but this build computes on the CPU only");
}

trigen::ExperimentConfig load_config(const CommonFlags& f) {
  check_device(f.device);
  auto doc = trigen::ExperimentConfig::read_document(f.config);
  if (f.seed) doc["seed"] = *f.seed;
  if (f.out) doc["output_dir"] = *f.out;
  if (f.profile) doc["dataset"]["profile"] = *f.profile;
  if (f.method) {
    doc["method"] = *f.method;
    // A method switch without an explicit bound takes that method's default.
    if (!f.epsilon_255) {
      doc.erase("epsilon");
      doc.erase("epsilon_255");
    }
  }
  if (f.lambda) doc["lambda"] = *f.lambda;
  if (f.epsilon_255) {
    doc.erase("epsilon");
    doc["epsilon_255"] = *f.epsilon_255;
  }
  return trigen::ExperimentConfig::from_json(doc);
}

void print_outcome(const trigen::RunManifest& m) {
  std::cout << "run " << m.config_hash << " " << m.status << " (last stage: " << m.last_completed_stage << ")\n"
            << "  directory: " << m.run_dir.string() << "\n";
  const auto report = m.run_dir / "report.json";
  if (fs::exists(report)) {
    const auto r = trigen::read_json(report);
    std::cout << "  metrics: " << r.at("metrics").dump() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trigen: clean-label backdoor attacks with image-specific triggers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(trigen::toolkit_version()));
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");
  app.fallthrough();

  CommonFlags flags;
  struct StageVerb {
    const char* name;
    const char* help;
    std::optional<trigen::Stage> until;
  };
  const std::vector<StageVerb> verbs{
      {"train-generator", "Train (or reuse) the trigger generator", trigen::Stage::kTrainGenerator},
      {"poison", "Build the poisoned training set", trigen::Stage::kPoison},
      {"implant", "Fine-tune the clean model on the poisoned set", trigen::Stage::kImplant},
      {"evaluate", "Compute ASR, BA, FR and stealth metrics", trigen::Stage::kEvaluate},
      {"run", "Run every configured stage end to end", std::nullopt},
  };
  std::optional<trigen::Stage> selected;
  bool stage_verb = false;
  for (const auto& v : verbs) {
    auto* cmd = app.add_subcommand(v.name, v.help);
    add_common(cmd, flags);
    cmd->callback([&, v]() {
      selected = v.until;
      stage_verb = true;
    });
  }
  auto* defend = app.add_subcommand("defend", "Evaluate a defense against the backdoor model");
  defend->require_subcommand(1);
  auto* strip = defend->add_subcommand("strip", "STRIP entropy screening");
  add_common(strip, flags);
  strip->callback([&]() {
    selected = trigen::Stage::kDefendStrip;
    stage_verb = true;
  });
  auto* augment = defend->add_subcommand("augment", "Augmented retraining");
  add_common(augment, flags);
  augment->callback([&]() {
    selected = trigen::Stage::kDefendAugment;
    stage_verb = true;
  });

  std::vector<std::string> compare_runs;
  std::string compare_out = "comparison";
  auto* compare = app.add_subcommand("compare", "Merge finished runs into tables and plots");
  compare->add_option("runs", compare_runs, "Run directories (each holding report.json)")->required();
  compare->add_option("--out", compare_out, "Output directory")->capture_default_str();

  trigen::SyntheticDatasetSpec synth;
  std::string synth_out;
  auto* make_synthetic = app.add_subcommand("make-synthetic", "Render the desk-scale shapes dataset");
  make_synthetic->add_option("--out", synth_out, "Dataset root")->required();
  make_synthetic->add_option("--train-per-class", synth.train_per_class)->capture_default_str();
  make_synthetic->add_option("--val-per-class", synth.val_per_class)->capture_default_str();
  make_synthetic->add_option("--seed", synth.seed)->capture_default_str();

  CommonFlags pretrain_flags;
  auto* pretrain = app.add_subcommand("pretrain", "Train (or reuse) the clean classifier of a config");
  add_common(pretrain, pretrain_flags);

  std::string perceptual_out;
  std::string backbone = "desk-random";
  uint64_t perceptual_seed = 0;
  auto* make_perceptual = app.add_subcommand("make-perceptual", "Write a perceptual-distance network");
  make_perceptual->add_option("--out", perceptual_out, "Checkpoint stem")->required();
  make_perceptual->add_option("--backbone", backbone, "Only desk-random is generated here")->capture_default_str();
  make_perceptual->add_option("--seed", perceptual_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (verbose) trigen::log::set_level(trigen::log::Level::kDebug);
  if (quiet) trigen::log::set_level(trigen::log::Level::kWarn);

  try {
    if (stage_verb) {
      const auto manifest = trigen::run_experiment(load_config(flags), selected);
      print_outcome(manifest);
    } else if (compare->parsed()) {
      std::vector<fs::path> dirs(compare_runs.begin(), compare_runs.end());
      const auto c = trigen::compare_runs(dirs);
      trigen::write_comparison(c, dirs, compare_out);
      std::cout << trigen::format_comparison_table(c) << "written to " << compare_out << "\n";
    } else if (make_synthetic->parsed()) {
      trigen::write_synthetic_dataset(synth_out, synth);
      std::cout << "synthetic dataset written to " << synth_out << "\n";
    } else if (pretrain->parsed()) {
      const auto cfg = load_config(pretrain_flags);
      const auto split = trigen::dataset_for(cfg);
      const auto model = trigen::clean_model_for(cfg, split);
      std::cout << "clean model " << model.weights_hash().substr(0, 16) << " ready in " << cfg.cache().string()
                << "/clean\n";
    } else if (make_perceptual->parsed()) {
      if (backbone != "desk-random") {
        throw Error(ErrorKind::kConfig,
                    "only desk-random is generated here; write alex with tools/export_lpips_alex.py");
      }
      trigen::PerceptualMetric::write_desk_random(perceptual_out, perceptual_seed);
      std::cout << "perceptual network written to " << perceptual_out << ".{pt,json}\n";
    }
  } catch (const trigen::Error& e) {
    std::cerr << "trigen: " << e.what() << "\n";
    return trigen::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "trigen: runtime failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
