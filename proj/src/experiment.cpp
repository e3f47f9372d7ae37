// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/experiment.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <set>

#include <toml.hpp>

#include "trigen/baselines.hpp"
#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"
#include "trigen/hashing.hpp"
#include "trigen/log.hpp"
#include "trigen/metrics.hpp"
#include "trigen/perceptual.hpp"
#include "trigen/plot.hpp"
#include "trigen/strip.hpp"

namespace trigen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, where + " must be a table");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw Error(ErrorKind::kConfig, "unknown key '" + key + "' in " + where);
  }
}

const json& block(const json& j, const char* key) {
  static const json kEmpty = json::object();
  return j.contains(key) ? j.at(key) : kEmpty;
}

// Bound given either as "epsilon" (0-1) or "epsilon_255" (pixel levels).
std::optional<double> read_epsilon(const json& j) {
  if (j.contains("epsilon") && j.contains("epsilon_255")) {
    throw Error(ErrorKind::kConfig, "give either epsilon or epsilon_255, not both");
  }
  if (j.contains("epsilon")) return j.at("epsilon").get<double>();
  if (j.contains("epsilon_255")) return j.at("epsilon_255").get<double>() / 255.0;
  return std::nullopt;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string short_hash(const json& j) { return sha256_hex(j.dump()).substr(0, 16); }

// Builds into a scratch directory and renames it into place, so concurrent
// runs never observe a half-written cache entry.
template <typename Fn>
void publish_directory(const fs::path& target, Fn&& build) {
  if (fs::exists(target)) return;
  fs::create_directories(target.parent_path());
  const fs::path scratch = target.string() + ".tmp-" + std::to_string(::getpid());
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  try {
    build(scratch);
  } catch (...) {
    fs::remove_all(scratch);
    throw;
  }
  std::error_code ec;
  fs::rename(scratch, target, ec);
  if (ec) {
    fs::remove_all(scratch);
    if (!fs::exists(target)) throw Error(ErrorKind::kIo, "cannot publish " + target.string() + ": " + ec.message());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

PerceptualMetric perceptual_for(const ExperimentConfig& cfg) {
  if (cfg.perceptual == "desk-random") {
    const auto dir = cfg.cache() / "perceptual" / "desk-random";
    publish_directory(dir, [](const fs::path& scratch) { PerceptualMetric::write_desk_random(scratch / "net", 0); });
    return PerceptualMetric::load(dir / "net");
  }
  return PerceptualMetric::load(cfg.perceptual);
}

json dataset_key(const ExperimentConfig& cfg) {
  json j{{"profile", to_string(cfg.dataset.profile)}, {"root", cfg.dataset.root.string()}};
  if (cfg.dataset.synthetic) {
    const auto& s = cfg.dataset.synthetic_spec;
    j["synthetic"] = {{"train_per_class", s.train_per_class}, {"val_per_class", s.val_per_class}, {"seed", s.seed}};
  }
  return j;
}

TriggerGenerator generator_for(const ExperimentConfig& cfg, const DatasetSplit& split, const ClassifierModel& clean,
                               const PerceptualMetric& metric) {
  const json key{{"dataset", dataset_key(cfg)},
                 {"victim", clean.weights_hash()},
                 {"training", cfg.generator.to_json()},
                 {"architecture", cfg.generator_architecture.to_json()},
                 {"target_class", cfg.target_class},
                 {"perceptual", metric.identity()}};
  const auto dir = cfg.cache() / "generators" / short_hash(key);
  publish_directory(dir, [&](const fs::path& scratch) {
    log::info("training generator ", dir.filename().string(), " (epsilon ", cfg.epsilon * 255.0, "/255)");
    const auto dg = build_generator_dataset(split, cfg.target_class, cfg.seed);
    auto result = train_generator(clean, dg, metric, cfg.generator, cfg.generator_architecture, {scratch});
    result.generator.save(scratch / "generator");
    write_json(scratch / "key.json", key);
  });
  return TriggerGenerator::load(dir / "generator");
}

struct Attack {
  PoisonFn poison;
  TriggerFn trigger;
};

Attack attack_for(const ExperimentConfig& cfg, const DatasetSplit& split, const ClassifierModel& clean,
                  const std::optional<TriggerGenerator>& generator, const fs::path& dir, RunManifest& manifest) {
  switch (cfg.method) {
    case Method::kOurs: {
      const auto g = *generator;
      return {[g](const torch::Tensor& images, const torch::Tensor&) { return apply_trigger(images, g.triggers(images)); },
              generator_trigger_fn(g)};
    }
    case Method::kClba: {
      const auto size = cfg.patch_size > 0 ? cfg.patch_size : PatchTrigger::default_size(split.resolution);
      const auto patch = PatchTrigger::random(size, cfg.seed);
      patch.save(dir / "patch.pt");
      manifest.artifacts["patch"] = (dir / "patch.pt").string();
      const double eps = cfg.epsilon;
      return {[&clean, eps, patch](const torch::Tensor& images, const torch::Tensor& labels) {
                return clba_poison(clean, images, labels, eps, patch);
              },
              [patch](const torch::Tensor& images) { return apply_patch(images, patch); }};
    }
    case Method::kGrtba: {
      const auto noise = GlobalNoiseTrigger::sample(split.resolution, cfg.epsilon, cfg.seed);
      noise.save(dir / "noise.pt");
      manifest.artifacts["noise"] = (dir / "noise.pt").string();
      return {[noise](const torch::Tensor& images, const torch::Tensor&) { return grtba_poison(images, noise); },
              [noise](const torch::Tensor& images) { return grtba_poison(images, noise); }};
    }
  }
  throw Error(ErrorKind::kConfig, "unknown method");
}

void save_manifest(const RunManifest& m) { write_json(m.run_dir / "manifest.json", m.to_json()); }

ClassifierModel implant_cached(const fs::path& stem, const ClassifierModel& clean, const DatasetSplit& d_prime,
                               const ImplantConfig& config) {
  if (fs::exists(weights_path(stem)) && fs::exists(manifest_path(stem))) {
    auto model = ClassifierModel::load(stem);
    if (model.parent_hash() == clean.weights_hash()) return model;
    log::warn("discarding ", stem.string(), ": it was implanted from a different clean model");
  }
  auto model = implant(clean, d_prime, config);
  model.save(stem);
  return model;
}

}  // namespace

const char* toolkit_version() { return TRIGEN_VERSION; }

Method parse_method(const std::string& name) {
  if (name == "ours") return Method::kOurs;
  if (name == "clba") return Method::kClba;
  if (name == "grtba") return Method::kGrtba;
  throw Error(ErrorKind::kConfig, "unknown method '" + name + "' (expected ours, clba or grtba)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kOurs:
      return "ours";
    case Method::kClba:
      return "clba";
    case Method::kGrtba:
      return "grtba";
  }
  return "?";
}

double default_epsilon(Method method) {
  switch (method) {
    case Method::kOurs:
      return 25.0 / 255.0;
    case Method::kClba:
      return 16.0 / 255.0;
    case Method::kGrtba:
      return 40.0 / 255.0;
  }
  return 0.0;
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kTrainGenerator:
      return "train-generator";
    case Stage::kPoison:
      return "poison";
    case Stage::kImplant:
      return "implant";
    case Stage::kEvaluate:
      return "evaluate";
    case Stage::kDefendStrip:
      return "defend-strip";
    case Stage::kDefendAugment:
      return "defend-augment";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) { return from_json(read_document(path)); }

json ExperimentConfig::read_document(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::kConfig, "config file not found: " + path.string());
  json j;
  try {
    if (path.extension() == ".json") {
      std::ifstream in(path);
      j = json::parse(in);
    } else {
      auto table = toml::parse_file(path.string());
      std::ostringstream os;
      os << toml::json_formatter{table};
      j = json::parse(os.str());
    }
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "cannot parse " << path.string() << ": " << e.description() << " at line " << e.source().begin.line;
    throw Error(ErrorKind::kConfig, os.str());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, "cannot parse " + path.string() + ": " + e.what());
  }
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j,
               {"dataset", "target_class", "method", "epsilon", "epsilon_255", "lambda", "generator", "classifier",
                "perceptual", "implant", "patch_size", "defenses", "seed", "output_dir", "cache_dir"},
               "experiment config");
    c.method = parse_method(j.value("method", std::string("ours")));
    c.seed = j.value("seed", c.seed);
    c.target_class = j.value("target_class", c.target_class);
    c.epsilon = read_epsilon(j).value_or(default_epsilon(c.method));
    c.lambda = j.value("lambda", c.lambda);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) c.cache_dir = j.at("cache_dir").get<std::string>();
    c.perceptual = j.value("perceptual", c.perceptual);
    c.patch_size = j.value("patch_size", c.patch_size);

    const auto& d = block(j, "dataset");
    check_keys(d, {"profile", "root", "synthetic", "train_per_class", "val_per_class", "synthetic_seed"}, "[dataset]");
    c.dataset.profile = parse_profile(d.value("profile", std::string("cifar10")));
    if (!d.contains("root")) throw Error(ErrorKind::kConfig, "[dataset] needs a root");
    c.dataset.root = d.at("root").get<std::string>();
    c.dataset.synthetic = d.value("synthetic", false);
    c.dataset.synthetic_spec.train_per_class = d.value("train_per_class", c.dataset.synthetic_spec.train_per_class);
    c.dataset.synthetic_spec.val_per_class = d.value("val_per_class", c.dataset.synthetic_spec.val_per_class);
    c.dataset.synthetic_spec.seed = d.value("synthetic_seed", c.dataset.synthetic_spec.seed);
    c.dataset.synthetic_spec.image_size = profile_resolution(c.dataset.profile).height;
    const auto resolution = profile_resolution(c.dataset.profile);

    const auto& cl = block(j, "classifier");
    check_keys(cl, {"architecture", "width", "checkpoint", "pretrain"}, "[classifier]");
    c.classifier.spec.architecture =
        cl.value("architecture", std::string(resolution.height >= 224 ? "resnet18" : "resnet-mini"));
    c.classifier.spec.width = cl.value("width", c.classifier.spec.width);
    c.classifier.spec.class_count = kProfileClassCount;
    c.classifier.spec.input_resolution = resolution;
    if (cl.contains("checkpoint") && !cl.at("checkpoint").is_null()) {
      c.classifier.checkpoint = cl.at("checkpoint").get<std::string>();
    }
    const auto& pre = block(cl, "pretrain");
    check_keys(pre, {"epochs", "batch_size", "lr", "decay_epoch", "seed"}, "[classifier.pretrain]");
    c.classifier.pretrain = PretrainConfig::from_json(pre);

    const auto& g = block(j, "generator");
    check_keys(g,
               {"alpha", "beta", "gamma", "epsilon", "batch_size", "iterations_per_epoch", "epochs", "lr", "adam_betas",
                "seed", "architecture"},
               "[generator]");
    json gj = g;
    gj.erase("architecture");
    gj["epsilon"] = c.epsilon;
    gj["seed"] = c.seed;
    c.generator = GenTrainConfig::from_json(gj);
    c.generator_architecture = GeneratorArchitecture::default_for(resolution);
    const auto& ga = block(g, "architecture");
    check_keys(ga, {"depth", "base_channels", "norm_kind", "input_resolution"}, "[generator.architecture]");
    json aj = c.generator_architecture.to_json();
    for (const auto& [key, value] : ga.items()) {
      if (key != "input_resolution") aj[key] = value;
    }
    c.generator_architecture = GeneratorArchitecture::from_json(aj);

    const auto& im = block(j, "implant");
    check_keys(im, {"batch_size", "epochs", "lr", "adam_betas", "seed", "augmentation"}, "[implant]");
    json ij = im;
    ij["seed"] = c.seed;
    c.implant = ImplantConfig::from_json(ij);

    const auto& df = block(j, "defenses");
    check_keys(df, {"strip", "augment"}, "[defenses]");
    if (df.contains("strip") && !df.at("strip").is_null()) {
      const auto& s = df.at("strip");
      check_keys(s, {"n_overlays", "samples"}, "[defenses.strip]");
      StripDefenseConfig sc;
      sc.n_overlays = s.value("n_overlays", sc.n_overlays);
      sc.samples = s.value("samples", sc.samples);
      c.defenses.strip = sc;
    }
    if (df.contains("augment") && !df.at("augment").is_null()) {
      check_keys(df.at("augment"), {"rotation_degrees", "crop_scale", "hflip_prob"}, "[defenses.augment]");
      c.defenses.augment = AugmentationPolicy::from_json(df.at("augment"));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("invalid experiment config: ") + e.what());
  }
  c.resolve();
  c.validate();
  return c;
}

void ExperimentConfig::resolve() {
  generator.epsilon = epsilon;
  generator.seed = seed;
  implant.seed = seed;
  generator_architecture.input_resolution = profile_resolution(dataset.profile);
  classifier.spec.input_resolution = generator_architecture.input_resolution;
  dataset.synthetic_spec.image_size = generator_architecture.input_resolution.height;
}

void ExperimentConfig::validate() const {
  if (target_class < 0 || target_class >= kProfileClassCount) {
    throw Error(ErrorKind::kInvalidTarget, "target_class " + std::to_string(target_class) + " is outside [0, " +
                                               std::to_string(kProfileClassCount) + ")");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::kConfig, "epsilon must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::kConfig, "lambda must lie in [0, 1]");
  if (patch_size < 0) throw Error(ErrorKind::kConfig, "patch_size must be >= 0");
  if (dataset.root.empty()) throw Error(ErrorKind::kConfig, "dataset root is empty");
  generator.validate();
  generator_architecture.validate();
  classifier.spec.validate();
  classifier.pretrain.validate();
  implant.validate();
  if (defenses.strip && (defenses.strip->n_overlays < 1 || defenses.strip->samples < 1)) {
    throw Error(ErrorKind::kConfig, "STRIP n_overlays and samples must be >= 1");
  }
  if (defenses.augment) defenses.augment->validate();
}

json ExperimentConfig::to_json() const {
  json j{{"method", to_string(method)},
         {"seed", seed},
         {"target_class", target_class},
         {"epsilon", epsilon},
         {"lambda", lambda},
         {"perceptual", perceptual},
         {"output_dir", output_dir.string()},
         {"cache_dir", cache_dir ? json(cache_dir->string()) : json(nullptr)}};
  j["dataset"] = {{"profile", to_string(dataset.profile)}, {"root", dataset.root.string()},
                  {"synthetic", dataset.synthetic}};
  if (dataset.synthetic) {
    j["dataset"]["train_per_class"] = dataset.synthetic_spec.train_per_class;
    j["dataset"]["val_per_class"] = dataset.synthetic_spec.val_per_class;
    j["dataset"]["synthetic_seed"] = dataset.synthetic_spec.seed;
  }
  j["classifier"] = {{"architecture", classifier.spec.architecture},
                     {"width", classifier.spec.width},
                     {"pretrain", classifier.pretrain.to_json()}};
  if (classifier.checkpoint) j["classifier"]["checkpoint"] = classifier.checkpoint->string();
  if (method == Method::kOurs) {
    auto g = generator.to_json();
    auto a = generator_architecture.to_json();
    a.erase("input_resolution");
    g["architecture"] = a;
    j["generator"] = g;
  }
  if (method == Method::kClba) j["patch_size"] = patch_size;
  j["implant"] = implant.to_json();
  json d = json::object();
  if (defenses.strip) d["strip"] = {{"n_overlays", defenses.strip->n_overlays}, {"samples", defenses.strip->samples}};
  if (defenses.augment) d["augment"] = defenses.augment->to_json();
  j["defenses"] = d;
  return j;
}

std::string ExperimentConfig::hash() const {
  auto j = to_json();
  j.erase("output_dir");
  j.erase("cache_dir");
  return sha256_hex(j.dump()).substr(0, 20);
}

json RunManifest::to_json() const {
  return {{"config_hash", config_hash},       {"status", status},
          {"last_completed_stage", last_completed_stage},
          {"error", error},                   {"artifacts", artifacts},
          {"timestamps", {{"started", started_at}, {"finished", finished_at}}},
          {"toolkit_version", toolkit_version}, {"run_dir", run_dir.string()}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.status = j.at("status").get<std::string>();
  m.last_completed_stage = j.value("last_completed_stage", "");
  m.error = j.value("error", "");
  m.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
  m.started_at = j.at("timestamps").value("started", "");
  m.finished_at = j.at("timestamps").value("finished", "");
  m.toolkit_version = j.value("toolkit_version", "");
  m.run_dir = j.value("run_dir", "");
  return m;
}

RunManifest RunManifest::load(const fs::path& run_dir) {
  const auto path = run_dir / "manifest.json";
  if (!fs::exists(path)) throw Error(ErrorKind::kConfig, "no manifest in " + run_dir.string());
  try {
    auto m = from_json(read_json(path));
    m.run_dir = run_dir;
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, "malformed manifest " + path.string() + ": " + e.what());
  }
}

DatasetSplit dataset_for(const ExperimentConfig& cfg) {
  if (cfg.dataset.synthetic && !fs::exists(cfg.dataset.root)) {
    if (cfg.dataset.profile != DatasetProfile::kCifar10) {
      throw Error(ErrorKind::kConfig, "the synthetic dataset is only available for the cifar10 profile");
    }
    log::info("rendering the synthetic dataset into ", cfg.dataset.root.string());
    publish_directory(cfg.dataset.root,
                      [&](const fs::path& scratch) { write_synthetic_dataset(scratch, cfg.dataset.synthetic_spec); });
  }
  return load_dataset(cfg.dataset.root, cfg.dataset.profile);
}

ClassifierModel clean_model_for(const ExperimentConfig& cfg, const DatasetSplit& split) {
  if (cfg.classifier.checkpoint) {
    auto model = ClassifierModel::load(*cfg.classifier.checkpoint);
    if (model.class_count() != split.class_count()) {
      throw Error(ErrorKind::kConfig, "checkpoint " + cfg.classifier.checkpoint->string() + " has " +
                                          std::to_string(model.class_count()) + " classes");
    }
    return model;
  }
  const json key{{"dataset", dataset_key(cfg)},
                 {"architecture", cfg.classifier.spec.architecture},
                 {"width", cfg.classifier.spec.width},
                 {"pretrain", cfg.classifier.pretrain.to_json()}};
  const auto dir = cfg.cache() / "clean" / short_hash(key);
  publish_directory(dir, [&](const fs::path& scratch) {
    log::info("pretraining the clean ", cfg.classifier.spec.architecture, " classifier");
    auto model = pretrain_classifier(split, cfg.classifier.spec, cfg.classifier.pretrain);
    model.save(scratch / "model");
    write_json(scratch / "key.json", key);
  });
  auto model = ClassifierModel::load(dir / "model");
  model.freeze();
  return model;
}

RunManifest run_experiment(ExperimentConfig cfg, std::optional<Stage> until) {
  cfg.resolve();
  cfg.validate();
  const auto dir = cfg.run_dir();
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.config_hash = cfg.hash();
  manifest.status = "running";
  manifest.started_at = utc_now();
  manifest.toolkit_version = toolkit_version();
  manifest.run_dir = dir;
  write_json(dir / "config.json", cfg.to_json());
  manifest.artifacts["config"] = (dir / "config.json").string();
  save_manifest(manifest);

  const auto reached = [&](Stage s) {
    manifest.last_completed_stage = to_string(s);
    save_manifest(manifest);
    return until && *until == s;
  };
  const auto finish = [&]() {
    manifest.status = "completed";
    manifest.finished_at = utc_now();
    save_manifest(manifest);
    log::info("run ", manifest.config_hash, " completed through ", manifest.last_completed_stage);
    return manifest;
  };

  try {
    const auto split = dataset_for(cfg);
    if (cfg.target_class >= split.class_count()) {
      throw Error(ErrorKind::kInvalidTarget, "target_class " + std::to_string(cfg.target_class) + " does not exist");
    }
    const auto clean = clean_model_for(cfg, split);
    const auto metric = perceptual_for(cfg);

    std::optional<TriggerGenerator> generator;
    if (cfg.method == Method::kOurs) {
      generator = generator_for(cfg, split, clean, metric);
      generator->save(dir / "generator");
      manifest.artifacts["generator"] = (dir / "generator").string();
      if (reached(Stage::kTrainGenerator)) return finish();
    } else if (until && *until == Stage::kTrainGenerator) {
      throw Error(ErrorKind::kConfig, "train-generator only applies to method = \"ours\"");
    }

    // Poison.
    const auto plan = make_poison_plan(split, cfg.target_class, cfg.lambda, cfg.seed);
    plan.save(dir / "plan.json");
    manifest.artifacts["plan"] = (dir / "plan.json").string();
    const auto attack = attack_for(cfg, split, clean, generator, dir, manifest);
    const auto d_prime = build_poisoned_dataset(split, plan, attack.poison);
    int64_t label_mutations = 0;
    for (int64_t i = 0; i < split.train.size(); ++i) {
      if (split.train.labels()[static_cast<std::size_t>(i)] != d_prime.train.labels()[static_cast<std::size_t>(i)]) {
        ++label_mutations;
      }
    }
    const auto changed =
        (split.train.images() != d_prime.train.images()).flatten(1).any(1).sum().item<int64_t>();
    const json poison_summary{{"train_size", split.train.size()},
                              {"planned", planned_poison_count(cfg.lambda, split.train.size())},
                              {"poisoned", static_cast<int64_t>(plan.indices.size())},
                              {"changed_images", changed},
                              {"label_mutations", label_mutations}};
    write_json(dir / "poison.json", poison_summary);
    manifest.artifacts["poison"] = (dir / "poison.json").string();
    torch::Tensor clean_poison_src, poisoned_imgs;
    if (!plan.indices.empty()) {
      const auto idx = torch::tensor(plan.indices, torch::kLong);
      clean_poison_src = split.train.images().index_select(0, idx);
      poisoned_imgs = d_prime.train.images().index_select(0, idx);
      std::vector<torch::Tensor> grid;
      const int64_t shown = std::min<int64_t>(8, idx.size(0));
      for (int64_t i = 0; i < shown; ++i) grid.push_back(clean_poison_src[i]);
      for (int64_t i = 0; i < shown; ++i) grid.push_back(poisoned_imgs[i]);
      write_image_grid(dir / "poison_samples.png", grid, static_cast<int>(shown));
      manifest.artifacts["poison_samples"] = (dir / "poison_samples.png").string();
    }
    if (reached(Stage::kPoison)) return finish();

    // Implant.
    const auto backdoor = implant_cached(dir / "backdoor", clean, d_prime, cfg.implant);
    manifest.artifacts["backdoor"] = (dir / "backdoor").string();
    if (reached(Stage::kImplant)) return finish();

    // Evaluate.
    const auto nontarget = split.val.subset(split.val.indices_not_of(cfg.target_class)).images();
    MetricsReport metrics;
    metrics.config_ref = manifest.config_hash;
    metrics.asr = compute_asr(backdoor, nontarget, attack.trigger, cfg.target_class);
    metrics.ba = compute_ba(backdoor, split.val);
    metrics.fr = compute_fr(backdoor, split.val.images(), attack.trigger);
    StealthReport stealth;
    if (!plan.indices.empty()) stealth = compute_stealth(&metric, clean_poison_src, poisoned_imgs);
    metrics.lpips_mean = stealth.lpips_mean;
    metrics.psnr_mean = stealth.psnr_mean;
    metrics.linf_max = stealth.linf_max;

    json report{{"config_hash", manifest.config_hash},
                {"method", to_string(cfg.method)},
                {"dataset_profile", to_string(cfg.dataset.profile)},
                {"target_class", cfg.target_class},
                {"target_name", split.class_names[static_cast<std::size_t>(cfg.target_class)]},
                {"epsilon", cfg.epsilon},
                {"epsilon_255", cfg.epsilon * 255.0},
                {"lambda", cfg.lambda},
                {"seed", cfg.seed},
                {"metrics", metrics.to_json()},
                {"poison", poison_summary},
                {"psnr_identical_pairs", stealth.identical_pairs},
                {"perceptual", metric.identity()},
                {"definitions",
                 {{"fr", "fraction of inputs whose prediction differs from the same model on the clean input"},
                  {"asr", "fraction of triggered non-target validation images predicted as the target class"},
                  {"psnr", "dB on the 0-255 scale, identical pairs excluded"},
                  {"linf", "0-255 units"}}},
                {"toolkit_version", toolkit_version()}};
    const double clean_ba = compute_ba(clean, split.val);
    const double clean_asr = compute_asr(clean, nontarget, attack.trigger, cfg.target_class);
    const double clean_fr = compute_fr(clean, split.val.images(), attack.trigger);
    report["clean_model"] = {{"ba", clean_ba}, {"asr", clean_asr}, {"fr", clean_fr}};
    report["ba_drop"] = clean_ba - metrics.ba;
    if (generator) {
      const auto deltas = generator->triggers(split.val.images());
      const auto per_image = deltas.abs().flatten(1).amax(1);
      const auto applied =
          (apply_trigger(split.val.images(), deltas) - split.val.images()).abs().flatten(1).amax(1);
      const double bound = cfg.epsilon + 1e-6;
      report["trigger_bound"] = {{"checked", per_image.size(0)},
                                 {"violations", per_image.gt(bound).sum().item<int64_t>()},
                                 {"applied_violations", applied.gt(bound).sum().item<int64_t>()},
                                 {"max_linf_255", per_image.max().item<double>() * 255.0}};
    }

    const bool all = !until;
    const bool want_strip = (all && cfg.defenses.strip) || (until && *until == Stage::kDefendStrip);
    const bool want_augment = (all && cfg.defenses.augment) || (until && *until == Stage::kDefendAugment);
    json defenses = json::object();

    const auto write_report = [&]() {
      json r = report;
      if (!defenses.empty()) r["defenses"] = defenses;
      write_text(dir / "report.json", r.dump(2) + "\n");
      const auto& m = r["metrics"];
      std::string csv =
          "config_hash,method,epsilon_255,lambda,seed,asr,ba,fr,lpips_mean,psnr_mean,linf_max,asr_clean,fr_clean,"
          "ba_clean\n";
      csv += manifest.config_hash + "," + to_string(cfg.method) + "," + fmt(cfg.epsilon * 255.0) + "," +
             fmt(cfg.lambda) + "," + std::to_string(cfg.seed) + "," + fmt(metrics.asr) + "," + fmt(metrics.ba) + "," +
             fmt(metrics.fr) + "," + fmt(metrics.lpips_mean) + "," +
             (m["psnr_mean"].is_null() ? std::string() : fmt(*metrics.psnr_mean)) + "," + fmt(metrics.linf_max) +
             "," + fmt(clean_asr) + "," + fmt(clean_fr) + "," + fmt(clean_ba) + "\n";
      write_text(dir / "report.csv", csv);
      manifest.artifacts["report"] = (dir / "report.json").string();
      manifest.artifacts["report_csv"] = (dir / "report.csv").string();
    };

    if (all || *until == Stage::kEvaluate) {
      write_report();
      if (reached(Stage::kEvaluate)) return finish();
    } else {
      // Defense verbs still need the evaluation on disk.
      if (!fs::exists(dir / "report.json")) write_report();
      manifest.last_completed_stage = to_string(Stage::kEvaluate);
    }

    if (want_strip) {
      const auto sc = cfg.defenses.strip.value_or(StripDefenseConfig{});
      auto candidates = split.val.indices_not_of(cfg.target_class);
      std::mt19937_64 rng(cfg.seed);
      std::shuffle(candidates.begin(), candidates.end(), rng);
      candidates.resize(static_cast<std::size_t>(std::min<int64_t>(sc.samples, static_cast<int64_t>(candidates.size()))));
      std::sort(candidates.begin(), candidates.end());
      const auto idx = torch::tensor(candidates, torch::kLong);
      const auto images = split.val.images().index_select(0, idx);
      StripReport sr;
      sr.options = {sc.n_overlays, cfg.seed};
      std::tie(sr.clean, sr.triggered) =
          strip_evaluate(backdoor, {images, candidates}, {attack.trigger(images), candidates}, split.val.images(),
                         sr.options);
      sr.threshold = strip_threshold(sr.clean, sr.triggered);
      write_json(dir / "strip.json", sr.to_json());
      write_entropy_histogram(dir / "strip_hist.png", sr.clean.per_sample_entropy, sr.triggered.per_sample_entropy);
      manifest.artifacts["strip"] = (dir / "strip.json").string();
      manifest.artifacts["strip_hist"] = (dir / "strip_hist.png").string();
      log::info("STRIP medians: clean ", sr.clean.median(), " triggered ", sr.triggered.median());
      defenses["strip"] = {{"median_clean", sr.clean.median()},
                           {"median_triggered", sr.triggered.median()},
                           {"threshold", sr.threshold.threshold},
                           {"triggered_rejected", sr.threshold.triggered_rejected}};
      if (reached(Stage::kDefendStrip)) return finish();
    }

    if (want_augment) {
      auto icfg = cfg.implant;
      icfg.augmentation = cfg.defenses.augment.value_or(AugmentationPolicy{});
      const auto hardened = implant_cached(dir / "backdoor_augmented", clean, d_prime, icfg);
      manifest.artifacts["backdoor_augmented"] = (dir / "backdoor_augmented").string();
      const json aug{{"policy", icfg.augmentation->to_json()},
                     {"asr", compute_asr(hardened, nontarget, attack.trigger, cfg.target_class)},
                     {"ba", compute_ba(hardened, split.val)},
                     {"asr_plain", metrics.asr},
                     {"ba_plain", metrics.ba}};
      write_json(dir / "augment.json", aug);
      manifest.artifacts["augment"] = (dir / "augment.json").string();
      log::info("augmented retraining: ASR ", aug["asr"].get<double>(), " (plain ", metrics.asr, ")");
      defenses["augment"] = aug;
      if (reached(Stage::kDefendAugment)) return finish();
    }

    if (all) {
      write_report();
      save_manifest(manifest);
    }
    return finish();
  } catch (const std::exception& e) {
    manifest.status = "failed";
    manifest.error = e.what();
    manifest.finished_at = utc_now();
    save_manifest(manifest);
    throw;
  }
}

}  // namespace trigen
