// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"
#include "trigen/log.hpp"

namespace trigen {

namespace {

using torch::nn::BatchNorm2d;
using torch::nn::Conv2d;
using torch::nn::Conv2dOptions;

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int64_t in, int64_t out, int64_t stride)
      : conv1_(Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)),
        bn1_(out),
        conv2_(Conv2dOptions(out, out, 3).padding(1).bias(false)),
        bn2_(out) {
    register_module("conv1", conv1_);
    register_module("bn1", bn1_);
    register_module("conv2", conv2_);
    register_module("bn2", bn2_);
    if (stride != 1 || in != out) {
      shortcut_ = torch::nn::Sequential(Conv2d(Conv2dOptions(in, out, 1).stride(stride).bias(false)), BatchNorm2d(out));
      register_module("shortcut", shortcut_);
    }
  }

  torch::Tensor forward(torch::Tensor x) {
    auto y = torch::relu(bn1_(conv1_(x)));
    y = bn2_(conv2_(y));
    return torch::relu(y + (shortcut_ ? shortcut_->forward(x) : x));
  }

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(BasicBlock);

// Residual CNN: a stem followed by stages of basic blocks, global average
// pooling and a linear head.
class ResNetImpl : public ClassifierNetImpl {
 public:
  ResNetImpl(bool imagenet_stem, const std::vector<int64_t>& widths, const std::vector<int64_t>& blocks,
             int64_t classes) {
    if (imagenet_stem) {
      stem_->push_back(Conv2d(Conv2dOptions(3, widths[0], 7).stride(2).padding(3).bias(false)));
      stem_->push_back(BatchNorm2d(widths[0]));
      stem_->push_back(torch::nn::ReLU());
      stem_->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2).padding(1)));
    } else {
      stem_->push_back(Conv2d(Conv2dOptions(3, widths[0], 3).padding(1).bias(false)));
      stem_->push_back(BatchNorm2d(widths[0]));
      stem_->push_back(torch::nn::ReLU());
    }
    int64_t in = widths[0];
    for (std::size_t s = 0; s < widths.size(); ++s) {
      for (int64_t b = 0; b < blocks[s]; ++b) {
        const int64_t stride = (s > 0 && b == 0) ? 2 : 1;
        stages_->push_back(BasicBlock(in, widths[s], stride));
        in = widths[s];
      }
    }
    fc_ = torch::nn::Linear(in, classes);
    register_module("stem", stem_);
    register_module("stages", stages_);
    register_module("fc", fc_);
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = stages_->forward(stem_->forward(x));
    return fc_(torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1));
  }

 private:
  torch::nn::Sequential stem_;
  torch::nn::Sequential stages_;
  torch::nn::Linear fc_{nullptr};
};

class TinyCnnImpl : public ClassifierNetImpl {
 public:
  TinyCnnImpl(int64_t width, int64_t classes)
      : conv_(Conv2dOptions(3, width, 3).padding(1)), fc_(width, classes) {
    register_module("conv", conv_);
    register_module("fc", fc_);
  }
  torch::Tensor forward(torch::Tensor x) override {
    return fc_(torch::adaptive_avg_pool2d(torch::tanh(conv_(x)), {1, 1}).flatten(1));
  }

 private:
  Conv2d conv_;
  torch::nn::Linear fc_;
};

class LinearNetImpl : public ClassifierNetImpl {
 public:
  LinearNetImpl(int64_t inputs, int64_t classes) : fc_(inputs, classes) { register_module("fc", fc_); }
  torch::Tensor forward(torch::Tensor x) override { return fc_(x.flatten(1)); }

 private:
  torch::nn::Linear fc_;
};

torch::Tensor channel_tensor(const std::array<double, 3>& v) {
  return torch::tensor({v[0], v[1], v[2]}, torch::kFloat32).view({1, 3, 1, 1});
}

constexpr int64_t kEvalChunk = 256;

}  // namespace

void ClassifierSpec::validate() const {
  static const std::vector<std::string> known = {"resnet-mini", "resnet18", "tiny-cnn", "linear"};
  if (std::find(known.begin(), known.end(), architecture) == known.end()) {
    throw Error(ErrorKind::kConfig, "unknown classifier architecture '" + architecture + "'");
  }
  if (class_count < 2) throw Error(ErrorKind::kConfig, "class_count must be >= 2");
  if (width < 1) throw Error(ErrorKind::kConfig, "width must be positive");
  for (double s : stddev) {
    if (!(s > 0.0)) throw Error(ErrorKind::kConfig, "normalization stddev must be positive");
  }
}

nlohmann::json ClassifierSpec::to_json() const {
  return {{"architecture", architecture},
          {"class_count", class_count},
          {"width", width},
          {"input_resolution", {input_resolution.height, input_resolution.width}},
          {"normalization", {{"mean", mean}, {"std", stddev}}}};
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
  ClassifierSpec s;
  s.architecture = j.at("architecture").get<std::string>();
  s.class_count = j.at("class_count").get<int64_t>();
  s.width = j.value("width", s.width);
  if (j.contains("input_resolution")) {
    auto r = j.at("input_resolution").get<std::vector<int64_t>>();
    s.input_resolution = {r.at(0), r.at(1)};
  }
  if (j.contains("normalization")) {
    s.mean = j.at("normalization").at("mean").get<std::array<double, 3>>();
    s.stddev = j.at("normalization").at("std").get<std::array<double, 3>>();
  }
  s.validate();
  return s;
}

std::shared_ptr<ClassifierNetImpl> make_classifier_net(const ClassifierSpec& spec) {
  spec.validate();
  const auto w = spec.width;
  if (spec.architecture == "resnet-mini") {
    return std::make_shared<ResNetImpl>(false, std::vector<int64_t>{w, 2 * w, 4 * w}, std::vector<int64_t>{1, 1, 1},
                                        spec.class_count);
  }
  if (spec.architecture == "resnet18") {
    return std::make_shared<ResNetImpl>(true, std::vector<int64_t>{64, 128, 256, 512}, std::vector<int64_t>{2, 2, 2, 2},
                                        spec.class_count);
  }
  if (spec.architecture == "tiny-cnn") return std::make_shared<TinyCnnImpl>(w, spec.class_count);
  return std::make_shared<LinearNetImpl>(3 * spec.input_resolution.height * spec.input_resolution.width,
                                         spec.class_count);
}

std::string to_string(Provenance p) { return p == Provenance::kClean ? "clean" : "backdoor"; }

ClassifierModel::ClassifierModel(const ClassifierSpec& spec, uint64_t seed) : spec_(spec) {
  torch::manual_seed(seed);
  net_ = make_classifier_net(spec_);
  mean_ = channel_tensor(spec_.mean);
  stddev_ = channel_tensor(spec_.stddev);
}

ClassifierModel::ClassifierModel(const ClassifierSpec& spec, std::shared_ptr<ClassifierNetImpl> net)
    : spec_(spec), net_(std::move(net)) {
  if (!net_) throw Error(ErrorKind::kConfig, "classifier network is null");
  mean_ = channel_tensor(spec_.mean);
  stddev_ = channel_tensor(spec_.stddev);
}

void ClassifierModel::set_provenance(Provenance p, std::string parent_hash) {
  provenance_ = p;
  parent_hash_ = std::move(parent_hash);
}

void ClassifierModel::set_training(bool training) const { net_->train(training); }

void ClassifierModel::freeze() const {
  for (auto& p : net_->parameters()) p.set_requires_grad(false);
  net_->eval();
}

torch::Tensor ClassifierModel::logits(const torch::Tensor& images) const {
  if (images.dim() != 4 || images.size(1) != 3) throw Error(ErrorKind::kShape, "classifier expects [N, 3, H, W]");
  auto mean = mean_.to(images.dtype());
  auto stddev = stddev_.to(images.dtype());
  auto out = net_->forward((images - mean) / stddev);
  if (out.dim() != 2 || out.size(1) != spec_.class_count) {
    throw Error(ErrorKind::kShape, "classifier head width differs from class_count");
  }
  return out;
}

torch::Tensor ClassifierModel::eval_logits(const torch::Tensor& images) const {
  torch::NoGradGuard no_grad;
  const bool was_training = net_->is_training();
  net_->eval();
  std::vector<torch::Tensor> parts;
  for (int64_t start = 0; start < images.size(0); start += kEvalChunk) {
    parts.push_back(logits(images.slice(0, start, std::min(start + kEvalChunk, images.size(0)))));
  }
  if (was_training) net_->train();
  if (parts.empty()) return torch::empty({0, spec_.class_count});
  return torch::cat(parts);
}

torch::Tensor ClassifierModel::probabilities(const torch::Tensor& images) const {
  return torch::softmax(eval_logits(images), 1);
}

torch::Tensor ClassifierModel::predict(const torch::Tensor& images) const {
  // argmax returns the first maximal index, which is the tie-break rule.
  return eval_logits(images).argmax(1);
}

int64_t ClassifierModel::predict(const LabeledImage& image) const {
  return predict(image.pixels.unsqueeze(0)).item<int64_t>();
}

std::string ClassifierModel::weights_hash() const { return module_hash(*net_); }

ClassifierModel ClassifierModel::clone() const {
  auto net = make_classifier_net(spec_);
  copy_module_state(*net_, *net);
  net->train(net_->is_training());
  ClassifierModel copy(spec_, net);
  copy.provenance_ = provenance_;
  copy.parent_hash_ = parent_hash_;
  return copy;
}

void ClassifierModel::save(const std::filesystem::path& stem) const {
  save_tensors(weights_path(stem), module_state(*net_));
  auto j = spec_.to_json();
  j["kind"] = "classifier";
  j["provenance"] = to_string(provenance_);
  j["parent_hash"] = parent_hash_;
  j["weights_sha256"] = weights_hash();
  write_json(manifest_path(stem), j);
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& stem) {
  const auto manifest = read_json(manifest_path(stem));
  try {
    auto spec = ClassifierSpec::from_json(manifest);
    ClassifierModel model(spec, make_classifier_net(spec));
    load_module_state(*model.net_, load_tensors(weights_path(stem)));
    model.provenance_ = manifest.value("provenance", "clean") == "backdoor" ? Provenance::kBackdoor : Provenance::kClean;
    model.parent_hash_ = manifest.value("parent_hash", "");
    model.net_->eval();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "malformed classifier manifest " + manifest_path(stem).string() + ": " + e.what());
  }
}

double fit_classifier(ClassifierModel& model, const ImageSet& data, const FitOptions& options) {
  if (options.epochs < 1 || options.batch_size < 1) throw Error(ErrorKind::kConfig, "epochs and batch_size must be >= 1");
  if (data.empty()) throw Error(ErrorKind::kConfig, "cannot fit on an empty set");
  auto& net = model.net();
  for (auto& p : net.parameters()) p.set_requires_grad(true);
  torch::optim::Adam optimizer(net.parameters(),
                               torch::optim::AdamOptions(options.lr).betas({options.betas[0], options.betas[1]}));
  const auto labels = data.labels_tensor();
  std::vector<int64_t> order(static_cast<std::size_t>(data.size()));
  std::mt19937_64 rng(options.seed);
  double last_epoch_loss = 0.0;
  uint64_t step = 0;
  torch::manual_seed(options.seed);
  for (int64_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.decay_epoch >= 0 && epoch == options.decay_epoch) {
      for (auto& group : optimizer.param_groups()) {
        auto& o = static_cast<torch::optim::AdamOptions&>(group.options());
        o.lr(o.lr() * 0.1);
      }
    }
    model.set_training(true);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int64_t batches = 0;
    for (int64_t start = 0; start < data.size(); start += options.batch_size) {
      const auto end = std::min<int64_t>(start + options.batch_size, data.size());
      auto idx = torch::tensor(std::vector<int64_t>(order.begin() + start, order.begin() + end), torch::kLong);
      auto x = data.images().index_select(0, idx);
      if (options.transform) x = options.transform(x, step);
      auto loss = torch::cross_entropy_loss(model.logits(x), labels.index_select(0, idx));
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        model.set_training(false);
        throw Error(ErrorKind::kDivergence, "classifier loss became non-finite at step " + std::to_string(step));
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      total += value;
      ++batches;
      ++step;
    }
    last_epoch_loss = total / static_cast<double>(batches);
    log::debug("fit epoch ", epoch, " loss ", last_epoch_loss);
  }
  model.set_training(false);
  return last_epoch_loss;
}

void PretrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw Error(ErrorKind::kConfig, "pretrain epochs and batch_size must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kConfig, "pretrain lr must be positive");
}

nlohmann::json PretrainConfig::to_json() const {
  return {{"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"decay_epoch", decay_epoch}, {"seed", seed}};
}

PretrainConfig PretrainConfig::from_json(const nlohmann::json& j) {
  PretrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.decay_epoch = j.value("decay_epoch", c.decay_epoch);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::pair<std::array<double, 3>, std::array<double, 3>> channel_statistics(const torch::Tensor& images) {
  auto per_channel = images.transpose(0, 1).reshape({3, -1}).to(torch::kFloat64);
  auto mean = per_channel.mean(1);
  auto stddev = per_channel.std(1, /*unbiased=*/false);
  std::array<double, 3> m{}, s{};
  for (int k = 0; k < 3; ++k) {
    m[k] = mean[k].item<double>();
    s[k] = std::max(stddev[k].item<double>(), 1e-6);
  }
  return {m, s};
}

ClassifierModel pretrain_classifier(const DatasetSplit& split, ClassifierSpec spec, const PretrainConfig& config) {
  config.validate();
  spec.class_count = split.class_count();
  spec.input_resolution = split.resolution;
  std::tie(spec.mean, spec.stddev) = channel_statistics(split.train.images());
  ClassifierModel model(spec, config.seed);
  FitOptions fit;
  fit.epochs = config.epochs;
  fit.batch_size = config.batch_size;
  fit.lr = config.lr;
  fit.betas = {0.9, 0.999};
  fit.seed = config.seed;
  fit.decay_epoch = config.decay_epoch;
  const double loss = fit_classifier(model, split.train, fit);
  log::info("pretrained ", spec.architecture, " for ", config.epochs, " epochs, final train loss ", loss);
  model.set_provenance(Provenance::kClean, "");
  return model;
}

}  // namespace trigen
