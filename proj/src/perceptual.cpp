// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/perceptual.hpp"

#include <cmath>
#include <fstream>

#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"
#include "trigen/hashing.hpp"

namespace fs = std::filesystem;

namespace trigen {

namespace {

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  Sha256 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex_digest();
}

}  // namespace

PerceptualMetric PerceptualMetric::load(const fs::path& stem) {
  const auto manifest_file = manifest_path(stem);
  const auto weights_file = weights_path(stem);
  if (!fs::exists(manifest_file) || !fs::exists(weights_file)) {
    throw Error(ErrorKind::kInitialization,
                "perceptual network weights not found at " + stem.string() + ".{json,pt}; run `trigen make-perceptual`");
  }
  PerceptualMetric m;
  try {
    const auto manifest = read_json(manifest_file);
    const auto tensors = load_tensors(weights_file);
    auto get = [&](const std::string& name) {
      auto it = tensors.find(name);
      if (it == tensors.end()) throw Error(ErrorKind::kInitialization, "perceptual weights lack '" + name + "'");
      return it->second.to(torch::kFloat32);
    };
    m.backbone_ = manifest.at("backbone").get<std::string>();
    int64_t index = 0;
    for (const auto& spec : manifest.at("layers")) {
      Layer layer;
      layer.kind = spec.at("kind").get<std::string>();
      layer.stride = spec.value("stride", int64_t{1});
      layer.padding = spec.value("padding", int64_t{0});
      layer.kernel = spec.value("kernel", int64_t{0});
      layer.tap = spec.value("tap", false);
      if (layer.kind == "conv") {
        const auto prefix = "features." + std::to_string(index);
        layer.weight = get(prefix + ".weight");
        layer.bias = get(prefix + ".bias");
      } else if (layer.kind != "relu" && layer.kind != "maxpool") {
        throw Error(ErrorKind::kInitialization, "unknown perceptual layer kind '" + layer.kind + "'");
      }
      m.layers_.push_back(std::move(layer));
      ++index;
    }
    int64_t taps = 0;
    for (const auto& l : m.layers_) taps += l.tap ? 1 : 0;
    for (int64_t k = 0; k < taps; ++k) m.lin_.push_back(get("lin" + std::to_string(k) + ".weight").clamp_min(0.0));
    m.shift_ = get("scaling.shift").view({1, 3, 1, 1});
    m.scale_ = get("scaling.scale").view({1, 3, 1, 1});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInitialization, "malformed perceptual manifest: " + std::string(e.what()));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInitialization) throw;
    throw Error(ErrorKind::kInitialization, e.what());
  }
  m.identity_ = m.backbone_ + "@sha256:" + file_sha256(weights_file);
  return m;
}

void PerceptualMetric::write_desk_random(const fs::path& stem, uint64_t seed) {
  struct ConvSpec {
    int64_t in, out, stride;
  };
  const ConvSpec convs[] = {{3, 32, 1}, {32, 64, 2}, {64, 128, 2}, {128, 128, 2}};
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  TensorMap tensors;
  nlohmann::json layers = nlohmann::json::array();
  int64_t index = 0;
  int64_t tap = 0;
  for (const auto& c : convs) {
    const double fan_in = static_cast<double>(c.in * 9);
    tensors["features." + std::to_string(index) + ".weight"] =
        at::normal(0.0, std::sqrt(2.0 / fan_in), {c.out, c.in, 3, 3}, gen);
    tensors["features." + std::to_string(index) + ".bias"] = torch::zeros({c.out});
    layers.push_back({{"kind", "conv"}, {"stride", c.stride}, {"padding", 1}});
    ++index;
    layers.push_back({{"kind", "relu"}, {"tap", true}});
    ++index;
    tensors["lin" + std::to_string(tap) + ".weight"] = torch::ones({1, c.out, 1, 1});
    ++tap;
  }
  tensors["scaling.shift"] = torch::zeros({3});
  tensors["scaling.scale"] = torch::ones({3});
  save_tensors(weights_path(stem), tensors);
  write_json(manifest_path(stem), {{"kind", "perceptual_network"},
                                   {"backbone", "desk-random"},
                                   {"seed", seed},
                                   {"layers", layers}});
}

void PerceptualMetric::to(torch::Dtype dtype) {
  for (auto& l : layers_) {
    if (l.weight.defined()) l.weight = l.weight.to(dtype);
    if (l.bias.defined()) l.bias = l.bias.to(dtype);
  }
  for (auto& w : lin_) w = w.to(dtype);
  shift_ = shift_.to(dtype);
  scale_ = scale_.to(dtype);
}

std::vector<torch::Tensor> PerceptualMetric::features(torch::Tensor x) const {
  x = (x * 2.0 - 1.0 - shift_.to(x.dtype())) / scale_.to(x.dtype());
  std::vector<torch::Tensor> taps;
  for (const auto& l : layers_) {
    if (l.kind == "conv") {
      x = torch::conv2d(x, l.weight.to(x.dtype()), l.bias.to(x.dtype()), l.stride, l.padding);
    } else if (l.kind == "relu") {
      x = torch::relu(x);
    } else {
      x = torch::max_pool2d(x, l.kernel, l.stride);
    }
    if (l.tap) taps.push_back(x);
  }
  return taps;
}

torch::Tensor PerceptualMetric::distance(const torch::Tensor& a, const torch::Tensor& b) const {
  if (a.sizes() != b.sizes() || a.dim() != 4 || a.size(1) != 3) {
    throw Error(ErrorKind::kPairing, "perceptual distance needs two aligned [N, 3, H, W] batches");
  }
  const auto fa = features(a);
  const auto fb = features(b);
  auto total = torch::zeros({a.size(0)}, a.options());
  for (std::size_t k = 0; k < fa.size(); ++k) {
    auto na = fa[k] / (fa[k].pow(2).sum(1, true).sqrt() + 1e-10);
    auto nb = fb[k] / (fb[k].pow(2).sum(1, true).sqrt() + 1e-10);
    auto weighted = torch::conv2d((na - nb).pow(2), lin_[k].to(a.dtype()));
    total = total + weighted.mean({1, 2, 3});
  }
  return total;
}

torch::Tensor PerceptualMetric::distances(const torch::Tensor& a, const torch::Tensor& b) const {
  if (a.sizes() != b.sizes()) throw Error(ErrorKind::kPairing, "perceptual distance needs aligned batches");
  torch::NoGradGuard no_grad;
  constexpr int64_t kChunk = 128;
  std::vector<torch::Tensor> parts;
  for (int64_t start = 0; start < a.size(0); start += kChunk) {
    const auto end = std::min(start + kChunk, a.size(0));
    parts.push_back(distance(a.slice(0, start, end), b.slice(0, start, end)));
  }
  if (parts.empty()) return torch::empty({0});
  return torch::cat(parts);
}

double PerceptualMetric::mean_distance(const torch::Tensor& a, const torch::Tensor& b) const {
  if (a.size(0) == 0) return 0.0;
  return distances(a, b).to(torch::kFloat64).mean().item<double>();
}

}  // namespace trigen
