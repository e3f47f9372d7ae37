// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include <torch/serialize.h>

#include "trigen/error.hpp"
#include "trigen/hashing.hpp"

namespace fs = std::filesystem;

namespace trigen {

void save_tensors(const fs::path& path, const TensorMap& tensors) {
  c10::Dict<std::string, torch::Tensor> dict;
  for (const auto& [name, t] : tensors) dict.insert(name, t.detach().to(torch::kCPU).contiguous());
  auto bytes = torch::pickle_save(c10::IValue(dict));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorMap load_tensors(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  TensorMap out;
  try {
    auto value = torch::pickle_load(bytes);
    for (const auto& entry : value.toGenericDict()) {
      out.emplace(entry.key().toStringRef(), entry.value().toTensor());
    }
  } catch (const c10::Error& e) {
    throw Error(ErrorKind::kIo, "malformed weights file " + path.string() + ": " + e.what_without_backtrace());
  }
  return out;
}

TensorMap module_state(const torch::nn::Module& module) {
  TensorMap out;
  for (const auto& p : module.named_parameters(true)) out.emplace(p.key(), p.value());
  for (const auto& b : module.named_buffers(true)) out.emplace(b.key(), b.value());
  return out;
}

void load_module_state(torch::nn::Module& module, const TensorMap& state) {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& name, torch::Tensor& target) {
    auto it = state.find(name);
    if (it == state.end()) throw Error(ErrorKind::kInitialization, "checkpoint lacks tensor '" + name + "'");
    if (it->second.sizes() != target.sizes()) {
      throw Error(ErrorKind::kInitialization, "tensor '" + name + "' has the wrong shape");
    }
    target.copy_(it->second);
  };
  for (auto& p : module.named_parameters(true)) assign(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) assign(b.key(), b.value());
}

void copy_module_state(const torch::nn::Module& from, torch::nn::Module& to) {
  load_module_state(to, module_state(from));
}

std::string module_hash(const torch::nn::Module& module) {
  Sha256 h;
  for (const auto& [name, t] : module_state(module)) {
    h.update(name);
    h.update(t);
  }
  return h.hex_digest();
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
}

fs::path weights_path(const fs::path& stem) {
  auto p = stem;
  p += ".pt";
  return p;
}

fs::path manifest_path(const fs::path& stem) {
  auto p = stem;
  p += ".json";
  return p;
}

}  // namespace trigen
