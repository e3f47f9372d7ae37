// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_CHECKPOINT_HPP_
#define TRIGEN_CHECKPOINT_HPP_

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/nn/module.h>

namespace trigen {

// Named tensors, ordered by name. This is the on-disk weights blob: a pickled
// {name: tensor} dict, readable from Python with torch.load.
using TensorMap = std::map<std::string, torch::Tensor>;

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_tensors(const std::filesystem::path& path);

// Parameters and buffers of a module keyed by their dotted names.
TensorMap module_state(const torch::nn::Module& module);
// Copies matching entries into the module; every parameter and buffer must be present.
void load_module_state(torch::nn::Module& module, const TensorMap& state);
void copy_module_state(const torch::nn::Module& from, torch::nn::Module& to);
// SHA-256 over names and bytes of every parameter and buffer.
std::string module_hash(const torch::nn::Module& module);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// A checkpoint is <stem>.pt (weights) plus <stem>.json (manifest).
std::filesystem::path weights_path(const std::filesystem::path& stem);
std::filesystem::path manifest_path(const std::filesystem::path& stem);

}  // namespace trigen

#endif  // TRIGEN_CHECKPOINT_HPP_
