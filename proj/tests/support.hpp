// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures: scratch directories and classifiers with hand-set logits.

#ifndef TRIGEN_TESTS_SUPPORT_HPP_
#define TRIGEN_TESTS_SUPPORT_HPP_

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "trigen/classifier.hpp"
#include "trigen/error.hpp"

namespace trigen::testing {

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("trigen-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Returns the same logits row for every input.
class FixedLogitsNet : public ClassifierNetImpl {
 public:
  explicit FixedLogitsNet(std::vector<double> logits)
      : logits_(torch::tensor(logits, torch::kFloat32)), anchor_(register_parameter("anchor", torch::zeros({1}))) {}
  torch::Tensor forward(torch::Tensor x) override {
    return logits_.to(x.dtype()).unsqueeze(0).expand({x.size(0), logits_.size(0)}) + anchor_.to(x.dtype()) * 0.0;
  }

 private:
  torch::Tensor logits_;
  torch::Tensor anchor_;
};

// Predicts class floor(mean pixel * classes), a cheap input-dependent rule
// used by brute-force metric oracles.
class MeanBucketNet : public ClassifierNetImpl {
 public:
  explicit MeanBucketNet(int64_t classes) : classes_(classes) { register_parameter("anchor", torch::zeros({1})); }
  torch::Tensor forward(torch::Tensor x) override {
    // Inputs arrive normalized with mean 0.5 and std 0.25; undo that first.
    auto m = (x * 0.25 + 0.5).flatten(1).mean(1).clamp(0.0, 0.999999);
    auto bucket = (m * static_cast<double>(classes_)).floor().to(torch::kLong);
    return torch::one_hot(bucket, classes_).to(x.dtype()) * 10.0;
  }

 private:
  int64_t classes_;
};

inline ClassifierSpec toy_spec(int64_t classes, Resolution r) {
  ClassifierSpec s;
  s.architecture = "linear";
  s.class_count = classes;
  s.input_resolution = r;
  return s;
}

inline ClassifierModel fixed_logits_model(std::vector<double> logits, Resolution r = {8, 8}) {
  const auto classes = static_cast<int64_t>(logits.size());
  return ClassifierModel(toy_spec(classes, r), std::make_shared<FixedLogitsNet>(std::move(logits)));
}

inline ClassifierModel mean_bucket_model(int64_t classes, Resolution r) {
  return ClassifierModel(toy_spec(classes, r), std::make_shared<MeanBucketNet>(classes));
}

template <typename Fn>
ErrorKind error_kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a trigen::Error";
  return ErrorKind::kRuntime;
}

}  // namespace trigen::testing

#endif  // TRIGEN_TESTS_SUPPORT_HPP_
