// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_HASHING_HPP_
#define TRIGEN_HASHING_HPP_

#include <string>
#include <string_view>
#include <vector>

#include <torch/types.h>

namespace trigen {

// Incremental SHA-256; digests are lowercase hex.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(const void* data, std::size_t size);
  Sha256& update(std::string_view text);
  // Hashes dtype, shape and the contiguous bytes of the tensor.
  Sha256& update(const torch::Tensor& tensor);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view text);

}  // namespace trigen

#endif  // TRIGEN_HASHING_HPP_
