// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_IMAGE_HPP_
#define TRIGEN_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/types.h>

namespace trigen {

struct Resolution {
  int64_t height = 0;
  int64_t width = 0;

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

std::string to_string(const Resolution& r);

// One image with its class. Pixels are stored channel-first, float32,
// shape [3, H, W], values in [0, 1].
struct LabeledImage {
  torch::Tensor pixels;
  int64_t label = 0;

  Resolution resolution() const { return {pixels.size(1), pixels.size(2)}; }
};

// A batch of same-sized images stored as one [N, 3, H, W] float32 tensor.
class ImageSet {
 public:
  ImageSet() = default;
  ImageSet(torch::Tensor images, std::vector<int64_t> labels);

  int64_t size() const { return static_cast<int64_t>(labels_.size()); }
  bool empty() const { return labels_.empty(); }
  Resolution resolution() const;

  const torch::Tensor& images() const { return images_; }
  const std::vector<int64_t>& labels() const { return labels_; }
  torch::Tensor labels_tensor() const;

  LabeledImage at(int64_t index) const;
  ImageSet subset(const std::vector<int64_t>& indices) const;
  // Indices of every image with the given label, ascending.
  std::vector<int64_t> indices_of(int64_t label) const;
  std::vector<int64_t> indices_not_of(int64_t label) const;

  static ImageSet concat(const ImageSet& a, const ImageSet& b);

 private:
  torch::Tensor images_;
  std::vector<int64_t> labels_;
};

// Throws Error(kShape) unless every value lies in [0, 1] and the shape is [3, H, W]
// (or [N, 3, H, W] for batches).
void check_pixel_range(const torch::Tensor& images);

enum class ResizeMode {
  kNone,                  // image must already be at the target resolution
  kShortSideCenterCrop,   // resize short side to the target, then center crop
};

// Decodes an image file into [3, H, W] float32 in [0, 1]. Throws Error(kDecode)
// naming the file when it cannot be read.
torch::Tensor read_image(const std::filesystem::path& path, Resolution target, ResizeMode mode);

// Writes a [3, H, W] image in [0, 1] as 8-bit PNG.
void write_png(const std::filesystem::path& path, const torch::Tensor& image);

}  // namespace trigen

#endif  // TRIGEN_IMAGE_HPP_
