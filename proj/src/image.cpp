// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/image.hpp"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "trigen/error.hpp"

namespace trigen {

std::string to_string(const Resolution& r) {
  return std::to_string(r.height) + "x" + std::to_string(r.width);
}

ImageSet::ImageSet(torch::Tensor images, std::vector<int64_t> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
  if (!images_.defined()) {
    if (!labels_.empty()) throw Error(ErrorKind::kShape, "labels without images");
    images_ = torch::empty({0, 3, 0, 0});
    return;
  }
  if (images_.dim() != 4 || images_.size(1) != 3) {
    throw Error(ErrorKind::kShape, "image batch must be [N, 3, H, W]");
  }
  if (images_.size(0) != static_cast<int64_t>(labels_.size())) {
    throw Error(ErrorKind::kShape, "image and label counts differ");
  }
}

Resolution ImageSet::resolution() const {
  if (!images_.defined() || images_.dim() != 4) return {};
  return {images_.size(2), images_.size(3)};
}

torch::Tensor ImageSet::labels_tensor() const {
  return torch::tensor(labels_, torch::kLong);
}

LabeledImage ImageSet::at(int64_t index) const {
  if (index < 0 || index >= size()) {
    throw Error(ErrorKind::kShape, "image index " + std::to_string(index) + " out of range");
  }
  return {images_[index], labels_[index]};
}

ImageSet ImageSet::subset(const std::vector<int64_t>& indices) const {
  std::vector<int64_t> labels;
  labels.reserve(indices.size());
  for (auto i : indices) {
    if (i < 0 || i >= size()) {
      throw Error(ErrorKind::kShape, "image index " + std::to_string(i) + " out of range");
    }
    labels.push_back(labels_[i]);
  }
  auto idx = torch::tensor(indices, torch::kLong);
  return ImageSet(images_.index_select(0, idx), std::move(labels));
}

std::vector<int64_t> ImageSet::indices_of(int64_t label) const {
  std::vector<int64_t> out;
  for (int64_t i = 0; i < size(); ++i) {
    if (labels_[i] == label) out.push_back(i);
  }
  return out;
}

std::vector<int64_t> ImageSet::indices_not_of(int64_t label) const {
  std::vector<int64_t> out;
  for (int64_t i = 0; i < size(); ++i) {
    if (labels_[i] != label) out.push_back(i);
  }
  return out;
}

ImageSet ImageSet::concat(const ImageSet& a, const ImageSet& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  std::vector<int64_t> labels = a.labels_;
  labels.insert(labels.end(), b.labels_.begin(), b.labels_.end());
  return ImageSet(torch::cat({a.images_, b.images_}), std::move(labels));
}

void check_pixel_range(const torch::Tensor& images) {
  const bool single = images.dim() == 3 && images.size(0) == 3;
  const bool batch = images.dim() == 4 && images.size(1) == 3;
  if (!single && !batch) throw Error(ErrorKind::kShape, "expected [3, H, W] or [N, 3, H, W] pixels");
  if (images.numel() == 0) return;
  auto lo = images.min().item<double>();
  auto hi = images.max().item<double>();
  if (lo < 0.0 || hi > 1.0) throw Error(ErrorKind::kShape, "pixel values outside [0, 1]");
}

torch::Tensor read_image(const std::filesystem::path& path, Resolution target, ResizeMode mode) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorKind::kDecode, "cannot decode image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);

  if (mode == ResizeMode::kShortSideCenterCrop) {
    const int short_side = std::min(rgb.rows, rgb.cols);
    const int side = static_cast<int>(std::min(target.height, target.width));
    const double scale = static_cast<double>(side) / short_side;
    const int new_rows = std::max(side, static_cast<int>(std::lround(rgb.rows * scale)));
    const int new_cols = std::max(side, static_cast<int>(std::lround(rgb.cols * scale)));
    cv::Mat resized;
    cv::resize(rgb, resized, cv::Size(new_cols, new_rows), 0, 0,
               scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
    const int top = (new_rows - static_cast<int>(target.height)) / 2;
    const int left = (new_cols - static_cast<int>(target.width)) / 2;
    rgb = resized(cv::Rect(left, top, static_cast<int>(target.width), static_cast<int>(target.height))).clone();
  } else if (rgb.rows != target.height || rgb.cols != target.width) {
    throw Error(ErrorKind::kStructure, "image " + path.string() + " is " + std::to_string(rgb.rows) + "x" +
                                           std::to_string(rgb.cols) + ", expected " + to_string(target));
  }

  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0f).contiguous();
}

void write_png(const std::filesystem::path& path, const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) throw Error(ErrorKind::kShape, "write_png expects [3, H, W]");
  auto hwc = image.detach().to(torch::kCPU).clamp(0, 1).mul(255.0f).round().to(torch::kUInt8)
                 .permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3, hwc.data_ptr());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

}  // namespace trigen
