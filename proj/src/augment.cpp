// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/augment.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "trigen/error.hpp"

namespace trigen {

bool AugmentationPolicy::is_identity() const {
  return rotation_degrees == 0.0 && crop_scale[0] == 1.0 && crop_scale[1] == 1.0 && hflip_prob == 0.0;
}

void AugmentationPolicy::validate() const {
  if (!(rotation_degrees >= 0.0)) throw Error(ErrorKind::kConfig, "rotation range must be >= 0");
  if (!(crop_scale[0] > 0.0 && crop_scale[0] <= crop_scale[1] && crop_scale[1] <= 1.0)) {
    throw Error(ErrorKind::kConfig, "crop scale must satisfy 0 < min <= max <= 1");
  }
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) throw Error(ErrorKind::kConfig, "hflip_prob must lie in [0, 1]");
}

nlohmann::json AugmentationPolicy::to_json() const {
  return {{"rotation_degrees", rotation_degrees}, {"crop_scale", crop_scale}, {"hflip_prob", hflip_prob}};
}

AugmentationPolicy AugmentationPolicy::from_json(const nlohmann::json& j) {
  AugmentationPolicy p;
  p.rotation_degrees = j.value("rotation_degrees", p.rotation_degrees);
  if (j.contains("crop_scale")) p.crop_scale = j.at("crop_scale").get<std::array<double, 2>>();
  p.hflip_prob = j.value("hflip_prob", p.hflip_prob);
  p.validate();
  return p;
}

torch::Tensor augment_batch(const torch::Tensor& images, const AugmentationPolicy& policy, uint64_t seed) {
  policy.validate();
  if (images.dim() != 4) throw Error(ErrorKind::kShape, "augment_batch expects [N, 3, H, W]");
  if (policy.is_identity() || images.size(0) == 0) return images;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = images.size(0);
  const double h = static_cast<double>(images.size(2));
  const double w = static_cast<double>(images.size(3));
  auto theta = torch::zeros({n, 2, 3}, torch::kFloat64);
  auto acc = theta.accessor<double, 3>();
  for (int64_t i = 0; i < n; ++i) {
    // Crop: area fraction and log-uniform aspect ratio in [3/4, 4/3]; a crop
    // that does not fit is redrawn, and after ten misses the whole image is
    // used (the usual random-resized-crop rule).
    double sx = 1.0;
    double sy = 1.0;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double area = policy.crop_scale[0] + (policy.crop_scale[1] - policy.crop_scale[0]) * unit(rng);
      const double ratio = std::exp(std::log(3.0 / 4.0) + (std::log(4.0 / 3.0) - std::log(3.0 / 4.0)) * unit(rng));
      const double cw = std::sqrt(area * ratio);
      const double ch = std::sqrt(area / ratio);
      if (cw <= 1.0 && ch <= 1.0) {
        sx = cw;
        sy = ch;
        break;
      }
    }
    const double cx = (1.0 - sx) * (2.0 * unit(rng) - 1.0);
    const double cy = (1.0 - sy) * (2.0 * unit(rng) - 1.0);
    const double angle = policy.rotation_degrees * (2.0 * unit(rng) - 1.0) * std::numbers::pi / 180.0;
    const double flip = unit(rng) < policy.hflip_prob ? -1.0 : 1.0;
    // Output coords -> input coords: flip, then rotate about the center in
    // pixel-aspect-corrected space, then map into the crop window.
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double aspect = w / h;
    acc[i][0][0] = sx * c * flip;
    acc[i][0][1] = -sx * s / aspect;
    acc[i][0][2] = cx;
    acc[i][1][0] = sy * s * aspect * flip;
    acc[i][1][1] = sy * c;
    acc[i][1][2] = cy;
  }
  namespace F = torch::nn::functional;
  auto grid = F::affine_grid(theta.to(images.dtype()), images.sizes(), /*align_corners=*/false);
  return F::grid_sample(images, grid,
                        F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kZeros).align_corners(false))
      .clamp(0.0, 1.0);
}

}  // namespace trigen
