// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "trigen/data.hpp"
#include "trigen/error.hpp"
#include "trigen/log.hpp"

namespace fs = std::filesystem;

namespace trigen {

const std::vector<std::string>& synthetic_class_names() {
  // Kept in lexicographic order so directory order equals class index.
  static const std::vector<std::string> names = {"bar",     "checker", "circle", "cross",    "halfdisc",
                                                 "hstripes", "ring",    "square", "triangle", "vstripes"};
  return names;
}

torch::Tensor render_synthetic_image(int64_t shape_class, int64_t image_size, uint64_t seed) {
  if (shape_class < 0 || shape_class >= 10) throw Error(ErrorKind::kConfig, "synthetic class out of range");
  if (image_size < 8 || image_size % 4 != 0) throw Error(ErrorKind::kConfig, "synthetic image size must be a multiple of 4, >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> low_freq(0.0, 0.08);
  std::normal_distribution<double> grain(0.0, 0.03);
  const double n = static_cast<double>(image_size);
  const double s = n / 32.0;

  double c0[3], c1[3], fg[3];
  for (auto& v : c0) v = unit(rng);
  for (auto& v : c1) v = unit(rng);
  const double angle = unit(rng) * 2.0 * std::numbers::pi;
  double blocks[4][4][3];
  for (auto& row : blocks)
    for (auto& cell : row)
      for (auto& v : cell) v = low_freq(rng);

  const double cx = (11.0 + 10.0 * unit(rng)) * s;
  const double cy = (11.0 + 10.0 * unit(rng)) * s;
  const double r = (6.0 + 4.0 * unit(rng)) * s;
  const double rot = unit(rng) * std::numbers::pi;
  const double stripe = 3.0 * s;
  auto contrast = [&] {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d += std::abs(fg[k] - 0.5 * (c0[k] + c1[k]));
    return d;
  };
  do {
    for (auto& v : fg) v = unit(rng);
  } while (contrast() < 0.6);

  auto out = torch::empty({3, image_size, image_size});
  auto acc = out.accessor<float, 3>();
  const int64_t block = image_size / 4;
  for (int64_t y = 0; y < image_size; ++y) {
    for (int64_t x = 0; x < image_size; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double u = dx * std::cos(rot) + dy * std::sin(rot);
      const double v = -dx * std::sin(rot) + dy * std::cos(rot);
      const double d = std::sqrt(dx * dx + dy * dy);
      bool inside = false;
      switch (shape_class) {
        case 0: inside = std::abs(u) < r && std::abs(v) < 0.3 * r; break;
        case 1: {
          const bool cell = static_cast<int64_t>(std::floor(u / stripe) + std::floor(v / stripe)) % 2 == 0;
          inside = std::abs(u) < 0.9 * r && std::abs(v) < 0.9 * r && cell;
          break;
        }
        case 2: inside = d < r; break;
        case 3:
          inside = (std::abs(u) < 0.25 * r && std::abs(v) < r) || (std::abs(v) < 0.25 * r && std::abs(u) < r);
          break;
        case 4: inside = d < r && v > 0.0; break;
        case 5: inside = d < 1.1 * r && static_cast<int64_t>(std::floor(dy / stripe)) % 2 == 0; break;
        case 6: inside = d < r && d > 0.55 * r; break;
        case 7: inside = std::abs(u) < 0.8 * r && std::abs(v) < 0.8 * r; break;
        case 8: inside = v > -0.5 * r && v < 0.8 * r - 1.44 * std::abs(u); break;
        case 9: inside = d < 1.1 * r && static_cast<int64_t>(std::floor(dx / stripe)) % 2 == 0; break;
      }
      const double t = ((static_cast<double>(x) * std::cos(angle) + static_cast<double>(y) * std::sin(angle)) / n + 1.0) / 2.0;
      for (int k = 0; k < 3; ++k) {
        double value = inside ? fg[k] : c0[k] * (1.0 - t) + c1[k] * t + blocks[y / block][x / block][k];
        value += grain(rng);
        acc[k][y][x] = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }
  return out;
}

void write_synthetic_dataset(const fs::path& root, const SyntheticDatasetSpec& spec) {
  const auto& names = synthetic_class_names();
  const std::pair<const char*, int64_t> splits[] = {{"train", spec.train_per_class}, {"val", spec.val_per_class}};
  for (std::size_t split_id = 0; split_id < 2; ++split_id) {
    const auto& [split, per_class] = splits[split_id];
    for (int64_t c = 0; c < static_cast<int64_t>(names.size()); ++c) {
      const auto dir = root / split / names[c];
      fs::create_directories(dir);
      for (int64_t i = 0; i < per_class; ++i) {
        std::seed_seq seq{static_cast<uint32_t>(spec.seed), static_cast<uint32_t>(spec.seed >> 32),
                          static_cast<uint32_t>(split_id), static_cast<uint32_t>(c), static_cast<uint32_t>(i)};
        uint64_t image_seed = 0;
        std::array<uint32_t, 2> words{};
        seq.generate(words.begin(), words.end());
        image_seed = (static_cast<uint64_t>(words[0]) << 32) | words[1];
        char name[32];
        std::snprintf(name, sizeof(name), "%05lld.png", static_cast<long long>(i));
        write_png(dir / name, render_synthetic_image(c, spec.image_size, image_seed));
      }
    }
  }
  log::info("wrote synthetic dataset to ", root.string(), " (", spec.train_per_class, "/", spec.val_per_class,
            " images per class)");
}

}  // namespace trigen
