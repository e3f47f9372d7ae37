// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "trigen/error.hpp"

namespace trigen {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kLeft = 70;
constexpr int kRight = 70;
constexpr int kTop = 40;
constexpr int kBottom = 60;

const std::vector<cv::Scalar>& palette() {
  static const std::vector<cv::Scalar> colors{{180, 119, 31}, {14, 127, 255}, {44, 160, 44},
                                              {40, 39, 214},  {189, 103, 148}, {75, 86, 140}};
  return colors;
}

void save(const std::filesystem::path& path, const cv::Mat& canvas) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

std::string fmt(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void text(cv::Mat& m, const std::string& s, cv::Point at, double size = 0.45) {
  cv::putText(m, s, at, cv::FONT_HERSHEY_SIMPLEX, size, cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
}

struct Frame {
  double x0, x1, y0, y1;
  cv::Point map(double x, double y) const {
    const double fx = (x - x0) / (x1 - x0 == 0 ? 1 : x1 - x0);
    const double fy = (y - y0) / (y1 - y0 == 0 ? 1 : y1 - y0);
    return {kLeft + static_cast<int>(std::lround(fx * (kWidth - kLeft - kRight))),
            kHeight - kBottom - static_cast<int>(std::lround(fy * (kHeight - kTop - kBottom)))};
  }
};

void axes(cv::Mat& m, const Frame& f, const std::string& xlabel, const std::string& ylabel, bool right_axis,
          const std::string& rlabel) {
  const cv::Scalar ink(60, 60, 60);
  cv::rectangle(m, f.map(f.x0, f.y1), f.map(f.x1, f.y0), ink, 1);
  for (int i = 0; i <= 5; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 5.0;
    auto p = f.map(f.x0, y);
    cv::line(m, p, {p.x - 5, p.y}, ink);
    text(m, fmt(y, 2), {p.x - 45, p.y + 4}, 0.4);
    if (right_axis) {
      auto q = f.map(f.x1, y);
      cv::line(m, q, {q.x + 5, q.y}, ink);
      text(m, fmt(y, 2), {q.x + 8, q.y + 4}, 0.4);
    }
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 5.0;
    auto p = f.map(x, f.y0);
    cv::line(m, p, {p.x, p.y + 5}, ink);
    text(m, fmt(x, 3), {p.x - 18, p.y + 20}, 0.4);
  }
  text(m, xlabel, {kWidth / 2 - 40, kHeight - 15}, 0.5);
  text(m, ylabel, {5, kTop - 15}, 0.5);
  if (right_axis) text(m, rlabel, {kWidth - kRight - 10, kTop - 15}, 0.5);
}

void dashed(cv::Mat& m, cv::Point a, cv::Point b, const cv::Scalar& color) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int pieces = std::max(1, static_cast<int>(len / 6.0));
  for (int i = 0; i < pieces; i += 2) {
    const double t0 = static_cast<double>(i) / pieces;
    const double t1 = static_cast<double>(std::min(i + 1, pieces)) / pieces;
    cv::line(m, {a.x + static_cast<int>((b.x - a.x) * t0), a.y + static_cast<int>((b.y - a.y) * t0)},
             {a.x + static_cast<int>((b.x - a.x) * t1), a.y + static_cast<int>((b.y - a.y) * t1)}, color, 2,
             cv::LINE_AA);
  }
}

}  // namespace

void write_rate_plot(const std::filesystem::path& path, const std::vector<RateSeries>& series) {
  cv::Mat m(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  double xmax = 0.0;
  for (const auto& s : series) {
    for (double l : s.lambdas) xmax = std::max(xmax, l);
  }
  Frame f{0.0, xmax > 0 ? xmax : 1.0, 0.0, 1.0};
  axes(m, f, "poisoning rate", "ASR (solid)", true, "BA (dashed)");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const auto& color = palette()[k % palette().size()];
    for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
      cv::circle(m, f.map(s.lambdas[i], s.asr[i]), 3, color, cv::FILLED, cv::LINE_AA);
      cv::circle(m, f.map(s.lambdas[i], s.ba[i]), 3, color, 1, cv::LINE_AA);
      if (i + 1 < s.lambdas.size()) {
        cv::line(m, f.map(s.lambdas[i], s.asr[i]), f.map(s.lambdas[i + 1], s.asr[i + 1]), color, 2, cv::LINE_AA);
        dashed(m, f.map(s.lambdas[i], s.ba[i]), f.map(s.lambdas[i + 1], s.ba[i + 1]), color);
      }
    }
    text(m, s.method, {kLeft + 10 + 110 * static_cast<int>(k), kTop + 18});
    cv::line(m, {kLeft + 10 + 110 * static_cast<int>(k), kTop + 24}, {kLeft + 60 + 110 * static_cast<int>(k), kTop + 24},
             color, 3);
  }
  save(path, m);
}

void write_entropy_histogram(const std::filesystem::path& path, const std::vector<double>& clean,
                             const std::vector<double>& triggered, int bins) {
  if (bins < 1) throw Error(ErrorKind::kConfig, "histogram needs at least one bin");
  double lo = 0.0;
  double hi = 0.0;
  for (const auto* v : {&clean, &triggered}) {
    for (double e : *v) hi = std::max(hi, e);
  }
  if (hi <= lo) hi = lo + 1.0;
  auto counts = [&](const std::vector<double>& v) {
    std::vector<double> c(static_cast<std::size_t>(bins), 0.0);
    for (double e : v) {
      auto b = static_cast<int>((e - lo) / (hi - lo) * bins);
      c[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
    }
    for (auto& x : c) x /= std::max<double>(1.0, static_cast<double>(v.size()));
    return c;
  };
  const auto cc = counts(clean);
  const auto tc = counts(triggered);
  double ymax = 0.0;
  for (std::size_t i = 0; i < cc.size(); ++i) ymax = std::max({ymax, cc[i], tc[i]});
  cv::Mat m(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  Frame f{lo, hi, 0.0, ymax > 0 ? ymax * 1.1 : 1.0};
  cv::Mat overlay = m.clone();
  const cv::Scalar blue(180, 119, 31);
  const cv::Scalar orange(14, 127, 255);
  for (int b = 0; b < bins; ++b) {
    const double x0 = lo + (hi - lo) * b / bins;
    const double x1 = lo + (hi - lo) * (b + 1) / bins;
    cv::rectangle(overlay, f.map(x0, cc[static_cast<std::size_t>(b)]), f.map(x1, 0.0), blue, cv::FILLED);
  }
  cv::addWeighted(overlay, 0.5, m, 0.5, 0.0, m);
  overlay = m.clone();
  for (int b = 0; b < bins; ++b) {
    const double x0 = lo + (hi - lo) * b / bins;
    const double x1 = lo + (hi - lo) * (b + 1) / bins;
    cv::rectangle(overlay, f.map(x0, tc[static_cast<std::size_t>(b)]), f.map(x1, 0.0), orange, cv::FILLED);
  }
  cv::addWeighted(overlay, 0.5, m, 0.5, 0.0, m);
  axes(m, f, "entropy (bits)", "fraction of inputs", false, "");
  text(m, "clean", {kWidth - kRight - 120, kTop + 18});
  cv::rectangle(m, {kWidth - kRight - 40, kTop + 8}, {kWidth - kRight - 20, kTop + 20}, blue, cv::FILLED);
  text(m, "triggered", {kWidth - kRight - 120, kTop + 38});
  cv::rectangle(m, {kWidth - kRight - 40, kTop + 28}, {kWidth - kRight - 20, kTop + 40}, orange, cv::FILLED);
  save(path, m);
}

void write_image_grid(const std::filesystem::path& path, const std::vector<torch::Tensor>& images, int columns,
                      int scale) {
  if (images.empty() || columns < 1 || scale < 1) throw Error(ErrorKind::kConfig, "empty image grid");
  const auto h = static_cast<int>(images[0].size(1));
  const auto w = static_cast<int>(images[0].size(2));
  const int rows = (static_cast<int>(images.size()) + columns - 1) / columns;
  const int pad = 2;
  cv::Mat canvas(rows * (h * scale + pad) + pad, columns * (w * scale + pad) + pad, CV_8UC3, cv::Scalar(255, 255, 255));
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dim() != 3 || images[i].size(1) != h || images[i].size(2) != w) {
      throw Error(ErrorKind::kShape, "grid images must share one shape");
    }
    auto hwc = (images[i].detach().to(torch::kFloat32).clamp(0.0, 1.0) * 255.0)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
    cv::Mat rgb(h, w, CV_8UC3, hwc.data_ptr<uint8_t>());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    cv::Mat big;
    cv::resize(bgr, big, {w * scale, h * scale}, 0, 0, cv::INTER_NEAREST);
    const int r = static_cast<int>(i) / columns;
    const int c = static_cast<int>(i) % columns;
    big.copyTo(canvas(cv::Rect(pad + c * (w * scale + pad), pad + r * (h * scale + pad), w * scale, h * scale)));
  }
  save(path, canvas);
}

}  // namespace trigen
