// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/compare.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "trigen/checkpoint.hpp"
#include "trigen/error.hpp"

namespace trigen {

namespace fs = std::filesystem;

namespace {

std::string num(double v, int digits = 4) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

ComparisonRow read_row(const fs::path& dir) {
  const auto path = dir / "report.json";
  if (!fs::exists(path)) throw Error(ErrorKind::kConfig, dir.string() + " has no report.json; run the evaluate stage first");
  const auto r = read_json(path);
  try {
    ComparisonRow row;
    row.method = r.at("method").get<std::string>();
    row.config_hash = r.at("config_hash").get<std::string>();
    row.epsilon_255 = r.at("epsilon_255").get<double>();
    row.lambda = r.at("lambda").get<double>();
    row.seed = r.at("seed").get<uint64_t>();
    const auto m = MetricsReport::from_json(r.at("metrics"));
    row.lpips = m.lpips_mean;
    row.psnr = m.psnr_mean;
    row.linf = m.linf_max;
    row.asr = m.asr;
    row.ba = m.ba;
    row.fr = m.fr;
    row.asr_clean = r.at("clean_model").at("asr").get<double>();
    row.fr_clean = r.at("clean_model").at("fr").get<double>();
    char label[96];
    std::snprintf(label, sizeof(label), "%s eps=%g lambda=%g seed=%llu", row.method.c_str(), row.epsilon_255,
                  row.lambda, static_cast<unsigned long long>(row.seed));
    row.label = label;
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "malformed report " + path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

}  // namespace

Comparison compare_runs(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.size() < 2) throw Error(ErrorKind::kConfig, "compare needs at least two runs");
  Comparison c;
  for (const auto& dir : run_dirs) {
    const auto profile = read_json(dir / "report.json").value("dataset_profile", "");
    if (c.profile.empty()) {
      c.profile = profile;
    } else if (profile != c.profile) {
      throw Error(ErrorKind::kConfig, "refusing to compare runs of different dataset profiles (" + c.profile + " and " +
                                          profile + " in " + dir.string() + ")");
    }
    c.rows.push_back(read_row(dir));
  }

  // Epsilon table: ours runs sharing the lambda and seed of the first ours run.
  const auto first_ours =
      std::find_if(c.rows.begin(), c.rows.end(), [](const ComparisonRow& r) { return r.method == "ours"; });
  if (first_ours != c.rows.end()) {
    std::map<double, EpsilonRow> by_eps;
    for (const auto& r : c.rows) {
      if (r.method != "ours" || r.lambda != first_ours->lambda || r.seed != first_ours->seed) continue;
      by_eps.emplace(r.epsilon_255, EpsilonRow{r.epsilon_255 / 255.0, r.fr_clean, r.asr_clean, r.fr, r.asr});
    }
    for (const auto& [eps, row] : by_eps) c.epsilon_sweep.push_back(row);
  }

  // Rate series: per method, runs sharing the epsilon and seed of the method's first run.
  std::vector<std::string> methods;
  for (const auto& r : c.rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  for (const auto& method : methods) {
    const auto first = std::find_if(c.rows.begin(), c.rows.end(), [&](const ComparisonRow& r) { return r.method == method; });
    std::map<double, std::pair<double, double>> by_lambda;
    for (const auto& r : c.rows) {
      if (r.method == method && r.epsilon_255 == first->epsilon_255 && r.seed == first->seed) {
        by_lambda.emplace(r.lambda, std::make_pair(r.asr, r.ba));
      }
    }
    RateSeries s;
    s.method = method;
    for (const auto& [lambda, v] : by_lambda) {
      s.lambdas.push_back(lambda);
      s.asr.push_back(v.first);
      s.ba.push_back(v.second);
    }
    c.rate_series.push_back(s);
  }
  return c;
}

std::string format_comparison_table(const Comparison& c) {
  std::string out = "run                                        LPIPS    PSNR     linf     ASR      BA\n";
  for (const auto& r : c.rows) {
    char line[200];
    std::snprintf(line, sizeof(line), "%-42s %-8s %-8s %-8s %-8s %-8s\n", r.label.c_str(), num(r.lpips).c_str(),
                  r.psnr ? num(*r.psnr, 2).c_str() : "-", num(r.linf, 2).c_str(), num(r.asr).c_str(),
                  num(r.ba).c_str());
    out += line;
  }
  return out;
}

void write_comparison(const Comparison& c, const std::vector<fs::path>& run_dirs, const fs::path& out) {
  fs::create_directories(out);
  std::string table = "run,method,config_hash,lpips,psnr,linf,asr,ba\n";
  for (const auto& r : c.rows) {
    table += r.label + "," + r.method + "," + r.config_hash + "," + num(r.lpips, 6) + "," +
             (r.psnr ? num(*r.psnr, 6) : std::string()) + "," + num(r.linf, 6) + "," + num(r.asr, 6) + "," +
             num(r.ba, 6) + "\n";
  }
  write_file(out / "comparison.csv", table);

  std::string eps = "epsilon_255,fr_clean,asr_clean,fr_backdoor,asr_backdoor\n";
  for (const auto& e : c.epsilon_sweep) {
    eps += num(e.epsilon * 255.0, 2) + "," + num(e.fr_clean, 6) + "," + num(e.asr_clean, 6) + "," +
           num(e.fr_backdoor, 6) + "," + num(e.asr_backdoor, 6) + "\n";
  }
  write_file(out / "epsilon_sweep.csv", eps);

  std::string rates = "method,lambda,asr,ba\n";
  for (const auto& s : c.rate_series) {
    for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
      rates += s.method + "," + num(s.lambdas[i], 6) + "," + num(s.asr[i], 6) + "," + num(s.ba[i], 6) + "\n";
    }
  }
  write_file(out / "rate_sweep.csv", rates);
  write_rate_plot(out / "rate_plot.png", c.rate_series);

  for (std::size_t i = 0; i < run_dirs.size(); ++i) {
    const auto hist = run_dirs[i] / "strip_hist.png";
    if (fs::exists(hist)) {
      fs::copy_file(hist, out / ("strip_" + c.rows[i].config_hash + ".png"), fs::copy_options::overwrite_existing);
    }
  }
}

}  // namespace trigen
