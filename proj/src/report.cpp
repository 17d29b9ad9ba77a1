// Copyright 2026 The MMFDL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "mmfdl/pipeline.hpp"

namespace mmfdl::pipeline {

namespace fs = std::filesystem;

namespace {

std::ofstream open_report(const fs::path& path, std::string_view header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << header << "\n";
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Frame {
  double left = 60, right = 180, top = 20, bottom = 50, width = 640, height = 400;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double x(double v) const { return left + (v - x0) / (x1 - x0) * (width - left - right); }
  double y(double v) const { return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom); }
};

void svg_open(std::ofstream& out, const Frame& f, std::string_view x_label, std::string_view y_label) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\"" << f.width - f.right
      << "\" y2=\"" << f.height - f.bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
      << f.height - f.bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = f.y0 + (f.y1 - f.y0) * k / 4.0;
    out << "<text x=\"" << f.left - 6 << "\" y=\"" << f.y(v) + 4 << "\" text-anchor=\"end\">"
        << format_double(std::round(v * 1000.0) / 1000.0) << "</text>\n";
  }
  out << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 10
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text transform=\"translate(14," << (f.top + f.height - f.bottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";
}

void legend(std::ofstream& out, const Frame& f, std::size_t k, std::string_view name) {
  const double y = f.top + 14.0 * static_cast<double>(k);
  out << "<rect x=\"" << f.width - f.right + 12 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[k % 10] << "\"/>\n";
  out << "<text x=\"" << f.width - f.right + 28 << "\" y=\"" << y + 9 << "\">" << name << "</text>\n";
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

void write_metrics_csv(const fs::path& path, std::string_view dataset, std::span<const SeedResult> seeds) {
  auto out = open_report(path, "dataset,method,seed,noise_ratio,rmse,mae,pearson,cosine");
  for (const auto& s : seeds) {
    for (const auto& r : s.metrics) {
      out << csv_field(dataset) << ',' << r.method << ',' << r.seed << ',' << format_double(r.noise_ratio)
          << ',' << format_double(r.metrics.rmse) << ',' << format_double(r.metrics.mae) << ','
          << format_double(r.metrics.pearson) << ',' << format_double(r.metrics.cosine) << '\n';
    }
  }
}

void write_weights_csv(const fs::path& path, std::string_view dataset, std::span<const SeedResult> seeds) {
  auto out = open_report(path, "dataset,method,seed,w1,w2,w3");
  for (const auto& s : seeds) {
    for (const auto& r : s.weights) {
      out << csv_field(dataset) << ',' << r.method << ',' << r.seed << ',' << format_double(r.w[0]) << ','
          << format_double(r.w[1]) << ',' << format_double(r.w[2]) << '\n';
    }
  }
}

void write_knn_csv(const fs::path& path, std::string_view dataset, std::span<const SeedResult> seeds) {
  auto out = open_report(path, "dataset,seed,id,representation,max_similarity,mean_knn_distance");
  for (const auto& s : seeds) {
    for (const auto& r : s.knn) {
      out << csv_field(dataset) << ',' << r.seed << ',' << csv_field(r.id) << ',' << r.representation << ','
          << format_double(r.row.max_similarity) << ',' << format_double(r.row.mean_knn_distance) << '\n';
    }
  }
}

void write_train_csv(const fs::path& path, std::string_view dataset, std::span<const SeedResult> seeds) {
  auto out = open_report(
      path, "dataset,seed,model,epochs_run,best_epoch,initial_val_loss,best_val_loss,final_train_loss");
  for (const auto& s : seeds) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& r = s.reports[k];
      const double last = r.train_loss.empty() ? r.initial_train_loss : r.train_loss.back();
      out << csv_field(dataset) << ',' << s.seed << ',' << kModalNames[k] << ',' << r.train_loss.size() << ','
          << r.best_epoch << ',' << format_double(r.initial_val_loss) << ','
          << format_double(r.best_val_loss) << ',' << format_double(last) << '\n';
    }
  }
}

void write_summary_csv(const fs::path& path, std::string_view dataset, std::span<const SummaryRow> rows) {
  auto out = open_report(path, "dataset,method,noise_ratio,metric,n,min,max,median,mean,stddev");
  for (const auto& r : rows) {
    out << csv_field(dataset) << ',' << r.method << ',' << format_double(r.noise_ratio) << ',' << r.metric
        << ',' << r.count << ',' << format_double(r.summary.min) << ',' << format_double(r.summary.max)
        << ',' << format_double(r.summary.median) << ',' << format_double(r.summary.mean) << ','
        << format_double(r.summary.stddev) << '\n';
  }
}

void write_failures_csv(const fs::path& path, std::span<const Failure> failures) {
  auto out = open_report(path, "seed,error,message");
  for (const auto& f : failures) {
    out << f.seed << ',' << errc_name(f.code) << ',' << csv_field(f.message) << '\n';
  }
}

void write_noise_svg(const fs::path& path, std::span<const SummaryRow> rows) {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<std::pair<double, double>>> lines;
  Frame f;
  f.x0 = 1e300;
  f.x1 = -1e300;
  f.y0 = 1e300;
  f.y1 = -1e300;
  for (const auto& r : rows) {
    if (r.metric != "pearson") continue;
    if (!lines.count(r.method)) methods.push_back(r.method);
    lines[r.method].emplace_back(r.noise_ratio, r.summary.mean);
    f.x0 = std::min(f.x0, r.noise_ratio);
    f.x1 = std::max(f.x1, r.noise_ratio);
    f.y0 = std::min(f.y0, r.summary.mean);
    f.y1 = std::max(f.y1, r.summary.mean);
  }
  if (methods.empty()) return;
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1.0;
  if (f.y1 - f.y0 < 1e-6) f.y1 = f.y0 + 1e-3;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  svg_open(out, f, "noise ratio", "mean Pearson");
  for (const auto& [ratio, unused] : lines[methods.front()]) {
    out << "<text x=\"" << f.x(ratio) << "\" y=\"" << f.height - f.bottom + 16 << "\" text-anchor=\"middle\">"
        << format_double(ratio) << "</text>\n";
  }
  for (std::size_t k = 0; k < methods.size(); ++k) {
    auto points = lines[methods[k]];
    std::sort(points.begin(), points.end());
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 10] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : points) out << f.x(x) << ',' << f.y(y) << ' ';
    out << "\"/>\n";
    legend(out, f, k, methods[k]);
  }
  out << "</svg>\n";
}

void write_pearson_svg(const fs::path& path, std::span<const SeedResult> seeds) {
  double lowest = 1e300;
  for (const auto& s : seeds) {
    for (const auto& r : s.metrics) lowest = std::min(lowest, r.noise_ratio);
  }
  std::vector<std::string> methods;
  std::map<std::string, std::vector<double>> values;
  for (const auto& s : seeds) {
    for (const auto& r : s.metrics) {
      if (r.noise_ratio != lowest) continue;
      if (!values.count(r.method)) methods.push_back(r.method);
      values[r.method].push_back(r.metrics.pearson);
    }
  }
  if (methods.empty()) return;
  Frame f;
  f.right = 20;
  f.bottom = 70;
  f.x0 = 0.0;
  f.x1 = static_cast<double>(methods.size());
  f.y0 = 1e300;
  f.y1 = -1e300;
  for (const auto& [name, v] : values) {
    f.y0 = std::min(f.y0, *std::min_element(v.begin(), v.end()));
    f.y1 = std::max(f.y1, *std::max_element(v.begin(), v.end()));
  }
  if (f.y1 - f.y0 < 1e-6) f.y1 = f.y0 + 1e-3;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  svg_open(out, f, "", "Pearson");
  const double half = 0.3 * (f.x(1.0) - f.x(0.0));
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto s = bench::summarize(values[methods[k]]);
    std::vector<double> v = values[methods[k]];
    std::sort(v.begin(), v.end());
    const auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      const auto hi = std::min(lo + 1, v.size() - 1);
      return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    const double cx = f.x(static_cast<double>(k) + 0.5);
    const char* colour = kPalette[k % 10];
    out << "<line x1=\"" << cx << "\" y1=\"" << f.y(s.min) << "\" x2=\"" << cx << "\" y2=\"" << f.y(s.max)
        << "\" stroke=\"" << colour << "\"/>\n";
    out << "<rect x=\"" << cx - half << "\" y=\"" << f.y(quantile(0.75)) << "\" width=\"" << 2 * half
        << "\" height=\"" << std::max(0.5, f.y(quantile(0.25)) - f.y(quantile(0.75))) << "\" fill=\""
        << colour << "\" fill-opacity=\"0.4\" stroke=\"" << colour << "\"/>\n";
    out << "<line x1=\"" << cx - half << "\" y1=\"" << f.y(s.median) << "\" x2=\"" << cx + half << "\" y2=\""
        << f.y(s.median) << "\" stroke=\"black\"/>\n";
    out << "<text transform=\"translate(" << cx << "," << f.height - f.bottom + 12
        << ") rotate(30)\" font-size=\"10\">" << methods[k] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace mmfdl::pipeline
