/*
 * Copyright 2026 The survbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "survbench/plots.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "survbench/csv.h"
#include "survbench/error.h"
#include "survbench/stats.h"

namespace survbench {

BoxStats box_stats(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  if (v.empty()) throw InvalidInput("box statistics need at least one finite value");
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.n = v.size();
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  for (double x : v) {
    if (x < b.q1 - 1.5 * iqr || x > b.q3 + 1.5 * iqr) b.outliers.push_back(x);
  }
  return b;
}

CalibrationBand calibration_band(const std::vector<const CurveRecord*>& curves, const std::vector<double>& grid) {
  CalibrationBand band;
  for (double p : grid) {
    std::vector<double> values;
    for (const CurveRecord* c : curves) {
      const auto& x = c->predicted;
      const auto& y = c->observed;
      if (x.empty() || p < x.front() || p > x.back()) continue;
      const auto it = std::lower_bound(x.begin(), x.end(), p);
      const auto k = static_cast<std::size_t>(it - x.begin());
      if (x[k] == p || k == 0) {
        values.push_back(y[k]);
      } else {
        const double f = (p - x[k - 1]) / (x[k] - x[k - 1]);
        values.push_back(y[k - 1] + f * (y[k] - y[k - 1]));
      }
    }
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    band.grid.push_back(p);
    band.mean.push_back(mean(values));
    band.low.push_back(quantile_sorted(values, 0.025));
    band.high.push_back(quantile_sorted(values, 0.975));
    band.count.push_back(values.size());
  }
  return band;
}

namespace {

std::string label_csv(const ScenarioLabel& l) {
  return csv_escape(l.reference) + "," + std::to_string(l.n_train) + "," + format_double(l.censoring) + "," +
         format_double(l.beta_treatment) + "," + csv_escape(l.gamma_spec);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ";" : "") + format_double(v[k]);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << content;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string svg_boxplot(const std::string& title, const std::vector<std::pair<std::string, BoxStats>>& boxes) {
  const double width = 120.0 * static_cast<double>(boxes.size()) + 80.0;
  const double height = 360.0;
  const double top = 40.0;
  const double bottom = 300.0;
  double lo = boxes.front().second.min;
  double hi = boxes.front().second.max;
  for (const auto& [name, b] : boxes) {
    lo = std::min(lo, b.min);
    hi = std::max(hi, b.max);
  }
  if (hi == lo) {
    hi += 0.5;
    lo -= 0.5;
  }
  auto y = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << svg_escape(title) << "</text>\n";
  os << "<text x=\"10\" y=\"" << y(hi) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_double(hi)
     << "</text>\n";
  os << "<text x=\"10\" y=\"" << y(lo) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_double(lo)
     << "</text>\n";
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const auto& [name, b] = boxes[k];
    const double cx = 100.0 + 120.0 * static_cast<double>(k);
    const BoxStats& s = b;
    const double iqr = s.q3 - s.q1;
    const double wlo = std::max(s.min, s.q1 - 1.5 * iqr);
    const double whi = std::min(s.max, s.q3 + 1.5 * iqr);
    os << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << y(wlo) << "\" y2=\"" << y(whi)
       << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << cx - 30 << "\" y=\"" << y(s.q3) << "\" width=\"60\" height=\""
       << std::max(1.0, y(s.q1) - y(s.q3)) << "\" fill=\"#dde6f0\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << cx - 30 << "\" x2=\"" << cx + 30 << "\" y1=\"" << y(s.median) << "\" y2=\"" << y(s.median)
       << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double o : s.outliers) {
      os << "<circle cx=\"" << cx << "\" cy=\"" << y(o) << "\" r=\"2\" fill=\"none\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << cx << "\" y=\"" << bottom + 20 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << svg_escape(name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string file_token(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  }
  return s;
}

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(const std::vector<ResultRow>& rows,
                                                  const std::vector<CurveRecord>& curves,
                                                  const std::filesystem::path& out_dir, const PlotOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) throw InvalidInput("cannot create " + out_dir.string());
  std::vector<std::filesystem::path> written;

  // Groups keep first-appearance order so output follows the result file.
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const std::string key = r.scenario.id() + "|" + r.metric + "|" + r.method;
    if (!groups.count(key)) group_order.push_back(key);
    groups[key].push_back(&r);
  }

  std::string box =
      "reference,n_train,censoring,beta_treatment,gamma_spec,method,metric,n,dropped,min,q1,median,q3,max,outliers\n";
  std::vector<std::string> panel_order;
  std::map<std::string, std::vector<std::pair<std::string, BoxStats>>> panels;
  for (const auto& key : group_order) {
    const auto& g = groups[key];
    std::vector<double> values;
    std::size_t dropped = 0;
    for (const ResultRow* r : g) {
      if (r->dropped || !std::isfinite(r->value)) {
        ++dropped;
      } else {
        values.push_back(r->value);
      }
    }
    const ResultRow& first = *g.front();
    if (values.empty()) {
      box += label_csv(first.scenario) + "," + csv_escape(first.method) + "," + csv_escape(first.metric) + ",0," +
             std::to_string(dropped) + ",NA,NA,NA,NA,NA,\n";
      continue;
    }
    const BoxStats b = box_stats(values);
    box += label_csv(first.scenario) + "," + csv_escape(first.method) + "," + csv_escape(first.metric) + "," +
           std::to_string(b.n) + "," + std::to_string(dropped) + "," + format_double(b.min) + "," +
           format_double(b.q1) + "," + format_double(b.median) + "," + format_double(b.q3) + "," +
           format_double(b.max) + "," + csv_escape(join(b.outliers)) + "\n";
    const std::string panel = first.scenario.id() + "|" + first.metric;
    if (!panels.count(panel)) panel_order.push_back(panel);
    panels[panel].emplace_back(first.method, b);
  }
  write_file(out_dir / "boxplots.csv", box);
  written.push_back(out_dir / "boxplots.csv");

  // Fit time is shared by the metric rows of one fit; prediction time adds up.
  struct Timing {
    double fit = 0.0;
    double predict = 0.0;
    std::size_t fits = 0;
  };
  std::vector<std::string> timing_order;
  std::map<std::string, Timing> timing;
  std::map<std::string, std::pair<double, double>> per_fit;
  std::vector<std::string> fit_order;
  for (const auto& r : rows) {
    const std::string fit_key = r.scenario.id() + "|" + r.method + "|" + std::to_string(r.replicate);
    auto [it, fresh] = per_fit.try_emplace(fit_key, r.fit_ms, 0.0);
    if (fresh) fit_order.push_back(fit_key);
    it->second.second += r.predict_ms;
  }
  std::map<std::string, std::tuple<std::string, std::string, int>> fit_meta;
  for (const auto& r : rows) {
    fit_meta.try_emplace(r.scenario.id() + "|" + r.method + "|" + std::to_string(r.replicate), r.scenario.reference,
                         r.method, r.scenario.n_train);
  }
  for (const auto& key : fit_order) {
    const auto& [reference, method, n] = fit_meta[key];
    const std::string tkey = reference + "," + std::to_string(n) + "," + csv_escape(method);
    if (!timing.count(tkey)) timing_order.push_back(tkey);
    Timing& t = timing[tkey];
    t.fit += per_fit[key].first;
    t.predict += per_fit[key].second;
    ++t.fits;
  }
  std::string tim = "reference,n_train,method,fits,mean_fit_ms,mean_predict_ms,mean_total_ms\n";
  for (const auto& key : timing_order) {
    const Timing& t = timing[key];
    const double n = static_cast<double>(t.fits);
    tim += key + "," + std::to_string(t.fits) + "," + format_double(t.fit / n) + "," + format_double(t.predict / n) +
           "," + format_double((t.fit + t.predict) / n) + "\n";
  }
  write_file(out_dir / "timing.csv", tim);
  written.push_back(out_dir / "timing.csv");

  if (!curves.empty()) {
    std::vector<double> grid;
    for (int k = 1; k <= options.band_points; ++k) {
      grid.push_back(static_cast<double>(k) / (options.band_points + 1));
    }
    std::vector<std::string> order;
    std::map<std::string, std::vector<const CurveRecord*>> by_group;
    for (const auto& c : curves) {
      const std::string key = c.scenario.id() + "|" + c.method;
      if (!by_group.count(key)) order.push_back(key);
      by_group[key].push_back(&c);
    }
    std::string cal = "reference,n_train,censoring,beta_treatment,gamma_spec,method,t_star_mean,predicted,mean,low,high,curves\n";
    for (const auto& key : order) {
      const auto& g = by_group[key];
      double t_star = 0.0;
      for (const CurveRecord* c : g) t_star += c->t_star;
      t_star /= static_cast<double>(g.size());
      const CalibrationBand band = calibration_band(g, grid);
      for (std::size_t k = 0; k < band.grid.size(); ++k) {
        cal += label_csv(g.front()->scenario) + "," + csv_escape(g.front()->method) + "," + format_double(t_star) +
               "," + format_double(band.grid[k]) + "," + format_double(band.mean[k]) + "," +
               format_double(band.low[k]) + "," + format_double(band.high[k]) + "," + std::to_string(band.count[k]) +
               "\n";
      }
    }
    write_file(out_dir / "calibration_bands.csv", cal);
    written.push_back(out_dir / "calibration_bands.csv");
  }

  if (options.svg) {
    for (const auto& panel : panel_order) {
      std::string name = panel;
      std::replace(name.begin(), name.end(), '|', '_');
      const auto path = out_dir / ("box_" + file_token(name) + ".svg");
      std::string title = panel;
      std::replace(title.begin(), title.end(), '|', ' ');
      write_file(path, svg_boxplot(title, panels[panel]));
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace survbench
