#include "dv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "dv/common.hpp"

namespace dv {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
  double lo = 0.0, hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

Range fit_range(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 1.0};
  Range r{values[0], values[0]};
  for (double v : values) r.expand(v);
  if (r.hi == r.lo) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

double xmap(double v, const Range& r, bool log_x) {
  double t;
  if (log_x)
    t = (std::log10(v) - std::log10(r.lo)) / (std::log10(r.hi) - std::log10(r.lo));
  else
    t = (v - r.lo) / (r.hi - r.lo);
  return kMarginL + t * (kWidth - kMarginL - kMarginR);
}

double ymap(double v, const Range& r) {
  const double t = (v - r.lo) / (r.hi - r.lo);
  return kHeight - kMarginB - t * (kHeight - kMarginT - kMarginB);
}

void open_svg(std::ofstream& os, const PlotAxes& axes) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
     << axes.title << "</text>\n";
  os << "<text x=\"" << (kMarginL + kWidth - kMarginR) / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">" << axes.xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kHeight / 2 << ")\">" << axes.ylabel << "</text>\n";
  // axes box
  os << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\""
     << kWidth - kMarginL - kMarginR << "\" height=\"" << kHeight - kMarginT - kMarginB
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
}

void draw_ticks(std::ofstream& os, const Range& xr, const Range& yr, bool log_x) {
  for (int k = 0; k <= 5; ++k) {
    const double fy = yr.lo + (yr.hi - yr.lo) * k / 5.0;
    const double py = ymap(fy, yr);
    os << "<line x1=\"" << kMarginL - 4 << "\" y1=\"" << py << "\" x2=\"" << kMarginL
       << "\" y2=\"" << py << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << kMarginL - 8 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\">" << fmt_fixed(fy, 3) << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    double fx;
    if (log_x)
      fx = std::pow(10.0, std::log10(xr.lo) + (std::log10(xr.hi) - std::log10(xr.lo)) * k / 5.0);
    else
      fx = xr.lo + (xr.hi - xr.lo) * k / 5.0;
    const double px = xmap(fx, xr, log_x);
    os << "<line x1=\"" << px << "\" y1=\"" << kHeight - kMarginB << "\" x2=\"" << px
       << "\" y2=\"" << kHeight - kMarginB + 4 << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << kHeight - kMarginB + 18
       << "\" text-anchor=\"middle\">" << fmt_fixed(fx, fx >= 100 ? 0 : 2) << "</text>\n";
  }
}

}  // namespace

void write_svg_lines(const std::string& path, const PlotAxes& axes,
                     const std::vector<Series>& series) {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write svg " + path);
  std::vector<double> all_x, all_y;
  for (const Series& s : series) {
    all_x.insert(all_x.end(), s.x.begin(), s.x.end());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
      all_y.push_back(s.y[i] - e);
      all_y.push_back(s.y[i] + e);
    }
  }
  Range xr = fit_range(all_x);
  if (axes.log_x) {
    xr.lo = std::max(xr.lo, 1e-12);
    for (double v : all_x)
      if (v > 0) xr.lo = std::min(xr.lo, v);
  }
  const Range yr = fit_range(all_y);

  open_svg(os, axes);
  draw_ticks(os, xr, yr, axes.log_x);
  int color = 0;
  for (const Series& s : series) {
    const char* col = kPalette[color % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << xmap(s.x[i], xr, axes.log_x) << ',' << ymap(s.y[i], yr) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double px = xmap(s.x[i], xr, axes.log_x);
      os << "<circle cx=\"" << px << "\" cy=\"" << ymap(s.y[i], yr)
         << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
      if (i < s.yerr.size() && s.yerr[i] > 0.0) {
        os << "<line x1=\"" << px << "\" y1=\"" << ymap(s.y[i] - s.yerr[i], yr) << "\" x2=\""
           << px << "\" y2=\"" << ymap(s.y[i] + s.yerr[i], yr) << "\" stroke=\"" << col
           << "\"/>\n";
      }
    }
    os << "<text x=\"" << kWidth - kMarginR - 6 << "\" y=\"" << kMarginT + 16 + 16 * color
       << "\" text-anchor=\"end\" fill=\"" << col << "\">" << s.name << "</text>\n";
    ++color;
  }
  os << "</svg>\n";
}

void write_svg_scatter(const std::string& path, const PlotAxes& axes,
                       const std::vector<ScatterGroup>& groups) {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write svg " + path);
  std::vector<double> all_x, all_y;
  for (const ScatterGroup& g : groups) {
    all_x.insert(all_x.end(), g.x.begin(), g.x.end());
    all_y.insert(all_y.end(), g.y.begin(), g.y.end());
  }
  const Range xr = fit_range(all_x);
  const Range yr = fit_range(all_y);
  open_svg(os, axes);
  draw_ticks(os, xr, yr, false);
  int k = 0;
  for (const ScatterGroup& g : groups) {
    for (std::size_t i = 0; i < g.x.size(); ++i)
      os << "<circle cx=\"" << xmap(g.x[i], xr, false) << "\" cy=\"" << ymap(g.y[i], yr)
         << "\" r=\"1.6\" fill=\"" << g.color << "\" fill-opacity=\"0.5\"/>\n";
    os << "<text x=\"" << kWidth - kMarginR - 6 << "\" y=\"" << kMarginT + 16 + 16 * k
       << "\" text-anchor=\"end\" fill=\"" << g.color << "\">" << g.name << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open csv " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    rows.push_back(split_on(line, ','));
  }
  if (rows.empty()) throw ConfigError("csv is empty: " + path);
  return rows;
}

}  // namespace

void plot_curve_csv(const std::string& csv_path, const std::string& svg_path) {
  const auto rows = read_csv(csv_path);
  // model,size,repeat,accuracy,... ; use the mean/std summary rows
  std::map<std::string, Series> by_model;
  std::map<std::string, std::map<int, double>> errs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 4) continue;
    if (r[2] == "mean") {
      Series& s = by_model[r[0]];
      s.name = r[0];
      s.x.push_back(parse_double(r[1]));
      s.y.push_back(parse_double(r[3]));
    } else if (r[2] == "std") {
      errs[r[0]][static_cast<int>(parse_int(r[1]))] = parse_double(r[3]);
    }
  }
  if (by_model.empty()) throw ConfigError("no summary rows in " + csv_path);
  std::vector<Series> series;
  for (auto& [model, s] : by_model) {
    for (double size : s.x) {
      const auto it = errs.find(model);
      s.yerr.push_back(it != errs.end() && it->second.count(static_cast<int>(size))
                           ? it->second.at(static_cast<int>(size))
                           : 0.0);
    }
    series.push_back(std::move(s));
  }
  write_svg_lines(svg_path, {"test accuracy vs training-set size", "training examples",
                             "test accuracy", /*log_x=*/true},
                  series);
}

void plot_progress_csv(const std::string& csv_path, const std::string& svg_path,
                       bool validation_axis) {
  const auto rows = read_csv(csv_path);
  // variant,run_id,step,valid_accuracy,test_accuracy
  std::map<std::string, Series> by_run;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 5) continue;
    const std::string key = r[0] + "/run" + r[1];
    Series& s = by_run[key];
    s.name = key;
    s.x.push_back(parse_double(r[2]));
    s.y.push_back(parse_double(r[validation_axis ? 3 : 4]));
  }
  if (by_run.empty()) throw ConfigError("no data rows in " + csv_path);
  std::vector<Series> series;
  for (auto& [key, s] : by_run) series.push_back(std::move(s));
  write_svg_lines(svg_path,
                  {"training progress", "step",
                   validation_axis ? "validation accuracy" : "test accuracy", /*log_x=*/false},
                  series);
}

void plot_logits_csv(const std::string& csv_path, const std::string& svg_path) {
  const auto rows = read_csv(csv_path);
  // doc_id,dense_logit,sparse_logit,half_intercept,label,...
  ScatterGroup pos{"positive", "#2ca02c", {}, {}};
  ScatterGroup neg{"negative", "#d62728", {}, {}};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 5) continue;
    ScatterGroup& g = r[4] == "1" ? pos : neg;
    g.x.push_back(parse_double(r[1]));
    g.y.push_back(parse_double(r[2]));
  }
  write_svg_scatter(svg_path, {"part logits on the test set", "dense-part logit",
                               "sparse-part logit", false},
                    {pos, neg});
}

}  // namespace dv
