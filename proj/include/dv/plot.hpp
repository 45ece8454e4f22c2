#ifndef DV_PLOT_HPP_
#define DV_PLOT_HPP_

#include <string>
#include <vector>

namespace dv {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // optional, same length as y
};

struct ScatterGroup {
  std::string name;
  std::string color;  // SVG color
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotAxes {
  std::string title, xlabel, ylabel;
  bool log_x = false;
};

void write_svg_lines(const std::string& path, const PlotAxes& axes,
                     const std::vector<Series>& series);

void write_svg_scatter(const std::string& path, const PlotAxes& axes,
                       const std::vector<ScatterGroup>& groups);

// CSV-driven charts for the experiment outputs.
void plot_curve_csv(const std::string& csv_path, const std::string& svg_path);
void plot_progress_csv(const std::string& csv_path, const std::string& svg_path,
                       bool validation_axis = false);
void plot_logits_csv(const std::string& csv_path, const std::string& svg_path);

}  // namespace dv

#endif  // DV_PLOT_HPP_
