#pragma once

#include <string>
#include <vector>

namespace impulse_qvi::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool markers = false;
};

struct Chart {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<Series> series;
  std::vector<std::pair<double, double>> shaded;  // x intervals drawn behind the series
};

/// Static SVG line chart. Nonpositive values are dropped on log axes.
void write_svg(const std::string& path, const Chart& chart);

}  // namespace impulse_qvi::cli
