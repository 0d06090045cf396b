#pragma once

#include <string>
#include <vector>

namespace fbsnet {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Standalone SVG document: axes with ticks, one polyline per series and a
/// legend when there is more than one series. Non-finite points (and
/// nonpositive ones on a log axis) are skipped.
std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& opts);

}  // namespace fbsnet
