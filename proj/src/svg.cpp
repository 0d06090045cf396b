#include "fbsnet/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fbsnet/types.hpp"

namespace fbsnet {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool usable(double x, double y, bool log_y) {
  return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0);
}

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& opts) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("series '" + s.name + "' has ragged data");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i], opts.log_y)) continue;
      const double y = opts.log_y ? std::log10(s.y[i]) : s.y[i];
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) throw DomainError("plot: no finite points to draw");
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }

  const double left = 80, right = 20, top = 40, bottom = 60;
  const double pw = opts.width - left - right;
  const double ph = opts.height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
      << opts.height << "\" viewBox=\"0 0 " << opts.width << ' ' << opts.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty()) {
    svg << "<text x=\"" << num(opts.width / 2.0) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape_xml(opts.title) << "</text>\n";
  }
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw)
      << "\" y2=\"" << num(top + ph) << "\"/>\n"
      << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
      << "\" y2=\"" << num(top + ph) << "\"/>\n</g>\n";

  svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / kTicks;
    const double fy = y_lo + (y_hi - y_lo) * i / kTicks;
    svg << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(fx))
        << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n"
        << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(fy)) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(py(fy)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(fy) + 4)
        << "\" text-anchor=\"end\">" << tick_label(opts.log_y ? std::pow(10.0, fy) : fy)
        << "</text>\n";
  }
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opts.height - 15.0)
      << "\" text-anchor=\"middle\">" << escape_xml(opts.x_label) << "</text>\n"
      << "<text transform=\"translate(18 " << num(top + ph / 2) << ") rotate(-90)\" "
      << "text-anchor=\"middle\">" << escape_xml(opts.y_label) << (opts.log_y ? " (log)" : "")
      << "</text>\n</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i], opts.log_y)) continue;
      const double y = opts.log_y ? std::log10(s.y[i]) : s.y[i];
      svg << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(y));
      first = false;
    }
    svg << "\"/>\n";
  }
  if (series.size() > 1) {
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double y = top + 10 + 16.0 * static_cast<double>(k);
      const double x = left + pw - 110;
      svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 20)
          << "\" y2=\"" << num(y) << "\" stroke=\"" << kPalette[k % kPalette.size()]
          << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << num(x + 26) << "\" y=\"" << num(y + 4) << "\">"
          << escape_xml(series[k].name) << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace fbsnet
