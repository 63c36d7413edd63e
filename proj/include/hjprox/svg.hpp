#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hjprox/core.hpp"

namespace hjprox {

struct SvgSeries {
  std::string label;
  std::vector<double> y;  // plotted against the sample index
};

/// Minimal line chart: axes, labels, and one polyline per series. No external
/// dependency; meant for quick visual checks of mean experiment curves.
inline void write_line_chart_svg(const std::filesystem::path& path,
                                 const std::string& title,
                                 const std::vector<SvgSeries>& series,
                                 bool log_y = false) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  const double width = 760, height = 480;
  const double ml = 70, mr = 180, mt = 40, mb = 45;

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  size_t xmax = 1;
  auto transform = [&](double v) {
    return log_y ? std::log10(std::max(v, 1e-300)) : v;
  };
  for (const auto& s : series) {
    xmax = std::max(xmax, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v) || (log_y && v <= 0.0)) continue;
      ymin = std::min(ymin, transform(v));
      ymax = std::max(ymax, transform(v));
    }
  }
  if (!std::isfinite(ymin)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

  auto px = [&](size_t i) {
    return ml + (width - ml - mr) * static_cast<double>(i) /
                    static_cast<double>(std::max<size_t>(xmax - 1, 1));
  };
  auto py = [&](double v) {
    return height - mb - (height - mt - mb) * (transform(v) - ymin) / (ymax - ymin);
  };

  std::ofstream out(path);
  if (!out) throw Error("write_line_chart_svg: cannot open " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' "
      << "font-family='sans-serif' font-size='15'>" << title << "</text>\n";
  // axes
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << height - mb << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << height - mb << "' x2='"
      << width - mr << "' y2='" << height - mb << "' stroke='black'/>\n";
  out << "<text x='" << (ml + width - mr) / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-family='sans-serif' font-size='12'>"
      << "iteration</text>\n";
  // y tick labels at the extremes
  out << "<text x='" << ml - 6 << "' y='" << height - mb
      << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
      << (log_y ? "1e" + std::to_string(static_cast<int>(std::floor(ymin)))
                : std::to_string(ymin))
      << "</text>\n";
  out << "<text x='" << ml - 6 << "' y='" << mt + 10
      << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
      << (log_y ? "1e" + std::to_string(static_cast<int>(std::ceil(ymax)))
                : std::to_string(ymax))
      << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill='none' stroke='" << color
        << "' stroke-width='1.4' points='";
    for (size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
      out << px(i) << ',' << py(s.y[i]) << ' ';
    }
    out << "'/>\n";
    const double ly = mt + 16 + 16 * static_cast<double>(si);
    out << "<line x1='" << width - mr + 10 << "' y1='" << ly - 4 << "' x2='"
        << width - mr + 34 << "' y2='" << ly - 4 << "' stroke='" << color
        << "' stroke-width='2'/>\n";
    out << "<text x='" << width - mr + 40 << "' y='" << ly
        << "' font-family='sans-serif' font-size='11'>" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace hjprox
