#pragma once

// Minimal SVG emitters for line plots and heat maps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "adatom/csv.hpp"

namespace adatom::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  return colors[i % 6];
}

inline std::string num(double v) { return csv::format(std::round(v * 100.0) / 100.0); }

/// Viridis-like ramp for v in [0, 1].
inline std::string ramp(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(68 + v * (253 - 68));
  const int g = static_cast<int>(1 + v * (231 - 1));
  const int b = static_cast<int>(84 + (v < 0.5 ? v * 2 * (140 - 84) : (1 - v) * 2 * (140 - 84) + (37 - 84) * (v - 0.5) * 2));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, std::clamp(b, 0, 255));
  return buf;
}

}  // namespace detail

inline void line_plot(std::ostream& out, const std::vector<Series>& series, const std::string& xlabel,
                      const std::string& ylabel, const std::string& title = {}) {
  const double w = 640, h = 400, ml = 70, mr = 20, mt = 30, mb = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]); x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]); y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!title.empty()) out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n"
      << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2 << ")\" text-anchor=\"middle\">"
      << ylabel << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    out << "<text x=\"" << detail::num(px(xv)) << "\" y=\"" << h - mb + 16 << "\" font-size=\"11\" text-anchor=\"middle\">"
        << csv::format(std::round(xv * 1000) / 1000) << "</text>\n"
        << "<text x=\"" << ml - 5 << "\" y=\"" << detail::num(py(yv) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
        << csv::format(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    out << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << detail::palette(si) << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) out << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i])) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << w - mr - 5 << "\" y=\"" << mt + 15 + 14 * si << "\" font-size=\"12\" text-anchor=\"end\" fill=\""
        << detail::palette(si) << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

/// values[row][col]; rows run along y, columns along x. Values in [0, 1].
inline void heat_map(std::ostream& out, const std::vector<std::vector<double>>& values, double x0, double x1,
                     double y0, double y1, const std::string& xlabel, const std::string& ylabel) {
  const double w = 640, h = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  const std::size_t rows = values.size(), cols = rows ? values[0].size() : 0;
  const double cw = (w - ml - mr) / std::max<std::size_t>(cols, 1);
  const double ch = (h - mt - mb) / std::max<std::size_t>(rows, 1);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out << "<rect x=\"" << detail::num(ml + c * cw) << "\" y=\"" << detail::num(h - mb - (r + 1) * ch) << "\" width=\""
          << detail::num(cw + 0.5) << "\" height=\"" << detail::num(ch + 0.5) << "\" fill=\"" << detail::ramp(values[r][c])
          << "\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n"
      << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2 << ")\" text-anchor=\"middle\">"
      << ylabel << "</text>\n"
      << "<text x=\"" << ml << "\" y=\"" << h - mb + 16 << "\" font-size=\"11\">" << csv::format(x0) << "</text>\n"
      << "<text x=\"" << w - mr << "\" y=\"" << h - mb + 16 << "\" font-size=\"11\" text-anchor=\"end\">" << csv::format(x1) << "</text>\n"
      << "<text x=\"" << ml - 5 << "\" y=\"" << h - mb << "\" font-size=\"11\" text-anchor=\"end\">" << csv::format(y0) << "</text>\n"
      << "<text x=\"" << ml - 5 << "\" y=\"" << mt + 10 << "\" font-size=\"11\" text-anchor=\"end\">" << csv::format(y1) << "</text>\n"
      << "</svg>\n";
}

}  // namespace adatom::svg
