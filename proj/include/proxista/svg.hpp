#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace proxista::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false; ///< draw points instead of a polyline
};

/// Minimal hand-emitted line chart: axes, tick labels, legend, optional log-y,
/// dashed vertical markers.
struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::vector<double> x_markers;
  int width = 720;
  int height = 440;

  std::string render() const;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

} // namespace detail

inline std::string LineChart::render() const {
  constexpr double left = 70, right = 160, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  auto usable = [&](double y) { return std::isfinite(y) && (!log_y || y > 0.0); };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1;
  if (!(ymin <= ymax)) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" "
    << "font-size=\"14\">" << detail::escape(title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << detail::num(pw)
    << "\" height=\"" << detail::num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    const double yy = top + (1.0 - i / 4.0) * ph;
    o << "<text x=\"" << detail::num(px(xv)) << "\" y=\"" << detail::num(top + ph + 16)
      << "\" text-anchor=\"middle\">" << detail::tick(xv) << "</text>\n";
    o << "<text x=\"" << detail::num(left - 6) << "\" y=\"" << detail::num(yy + 4)
      << "\" text-anchor=\"end\">" << detail::tick(log_y ? std::pow(10.0, yv) : yv)
      << "</text>\n";
    o << "<line x1=\"" << left << "\" x2=\"" << detail::num(left + pw) << "\" y1=\""
      << detail::num(yy) << "\" y2=\"" << detail::num(yy) << "\" stroke=\"#eeeeee\"/>\n";
  }
  o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << height - 10
    << "\" text-anchor=\"middle\">" << detail::escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << detail::num(top + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << detail::escape(y_label)
    << (log_y ? " (log)" : "") << "</text>\n";

  for (double m : x_markers) {
    if (m < xmin || m > xmax) continue;
    o << "<line x1=\"" << detail::num(px(m)) << "\" x2=\"" << detail::num(px(m)) << "\" y1=\""
      << top << "\" y2=\"" << detail::num(top + ph)
      << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = detail::palette(si);
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!usable(s.y[i])) continue;
        o << "<circle cx=\"" << detail::num(px(s.x[i])) << "\" cy=\"" << detail::num(py(s.y[i]))
          << "\" r=\"2.5\" fill=\"none\" stroke=\"" << color << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!usable(s.y[i])) continue;
        o << (first ? "" : " ") << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i]));
        first = false;
      }
      o << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(si);
    o << "<line x1=\"" << detail::num(left + pw + 10) << "\" x2=\"" << detail::num(left + pw + 30)
      << "\" y1=\"" << detail::num(ly) << "\" y2=\"" << detail::num(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << detail::num(left + pw + 35) << "\" y=\"" << detail::num(ly + 4) << "\">"
      << detail::escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

} // namespace proxista::svg
