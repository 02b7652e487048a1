#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace navbench {

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  ///< (x, y), drawn in x order
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
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

inline std::string svg_num(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

/// Round step for about `target` ticks over `span`.
inline double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace detail

/// Self-contained line chart with markers, axes, ticks and a legend.
inline std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  const std::vector<ChartSeries>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 180, T = 40, B = 55;
  const double pw = W - L - R, ph = H - T - B;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!any) {
        x0 = x1 = x;
        y0 = y1 = y;
        any = true;
      }
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  y0 = std::min(y0, 0.0);
  if (x1 == x0) x0 -= 1, x1 += 1;
  if (y1 == y0) y1 = y0 + 1;
  const double ystep = detail::nice_step(y1 - y0, 5);
  y1 = std::ceil(y1 / ystep) * ystep;
  y0 = std::floor(y0 / ystep) * ystep;
  const double xpad = 0.08 * (x1 - x0);
  x0 -= xpad, x1 += xpad;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::svg_escape(title)
    << "</text>\n";
  for (double y = y0; y <= y1 + 1e-9 * ystep; y += ystep) {
    o << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << sy(y) << "\" y2=\"" << sy(y)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << detail::svg_num(y)
      << "</text>\n";
  }
  std::vector<double> xs;
  for (const auto& s : series)
    for (auto [x, y] : s.points) xs.push_back(x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs)
    o << "<text x=\"" << sx(x) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << detail::svg_num(x)
      << "</text>\n";
  o << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << T + ph << "\" y2=\"" << T + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" x2=\"" << L << "\" y1=\"" << T << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << detail::svg_escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::svg_escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % std::size(palette)];
    auto pts = series[i].points;
    std::sort(pts.begin(), pts.end());
    std::string poly;
    for (auto [x, y] : pts) {
      if (!std::isfinite(y)) continue;
      poly += detail::svg_num(sx(x)) + "," + detail::svg_num(sy(y)) + " ";
      o << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << poly << "\"/>\n";
    const double ly = T + 10 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << L + pw + 14 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"12\" fill=\"" << color
      << "\"/>\n";
    o << "<text x=\"" << L + pw + 32 << "\" y=\"" << ly + 2 << "\">" << detail::svg_escape(series[i].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace navbench
