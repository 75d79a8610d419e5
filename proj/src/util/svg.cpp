#include "satpose/util/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace satpose {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Frame {
  double x0, y0, x1, y1;        // pixel corners of the plot area
  double xmin, xmax, ymin, ymax;  // data range
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
  double py(double y) const { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); }
};

void expand(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 1e-12 ? std::abs(lo) * 0.1 : 1.0;
    lo -= pad;
    hi += pad;
  } else {
    const double pad = (hi - lo) * 0.06;
    lo -= pad;
    hi += pad;
  }
}

std::string axes(const Frame& f, const SvgChartSpec& spec, bool log_y) {
  std::string s;
  s += "<rect x='" + num(f.x0) + "' y='" + num(f.y0) + "' width='" + num(f.x1 - f.x0) +
       "' height='" + num(f.y1 - f.y0) + "' fill='none' stroke='#333'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double tx = f.xmin + (f.xmax - f.xmin) * i / 5.0;
    const double px = f.px(tx);
    s += "<line x1='" + num(px) + "' y1='" + num(f.y1) + "' x2='" + num(px) + "' y2='" +
         num(f.y1 + 4) + "' stroke='#333'/>\n";
    s += "<text x='" + num(px) + "' y='" + num(f.y1 + 16) +
         "' font-size='10' text-anchor='middle'>" + num(tx) + "</text>\n";
    const double ty = f.ymin + (f.ymax - f.ymin) * i / 5.0;
    const double py = f.py(ty);
    s += "<line x1='" + num(f.x0 - 4) + "' y1='" + num(py) + "' x2='" + num(f.x0) + "' y2='" +
         num(py) + "' stroke='#333'/>\n";
    const double label = log_y ? std::pow(10.0, ty) : ty;
    s += "<text x='" + num(f.x0 - 6) + "' y='" + num(py + 3) +
         "' font-size='10' text-anchor='end'>" + num(label) + "</text>\n";
  }
  s += "<text x='" + num((f.x0 + f.x1) / 2) + "' y='" + num(f.y1 + 32) +
       "' font-size='12' text-anchor='middle'>" + spec.x_label + "</text>\n";
  s += "<text x='14' y='" + num((f.y0 + f.y1) / 2) +
       "' font-size='12' text-anchor='middle' transform='rotate(-90 14 " +
       num((f.y0 + f.y1) / 2) + ")'>" + spec.y_label + "</text>\n";
  s += "<text x='" + num((f.x0 + f.x1) / 2) + "' y='16' font-size='13' text-anchor='middle'>" +
       spec.title + "</text>\n";
  return s;
}

}  // namespace

std::string svg_line_chart(const SvgChartSpec& spec, const std::vector<SvgSeries>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
      ymin = std::min(ymin, s.y[i] - e);
      ymax = std::max(ymax, s.y[i] + e);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  expand(xmin, xmax);
  expand(ymin, ymax);
  Frame f{56, 28, spec.width - 16.0, spec.height - 44.0, xmin, xmax, ymin, ymax};

  std::string s = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(spec.width) +
                  "' height='" + std::to_string(spec.height) + "'>\n";
  s += axes(f, spec, false);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ser = series[k];
    const char* color = kPalette[k % 8];
    std::string pts;
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      pts += num(f.px(ser.x[i])) + "," + num(f.py(ser.y[i])) + " ";
    }
    s += "<polyline points='" + pts + "' fill='none' stroke='" + color + "' stroke-width='1.5'/>\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      const double px = f.px(ser.x[i]);
      const double py = f.py(ser.y[i]);
      s += "<circle cx='" + num(px) + "' cy='" + num(py) + "' r='2.5' fill='" + color + "'/>\n";
      if (i < ser.yerr.size() && ser.yerr[i] > 0) {
        const double lo = f.py(ser.y[i] - ser.yerr[i]);
        const double hi = f.py(ser.y[i] + ser.yerr[i]);
        s += "<line x1='" + num(px) + "' y1='" + num(lo) + "' x2='" + num(px) + "' y2='" +
             num(hi) + "' stroke='" + color + "'/>\n";
        s += "<line x1='" + num(px - 3) + "' y1='" + num(lo) + "' x2='" + num(px + 3) + "' y2='" +
             num(lo) + "' stroke='" + color + "'/>\n";
        s += "<line x1='" + num(px - 3) + "' y1='" + num(hi) + "' x2='" + num(px + 3) + "' y2='" +
             num(hi) + "' stroke='" + color + "'/>\n";
      }
    }
    s += "<text x='" + num(f.x1 - 8) + "' y='" + num(f.y0 + 14 + 14.0 * k) +
         "' font-size='11' text-anchor='end' fill='" + color + "'>" + ser.label + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string svg_histogram_logy(const SvgChartSpec& spec, const std::vector<double>& bin_edges,
                               const std::vector<long long>& counts) {
  double cmax = 1.0;
  for (const long long c : counts) cmax = std::max(cmax, static_cast<double>(c));
  const double ymax = std::log10(cmax) + 0.3;
  double xmin = bin_edges.empty() ? 0.0 : bin_edges.front();
  double xmax = bin_edges.empty() ? 1.0 : bin_edges.back();
  expand(xmin, xmax);
  Frame f{56, 28, spec.width - 16.0, spec.height - 44.0, xmin, xmax, 0.0, ymax};

  std::string s = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(spec.width) +
                  "' height='" + std::to_string(spec.height) + "'>\n";
  s += axes(f, spec, true);
  for (std::size_t i = 0; i + 1 < bin_edges.size() && i < counts.size(); ++i) {
    if (counts[i] <= 0) continue;
    const double h = std::log10(static_cast<double>(counts[i])) + 0.3;  // 1 count stays visible
    const double x0 = f.px(bin_edges[i]);
    const double x1 = f.px(bin_edges[i + 1]);
    const double y = f.py(h);
    s += "<rect x='" + num(x0) + "' y='" + num(y) + "' width='" + num(std::max(1.0, x1 - x0 - 1)) +
         "' height='" + num(f.y1 - y) + "' fill='#1f77b4' stroke='#0b3d66'/>\n";
  }
  if (xmin < 0 && xmax > 0) {
    s += "<line x1='" + num(f.px(0)) + "' y1='" + num(f.y0) + "' x2='" + num(f.px(0)) + "' y2='" +
         num(f.y1) + "' stroke='#999' stroke-dasharray='4 3'/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace satpose
