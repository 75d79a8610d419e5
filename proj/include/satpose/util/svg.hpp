#pragma once

#include <string>
#include <vector>

namespace satpose {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // optional symmetric error bars (std over seeds)
};

struct SvgChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

std::string svg_line_chart(const SvgChartSpec& spec, const std::vector<SvgSeries>& series);

// Histogram with log-scaled counts (bars with count 0 are skipped).
std::string svg_histogram_logy(const SvgChartSpec& spec, const std::vector<double>& bin_edges,
                               const std::vector<long long>& counts);

}  // namespace satpose
