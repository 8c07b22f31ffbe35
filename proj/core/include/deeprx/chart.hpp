// Static SVG line charts: log-scale BER on y, linear x, hand-emitted with
// fixed-precision coordinates so identical inputs give identical bytes.
#pragma once

#include <string>
#include <vector>

namespace deeprx {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartAxes {
  std::string title;
  std::string x_label;
  std::string y_label = "BER";
};

// BER values of 0 (or below the 1e-6 floor) are clamped to the floor and
// annotated. Throws std::invalid_argument on empty input.
std::string render_line_chart_svg(const std::vector<ChartSeries>& series, const ChartAxes& axes);

void write_chart(const std::string& path, const std::vector<ChartSeries>& series,
                 const ChartAxes& axes);

}  // namespace deeprx
