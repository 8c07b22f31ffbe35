#include "deeprx/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace deeprx {

namespace {
constexpr double kFloor = 1e-6;
constexpr double kWidth = 880, kHeight = 560;
constexpr double kLeft = 80, kRight = 700, kTop = 50, kBottom = 500;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}
}  // namespace

std::string render_line_chart_svg(const std::vector<ChartSeries>& series, const ChartAxes& axes) {
  if (series.empty()) throw std::invalid_argument("chart: need at least one series");
  double x_min = 0, x_max = 0, y_max = kFloor;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("chart: x/y length mismatch");
    if (s.x.empty()) throw std::invalid_argument("chart: empty series '" + s.name + "'");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (x_max == x_min) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  const int dec_lo = static_cast<int>(std::floor(std::log10(kFloor)));  // -6
  int dec_hi = static_cast<int>(std::ceil(std::log10(y_max)));
  if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;

  const auto x_pos = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
  };
  const auto y_pos = [&](double y) {
    const double ly = std::log10(std::max(y, kFloor));
    return kBottom - (ly - dec_lo) / (dec_hi - dec_lo) * (kBottom - kTop);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt2((kLeft + kRight) / 2) << "\" y=\"28\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"18\">" << axes.title << "</text>\n";

  // Decade gridlines and y labels.
  for (int d = dec_lo; d <= dec_hi; ++d) {
    const double y = y_pos(std::pow(10.0, d));
    svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(y) << "\" x2=\"" << fmt2(kRight)
        << "\" y2=\"" << fmt2(y) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fmt2(kLeft - 8) << "\" y=\"" << fmt2(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" << d
        << "</text>\n";
  }
  // Five evenly spaced x ticks.
  for (int t = 0; t <= 4; ++t) {
    const double x = x_min + (x_max - x_min) * t / 4.0;
    const double px = x_pos(x);
    svg << "<line x1=\"" << fmt2(px) << "\" y1=\"" << fmt2(kBottom) << "\" x2=\"" << fmt2(px)
        << "\" y2=\"" << fmt2(kBottom + 6) << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << fmt2(px) << "\" y=\"" << fmt2(kBottom + 22)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << fmt_tick(x)
        << "</text>\n";
  }
  // Axes.
  svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(kTop) << "\" x2=\"" << fmt2(kLeft)
      << "\" y2=\"" << fmt2(kBottom) << "\" stroke=\"#333333\"/>\n";
  svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(kBottom) << "\" x2=\"" << fmt2(kRight)
      << "\" y2=\"" << fmt2(kBottom) << "\" stroke=\"#333333\"/>\n";
  svg << "<text x=\"" << fmt2((kLeft + kRight) / 2) << "\" y=\"" << fmt2(kHeight - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << axes.x_label
      << "</text>\n";
  svg << "<text x=\"20\" y=\"" << fmt2((kTop + kBottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
      << "transform=\"rotate(-90 20 " << fmt2((kTop + kBottom) / 2) << ")\">" << axes.y_label
      << "</text>\n";

  // Series.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << (i ? " " : "") << fmt2(x_pos(s.x[i])) << "," << fmt2(y_pos(s.y[i]));
    svg << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const bool clamped = s.y[i] < kFloor;
      svg << "<circle cx=\"" << fmt2(x_pos(s.x[i])) << "\" cy=\"" << fmt2(y_pos(s.y[i]))
          << "\" r=\"3.5\" fill=\"" << (clamped ? "white" : color) << "\" stroke=\"" << color
          << "\"";
      if (clamped) {
        svg << "><title>BER below chart floor 1e-6 (clamped)</title></circle>\n";
      } else {
        svg << "/>\n";
      }
    }
  }
  // Legend.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double ly = kTop + 10 + 22.0 * static_cast<double>(si);
    svg << "<line x1=\"" << fmt2(kRight + 16) << "\" y1=\"" << fmt2(ly) << "\" x2=\""
        << fmt2(kRight + 44) << "\" y2=\"" << fmt2(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt2(kRight + 50) << "\" y=\"" << fmt2(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << series[si].name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_chart(const std::string& path, const std::vector<ChartSeries>& series,
                 const ChartAxes& axes) {
  const std::string svg = render_line_chart_svg(series, axes);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open chart for writing: " + path);
  out << svg;
}

}  // namespace deeprx
