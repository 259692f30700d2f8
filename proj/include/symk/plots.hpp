#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace symk {

/// Labeled (abscissa, value) sequence; abscissae strictly increase.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = true;
};

/// Values at or below zero on a log axis are drawn at this floor.
inline constexpr double kLogFloor = 1e-18;

/// Self-contained SVG line plot, one polyline per series. Output depends only
/// on the input. EmptySeries when there is nothing to draw.
void write_line_plot(const std::vector<Series>& series, const PlotOptions& options, std::ostream& out);

/// Checks that abscissae strictly increase and lengths agree.
void validate_series(const Series& s);

}  // namespace symk
