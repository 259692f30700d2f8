#include "symk/plots.hpp"

#include "symk/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace symk {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  double map(double v) const { return log ? std::log10(v) : v; }

  double fraction(double v) const { return (map(v) - lo) / (hi - lo); }
};

Axis make_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    const double m = a.map(v);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log) {
    const int span = int(a.hi - a.lo);
    const int stride = std::max(1, span / 8);
    for (int e = int(a.lo); e <= int(a.hi); e += stride) out.push_back(double(e));
    return out;
  }
  for (int i = 0; i <= 5; ++i) out.push_back(a.lo + (a.hi - a.lo) * i / 5.0);
  return out;
}

std::string tick_label(const Axis& a, double t) {
  if (a.log) return "1e" + std::to_string(int(std::lround(t)));
  return num(t);
}

}  // namespace

void validate_series(const Series& s) {
  require(!s.x.empty(), ErrorCode::EmptySeries, "series '" + s.label + "' has no points");
  require(s.x.size() == s.y.size(), ErrorCode::DimensionMismatch,
          "series '" + s.label + "' has mismatched lengths");
  for (std::size_t i = 1; i < s.x.size(); ++i) {
    require(s.x[i] > s.x[i - 1], ErrorCode::InvalidArgument,
            "series '" + s.label + "' abscissae must strictly increase");
  }
}

void write_line_plot(const std::vector<Series>& series, const PlotOptions& options, std::ostream& out) {
  require(!series.empty(), ErrorCode::EmptySeries, "no series to plot");
  for (const auto& s : series) validate_series(s);

  // Log axes cannot show values <= 0; such points are drawn at kLogFloor and
  // listed in a comment so the clamp is visible in the file.
  std::vector<std::string> clamped;
  std::vector<std::vector<double>> xs, ys;
  std::vector<double> all_x, all_y;
  for (const auto& s : series) {
    std::vector<double> x = s.x, y = s.y;
    for (std::size_t i = 0; i < x.size(); ++i) {
      require(std::isfinite(x[i]) && std::isfinite(y[i]), ErrorCode::NonFinite,
              "series '" + s.label + "' has a non-finite point");
      if (options.log_x && !(x[i] > 0.0)) {
        clamped.push_back(s.label + " x[" + std::to_string(i) + "]=" + num(x[i]));
        x[i] = kLogFloor;
      }
      if (options.log_y && !(y[i] > 0.0)) {
        clamped.push_back(s.label + " y[" + std::to_string(i) + "]=" + num(y[i]));
        y[i] = kLogFloor;
      }
    }
    all_x.insert(all_x.end(), x.begin(), x.end());
    all_y.insert(all_y.end(), y.begin(), y.end());
    xs.push_back(std::move(x));
    ys.push_back(std::move(y));
  }
  const Axis ax = make_axis(all_x, options.log_x);
  const Axis ay = make_axis(all_y, options.log_y);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.fraction(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.fraction(v)) * ph; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << coord(kWidth) << "\" height=\""
      << coord(kHeight) << "\" viewBox=\"0 0 " << coord(kWidth) << ' ' << coord(kHeight) << "\">\n";
  for (const auto& c : clamped) out << "<!-- clamped to " << num(kLogFloor) << ": " << escape(c) << " -->\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << coord(kWidth) << "\" height=\"" << coord(kHeight)
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << coord(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(options.title) << "</text>\n";
  out << "<rect x=\"" << coord(kLeft) << "\" y=\"" << coord(kTop) << "\" width=\"" << coord(pw)
      << "\" height=\"" << coord(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ticks(ax)) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    out << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(kTop + ph) << "\" x2=\"" << coord(x)
        << "\" y2=\"" << coord(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(x) << "\" y=\"" << coord(kTop + ph + 20)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(ax, t) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = kTop + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * ph;
    out << "<line x1=\"" << coord(kLeft - 5) << "\" y1=\"" << coord(y) << "\" x2=\"" << coord(kLeft)
        << "\" y2=\"" << coord(y) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(kLeft - 8) << "\" y=\"" << coord(y + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << tick_label(ay, t) << "</text>\n";
  }
  out << "<text x=\"" << coord(kLeft + pw / 2) << "\" y=\"" << coord(kHeight - 15)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(options.x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << coord(kTop + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << coord(kTop + ph / 2) << ")\">" << escape(options.y_label)
      << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs[k].size(); ++i) {
      if (i) out << ' ';
      out << coord(px(xs[k][i])) << ',' << coord(py(ys[k][i]));
    }
    out << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * double(k);
    out << "<line x1=\"" << coord(kWidth - kRight + 10) << "\" y1=\"" << coord(ly) << "\" x2=\""
        << coord(kWidth - kRight + 30) << "\" y2=\"" << coord(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << coord(kWidth - kRight + 35) << "\" y=\"" << coord(ly + 4)
        << "\" font-size=\"11\">" << escape(series[k].label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace symk
