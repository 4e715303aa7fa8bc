#include "revkf/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace revkf::eval {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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
  bool log;
  double lo;
  double hi;

  double map(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

void fit_range(Axis& ax, const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const double v : values) {
    lo = std::min(lo, ax.map(v));
    hi = std::max(hi, ax.map(v));
  }
  if (ax.log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  }
  if (hi - lo <= 0.0) {
    lo -= 0.5;
    hi += 0.5;
  }
  ax.lo = lo;
  ax.hi = hi;
}

std::string tick_label(const Axis& ax, double t) {
  if (ax.log) return "1e" + std::to_string(static_cast<long long>(std::lround(t)));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", t);
  return buf;
}

std::vector<double> ticks(const Axis& ax) {
  std::vector<double> out;
  if (ax.log) {
    const long long span = std::llround(ax.hi - ax.lo);
    const long long step = std::max<long long>(1, (span + 7) / 8);
    for (long long e = std::llround(ax.lo); e <= std::llround(ax.hi); e += step) out.push_back(static_cast<double>(e));
  } else {
    for (int i = 0; i <= 4; ++i) out.push_back(ax.lo + (ax.hi - ax.lo) * i / 4.0);
  }
  return out;
}

}  // namespace

std::string plot_svg(const std::vector<Series>& series, const AxesSpec& axes) {
  Axis ax{axes.log_x, 0, 1};
  Axis ay{axes.log_y, 0, 1};
  std::vector<double> xs;
  std::vector<double> ys;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (ax.usable(x) && ay.usable(y)) {
        xs.push_back(x);
        ys.push_back(y);
      }
    }
  }
  if (xs.empty()) throw EmptyTable("nothing to plot: table has no plottable rows");
  fit_range(ax, xs);
  fit_range(ay, ys);

  const double left = 80, right = 20, top = 40, bottom = 60;
  const double pw = axes.width - left - right;
  const double ph = axes.height - top - bottom;
  auto px = [&](double x) { return left + (ax.map(x) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double y) { return top + ph - (ay.map(y) - ay.lo) / (ay.hi - ay.lo) * ph; };
  auto tx = [&](double t) { return left + (t - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto ty = [&](double t) { return top + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << axes.width << ' ' << axes.height
      << "\" width=\"" << axes.width << "\" height=\"" << axes.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << axes.width << "\" height=\"" << axes.height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(axes.width / 2.0) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(axes.title) << "</text>\n";
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (const double t : ticks(ax)) {
    out << "<line x1=\"" << num(tx(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(tx(t)) << "\" y2=\""
        << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(tx(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
        << tick_label(ax, t) << "</text>\n";
  }
  for (const double t : ticks(ay)) {
    out << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(ty(t)) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(ty(t)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(left - 8) << "\" y=\"" << num(ty(t) + 4) << "\" text-anchor=\"end\">"
        << tick_label(ay, t) << "</text>\n";
  }
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(axes.height - 16.0) << "\" text-anchor=\"middle\">"
      << escape(axes.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(top + ph / 2) << ")\">" << escape(axes.y_label) << "</text>\n";

  std::size_t color = 0;
  for (const Series& s : series) {
    const char* c = kPalette[color++ % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : s.points) {
      if (ax.usable(p.first) && ay.usable(p.second)) pts.push_back(p);
    }
    if (pts.empty()) continue;
    if (s.markers_only) {
      for (const auto& [x, y] : pts) {
        out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\"" << c
            << "\" fill-opacity=\"0.5\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        out << (i ? " " : "") << num(px(pts[i].first)) << ',' << num(py(pts[i].second));
      }
      out << "\"><title>" << escape(s.name) << "</title></polyline>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string plot_sweep(const SweepTable& table, const AxesSpec& axes) {
  if (table.rows.empty()) throw EmptyTable("sweep table is empty");
  Series mean{"mean", per_parameter_mean(table), false};
  Series trials{"trials", {}, true};
  for (const SweepRow& r : table.rows) trials.points.emplace_back(r.parameter, r.error);
  std::vector<Series> series{mean};
  if (trials.points.size() > mean.points.size()) series.push_back(trials);
  return plot_svg(series, axes);
}

}  // namespace revkf::eval
