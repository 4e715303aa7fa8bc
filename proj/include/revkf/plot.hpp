#pragma once

// Minimal deterministic SVG line plots for sweep tables.

#include "revkf/eval.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace revkf::eval {

class EmptyTable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers_only{false};
};

struct AxesSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x{true};
  bool log_y{true};
  int width{640};
  int height{420};
};

/// One polyline per non-marker series, circles for marker series.
std::string plot_svg(const std::vector<Series>& series, const AxesSpec& axes);

/// Per-parameter mean as a polyline plus every trial as a marker.
std::string plot_sweep(const SweepTable& table, const AxesSpec& axes);

}  // namespace revkf::eval
