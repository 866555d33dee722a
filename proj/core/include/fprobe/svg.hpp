#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fprobe::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 720.0;
  double height = 420.0;
  std::string manifest;  ///< embedded as a comment
};

/// Polyline per series.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

/// One bar per label; negative values hang below the zero line.
std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const ChartOptions& options);

/// Dots per series, colour by series index.
std::string scatter_chart(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace fprobe::svg
