#pragma once

#include <string>
#include <vector>

namespace handkit::svg {

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int series = 0;
};

struct ScatterSeriesStyle {
  std::string label;
  std::string color;
};

struct ScatterSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 480;
  std::vector<ScatterSeriesStyle> series;
};

// Deterministic scatter plot: no timestamps, fixed float formatting, points
// emitted in input order.
std::string scatter_svg(const ScatterSpec& spec,
                        const std::vector<ScatterPoint>& points);

}  // namespace handkit::svg
