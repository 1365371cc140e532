#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rifs {

struct ScatterPlot {
  std::string title, xlabel, ylabel;
  std::vector<double> x, y;
  std::vector<int> group;  // colour index; 0 is drawn grey (unlabeled)
};

// Self-contained SVG. Output depends only on the input values, with
// coordinates printed at fixed precision.
std::string scatter_svg(const ScatterPlot& plot, int width = 640, int height = 520);

// Fixed oblique view of 3D points onto the page plane.
std::pair<double, double> oblique_projection(double x, double y, double z);

}  // namespace rifs
