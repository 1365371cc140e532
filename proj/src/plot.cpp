#include "rifs/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rifs/error.hpp"

namespace rifs {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#393b79"};

std::string colour(int g) {
  if (g <= 0) return "#aaaaaa";
  return kPalette[(g - 1) % static_cast<int>(std::size(kPalette))];
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::pair<double, double> oblique_projection(double x, double y, double z) {
  // Azimuth 35 degrees, elevation 25 degrees.
  const double ca = 0.8191520442889918, sa = 0.573576436351046;
  const double ce = 0.9063077870366499, se = 0.42261826174069944;
  double u = ca * x - sa * y;
  double v = ce * z - se * (sa * x + ca * y);
  return {u, v};
}

std::string scatter_svg(const ScatterPlot& p, int width, int height) {
  if (p.x.empty() || p.x.size() != p.y.size() || p.group.size() != p.x.size())
    fail(ErrorCode::InvalidArgument, "plot: empty or mismatched point arrays");
  for (std::size_t i = 0; i < p.x.size(); ++i)
    if (!std::isfinite(p.x[i]) || !std::isfinite(p.y[i])) fail(ErrorCode::InvalidArgument, "plot: non-finite point");

  const double margin_l = 60, margin_r = 20, margin_t = 40, margin_b = 50;
  auto [xmin_it, xmax_it] = std::minmax_element(p.x.begin(), p.x.end());
  auto [ymin_it, ymax_it] = std::minmax_element(p.y.begin(), p.y.end());
  double x0 = *xmin_it, x1 = *xmax_it, y0 = *ymin_it, y1 = *ymax_it;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pw = width - margin_l - margin_r, ph = height - margin_t - margin_b;
  auto sx = [&](double x) { return margin_l + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return margin_t + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + f2(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(p.title) +
       "</text>\n";
  s += "<rect x=\"" + f2(margin_l) + "\" y=\"" + f2(margin_t) + "\" width=\"" + f2(pw) + "\" height=\"" + f2(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    s += "<text x=\"" + f2(sx(xv)) + "\" y=\"" + f2(margin_t + ph + 16) + "\" text-anchor=\"middle\">" + tick(xv) +
         "</text>\n";
    s += "<text x=\"" + f2(margin_l - 6) + "\" y=\"" + f2(sy(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) +
         "</text>\n";
  }
  if (!p.xlabel.empty())
    s += "<text x=\"" + f2(margin_l + pw / 2) + "\" y=\"" + f2(height - 10.0) + "\" text-anchor=\"middle\">" +
         escape(p.xlabel) + "</text>\n";
  if (!p.ylabel.empty())
    s += "<text x=\"14\" y=\"" + f2(margin_t + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         f2(margin_t + ph / 2) + ")\">" + escape(p.ylabel) + "</text>\n";

  // One group element per colour keeps the file small.
  std::vector<int> groups(p.group);
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  for (int g : groups) {
    s += "<g fill=\"" + colour(g) + "\" fill-opacity=\"0.6\">\n";
    for (std::size_t i = 0; i < p.x.size(); ++i)
      if (p.group[i] == g) s += "<circle cx=\"" + f2(sx(p.x[i])) + "\" cy=\"" + f2(sy(p.y[i])) + "\" r=\"1.2\"/>\n";
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace rifs
