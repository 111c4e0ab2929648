#include "fanwarp/windowfit.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fanwarp {

namespace {

struct RowExtent {
  int row = 0;
  int left = 0;   // leftmost above-threshold column
  int right = 0;  // rightmost above-threshold column
};

struct FittedLine {
  double a = 0.0;  // x = a*y + b
  double b = 0.0;
};

// Least squares for x = a*y + b over (y, x) observations.
FittedLine fit_line(const std::vector<double>& ys, const std::vector<double>& xs) {
  const double n = static_cast<double>(ys.size());
  double sy = 0, sx = 0, syy = 0, syx = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    sy += ys[i];
    sx += xs[i];
    syy += ys[i] * ys[i];
    syx += ys[i] * xs[i];
  }
  const double denom = n * syy - sy * sy;
  FittedLine line;
  if (std::abs(denom) < 1e-12) {
    // Single-row band; treat the edge as vertical through the mean x.
    line.a = 0.0;
    line.b = sx / n;
  } else {
    line.a = (n * syx - sy * sx) / denom;
    line.b = (sx - line.a * sy) / n;
  }
  return line;
}

}  // namespace

ViewingWindow estimate_window(const GrayImage& img, double threshold) {
  if (img.empty()) throw std::invalid_argument("estimate_window: empty image");

  std::vector<RowExtent> rows;
  std::size_t bright = 0;
  for (int y = 0; y < img.height; ++y) {
    int left = -1;
    int right = -1;
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) > threshold) {
        ++bright;
        if (left < 0) left = x;
        right = x;
      }
    }
    if (left >= 0) rows.push_back({y, left, right});
  }

  const double occupancy = static_cast<double>(bright) / (static_cast<double>(img.width) * img.height);
  if (occupancy < kMinWindowOccupancy) {
    std::ostringstream os;
    os << "no window found: only " << occupancy * 100.0 << "% of pixels above threshold "
       << threshold;
    throw std::runtime_error(os.str());
  }

  // Middle 60% of occupied rows; the ends of convex fans curve away from the
  // lateral edge lines.
  const std::size_t n_rows = rows.size();
  std::size_t lo = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(n_rows)));
  std::size_t hi = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(n_rows)));
  if (hi <= lo + 1) {
    lo = 0;
    hi = n_rows;
  }
  std::vector<double> ys, xl, xr;
  ys.reserve(hi - lo);
  xl.reserve(hi - lo);
  xr.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    ys.push_back(rows[i].row + 0.5);
    // The boundary lies within half a pixel of the extremal bright centers.
    xl.push_back(static_cast<double>(rows[i].left));
    xr.push_back(static_cast<double>(rows[i].right + 1));
  }
  const FittedLine left = fit_line(ys, xl);
  const FittedLine right = fit_line(ys, xr);

  const double y_top = static_cast<double>(rows.front().row);
  const double y_bot = static_cast<double>(rows.back().row + 1);

  // Crossed or touching edges make the corner set meaningless.
  if (std::abs(left.a - right.a) > 1e-12) {
    const double y_cross = (right.b - left.b) / (left.a - right.a);
    if (y_cross >= y_top && y_cross <= y_bot) {
      std::ostringstream os;
      os << "window estimation failed: fitted lateral edges cross at y=" << y_cross
         << " inside the occupied band [" << y_top << ", " << y_bot << "]";
      throw std::runtime_error(os.str());
    }
  }

  ViewingWindow w;
  w.p1_left = {left.a * y_top + left.b, y_top};
  w.p2_left = {left.a * y_bot + left.b, y_bot};
  w.p1_right = {right.a * y_top + right.b, y_top};
  w.p2_right = {right.a * y_bot + right.b, y_bot};
  if (!(w.p1_left.x < w.p1_right.x) || !(w.p2_left.x < w.p2_right.x)) {
    throw std::runtime_error("window estimation failed: fitted edges are out of order");
  }

  const double steep_left = left.a == 0.0 ? std::numeric_limits<double>::infinity()
                                          : 1.0 / std::abs(left.a);
  const double steep_right = right.a == 0.0 ? std::numeric_limits<double>::infinity()
                                            : 1.0 / std::abs(right.a);
  w.probe = (steep_left > kLinearSteepnessCutoff && steep_right > kLinearSteepnessCutoff)
                ? Probe::linear
                : Probe::convex;
  w.validate();
  return w;
}

}  // namespace fanwarp
