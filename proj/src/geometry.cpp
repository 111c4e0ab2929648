#include "fanwarp/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fanwarp {

namespace {

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Twice the signed triangle area.
double cross2(Point2 p, Point2 q, Point2 r) {
  return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
}

bool collinear(Point2 p, Point2 q, Point2 r) {
  const double area2 = cross2(p, q, r);
  const double scale = std::hypot(q.x - p.x, q.y - p.y) * std::hypot(r.x - p.x, r.y - p.y);
  return std::abs(area2) <= 1e-9 * std::max(scale, 1.0);
}

std::string dump_corners(const ViewingWindow& w) {
  std::ostringstream os;
  os << "p1_left=(" << w.p1_left.x << "," << w.p1_left.y << ") "
     << "p2_left=(" << w.p2_left.x << "," << w.p2_left.y << ") "
     << "p1_right=(" << w.p1_right.x << "," << w.p1_right.y << ") "
     << "p2_right=(" << w.p2_right.x << "," << w.p2_right.y << ") "
     << "probe=" << to_string(w.probe);
  return os.str();
}

[[noreturn]] void invalid_window(const ViewingWindow& w, const std::string& reason) {
  throw std::invalid_argument("invalid viewing window: " + reason + "; " + dump_corners(w));
}

const char* kCornerNames[4] = {"p1_left", "p2_left", "p1_right", "p2_right"};

}  // namespace

const char* to_string(Probe p) {
  return p == Probe::convex ? "convex" : "linear";
}

Probe probe_from_string(const std::string& s) {
  if (s == "convex") return Probe::convex;
  if (s == "linear") return Probe::linear;
  throw std::invalid_argument("unknown probe kind \"" + s + "\" (allowed: convex, linear)");
}

bool EdgeSlope::is_vertical() const {
  return std::isinf(value);
}

std::array<Point2, 4> ViewingWindow::corners() const {
  return {p1_left, p2_left, p1_right, p2_right};
}

std::array<Point2, 4> ViewingWindow::polygon() const {
  return {p1_left, p1_right, p2_right, p2_left};
}

void ViewingWindow::validate() const {
  const auto c = corners();
  for (int i = 0; i < 4; ++i) {
    if (!finite(c[i])) invalid_window(*this, std::string(kCornerNames[i]) + " not finite");
  }
  if (!(p1_left.y < p2_left.y)) invalid_window(*this, "p1_left must be above p2_left");
  if (!(p1_right.y < p2_right.y)) invalid_window(*this, "p1_right must be above p2_right");
  if (!(p1_left.x < p1_right.x)) invalid_window(*this, "p1_left must be left of p1_right");
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (collinear(c[i], c[j], c[k])) {
          invalid_window(*this, std::string("corners ") + kCornerNames[i] + ", " +
                                    kCornerNames[j] + ", " + kCornerNames[k] + " are collinear");
        }
      }
    }
  }
}

Homography Homography::identity() {
  return Homography{};
}

Homography Homography::translation(double dx, double dy) {
  Homography h;
  h.m = {1, 0, dx, 0, 1, dy, 0, 0, 1};
  return h;
}

double Homography::determinant() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::normalized() const {
  Homography out = *this;
  if (std::abs(m[8]) > 1e-9) {
    if (m[8] == 1.0) return out;
    for (double& v : out.m) v /= m[8];
  } else {
    double fro = 0.0;
    for (double v : m) fro += v * v;
    fro = std::sqrt(fro);
    if (fro < 1e-12) throw std::runtime_error("cannot normalize all-zero homography");
    for (double& v : out.m) v /= fro;
  }
  return out;
}

EdgeSlopes edge_slopes(const ViewingWindow& w) {
  w.validate();
  const double inf = std::numeric_limits<double>::infinity();
  const double depth_left = w.p2_left.y - w.p1_left.y;
  const double run_left = w.p1_left.x - w.p2_left.x;
  const double depth_right = w.p2_right.y - w.p1_right.y;
  const double run_right = w.p2_right.x - w.p1_right.x;
  EdgeSlopes s;
  s.left.value = run_left <= 0.0 ? inf : depth_left / run_left;
  s.right.value = run_right <= 0.0 ? inf : depth_right / run_right;
  return s;
}

ViewingWindow resample_window(const ViewingWindow& w, double new_slope, double min_slope) {
  w.validate();
  if (!std::isfinite(new_slope)) {
    throw std::invalid_argument("resample_window: new slope must be finite");
  }
  if (new_slope < min_slope) {
    std::ostringstream os;
    os << "resample_window: slope " << new_slope << " below minimum " << min_slope
       << "; caller should resample";
    throw std::invalid_argument(os.str());
  }
  const EdgeSlopes old = edge_slopes(w);
  const double depth_left = w.p2_left.y - w.p1_left.y;
  const double depth_right = w.p2_right.y - w.p1_right.y;
  ViewingWindow out = w;
  if (old.left.value != new_slope) {
    out.p2_left.x = w.p1_left.x - depth_left / new_slope;
  }
  if (old.right.value != new_slope) {
    out.p2_right.x = w.p1_right.x + depth_right / new_slope;
  }
  out.validate();
  return out;
}

namespace {

// Solves A x = b in place, partial pivoting. n <= 8.
void solve_linear(double a[8][8], double b[8], int n) {
  double max_entry = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) max_entry = std::max(max_entry, std::abs(a[i][j]));
  }
  const double pivot_floor = 1e-12 * std::max(max_entry, 1.0);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (std::abs(a[pivot][col]) <= pivot_floor) {
      throw std::runtime_error("homography system is singular (degenerate correspondences)");
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a[col][j], a[pivot][j]);
      std::swap(b[col], b[pivot]);
    }
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row][col] / a[col][col];
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a[row][j] -= f * a[col][j];
      b[row] -= f * b[col];
    }
  }
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[row];
    for (int j = row + 1; j < n; ++j) acc -= a[row][j] * b[j];
    b[row] = acc / a[row][row];
  }
}

void require_general_position(const std::array<Point2, 4>& pts, const char* which) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (collinear(pts[i], pts[j], pts[k])) {
          std::ostringstream os;
          os << "estimate_homography: " << which << " points " << i << ", " << j << ", " << k
             << " are collinear: (" << pts[i].x << "," << pts[i].y << ") (" << pts[j].x << ","
             << pts[j].y << ") (" << pts[k].x << "," << pts[k].y << ")";
          throw std::invalid_argument(os.str());
        }
      }
    }
  }
}

}  // namespace

Homography estimate_homography(const std::array<Point2, 4>& src,
                               const std::array<Point2, 4>& dst) {
  require_general_position(src, "source");
  require_general_position(dst, "destination");

  // Rows per correspondence (x,y) -> (u,v), unknowns m0..m7 with m8 = 1:
  //   x  y  1  0  0  0  -ux  -uy | u
  //   0  0  0  x  y  1  -vx  -vy | v
  double a[8][8];
  double b[8];
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y;
    const double u = dst[i].x, v = dst[i].y;
    double* r0 = a[2 * i];
    double* r1 = a[2 * i + 1];
    r0[0] = x; r0[1] = y; r0[2] = 1; r0[3] = 0; r0[4] = 0; r0[5] = 0;
    r0[6] = -u * x; r0[7] = -u * y;
    r1[0] = 0; r1[1] = 0; r1[2] = 0; r1[3] = x; r1[4] = y; r1[5] = 1;
    r1[6] = -v * x; r1[7] = -v * y;
    b[2 * i] = u;
    b[2 * i + 1] = v;
  }
  solve_linear(a, b, 8);

  Homography h;
  for (int i = 0; i < 8; ++i) h.m[i] = b[i];
  h.m[8] = 1.0;
  return h;
}

Point2 apply_homography(const Homography& h, Point2 p) {
  const double d = h.m[6] * p.x + h.m[7] * p.y + h.m[8];
  if (std::abs(d) <= 1e-12) {
    std::ostringstream os;
    os << "apply_homography: point (" << p.x << "," << p.y << ") maps to infinity";
    throw std::runtime_error(os.str());
  }
  return {(h.m[0] * p.x + h.m[1] * p.y + h.m[2]) / d,
          (h.m[3] * p.x + h.m[4] * p.y + h.m[5]) / d};
}

Homography invert(const Homography& h) {
  const Homography n = h.normalized();
  const double det = n.determinant();
  if (std::abs(det) <= 1e-12) {
    throw std::runtime_error("invert: homography is singular");
  }
  const auto& m = n.m;
  Homography out;
  out.m[0] = (m[4] * m[8] - m[5] * m[7]) / det;
  out.m[1] = (m[2] * m[7] - m[1] * m[8]) / det;
  out.m[2] = (m[1] * m[5] - m[2] * m[4]) / det;
  out.m[3] = (m[5] * m[6] - m[3] * m[8]) / det;
  out.m[4] = (m[0] * m[8] - m[2] * m[6]) / det;
  out.m[5] = (m[2] * m[3] - m[0] * m[5]) / det;
  out.m[6] = (m[3] * m[7] - m[4] * m[6]) / det;
  out.m[7] = (m[1] * m[6] - m[0] * m[7]) / det;
  out.m[8] = (m[0] * m[4] - m[1] * m[3]) / det;
  return out.normalized();
}

Homography compose(const Homography& outer, const Homography& inner) {
  Homography out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += outer.m[3 * i + k] * inner.m[3 * k + j];
      out.m[3 * i + j] = acc;
    }
  }
  return out.normalized();
}

std::array<double, 8> window_annotation(const ViewingWindow& w) {
  return {w.p1_left.x, w.p1_left.y, w.p2_left.x,  w.p2_left.y,
          w.p1_right.x, w.p1_right.y, w.p2_right.x, w.p2_right.y};
}

ViewingWindow window_from_annotation(const std::array<double, 8>& a, Probe probe) {
  ViewingWindow w;
  w.p1_left = {a[0], a[1]};
  w.p2_left = {a[2], a[3]};
  w.p1_right = {a[4], a[5]};
  w.p2_right = {a[6], a[7]};
  w.probe = probe;
  w.validate();
  return w;
}

}  // namespace fanwarp
