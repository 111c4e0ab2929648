#pragma once

#include <array>
#include <string>

namespace fanwarp {

struct Point2 {
  double x = 0.0;
  double y = 0.0;  // pixels, increasing downward
};

enum class Probe { convex, linear };

const char* to_string(Probe p);
Probe probe_from_string(const std::string& s);  // throws on unknown value

// Steepness of a lateral window edge: vertical depth divided by horizontal
// outward run. +infinity encodes a vertical edge (linear probe); smaller
// values mean a wider flare.
struct EdgeSlope {
  double value = 0.0;
  bool is_vertical() const;
};

struct EdgeSlopes {
  EdgeSlope left;
  EdgeSlope right;
};

// Quadrilateral viewing window of an ultrasound frame.
//
//   p1_left ------ p1_right      (probe contact edge, shallow)
//     /                 \
//   p2_left -------- p2_right    (deep edge)
struct ViewingWindow {
  Point2 p1_left;
  Point2 p2_left;
  Point2 p1_right;
  Point2 p2_right;
  Probe probe = Probe::convex;

  // Annotation order: {p1_left, p2_left, p1_right, p2_right}.
  std::array<Point2, 4> corners() const;
  // Cyclic boundary order for rasterization: p1_left, p1_right, p2_right, p2_left.
  std::array<Point2, 4> polygon() const;
  // Throws std::invalid_argument with a corner dump on any violated invariant.
  void validate() const;
};

// 3x3 projective matrix, row-major. Normalization convention: m[8] = 1 when
// |m[8]| > 1e-9, otherwise unit Frobenius norm.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity();
  static Homography translation(double dx, double dy);
  double determinant() const;
  Homography normalized() const;
};

// Slopes below this produce near-degenerate, almost-collinear corner sets.
constexpr double kMinSlope = 0.5;

EdgeSlopes edge_slopes(const ViewingWindow& w);

// Moves the bottom corners outward/inward so both lateral edges take the
// slope magnitude new_slope; top corners and bottom y stay fixed. When
// new_slope equals an edge's current slope that edge is returned bit-equal.
ViewingWindow resample_window(const ViewingWindow& w, double new_slope,
                              double min_slope = kMinSlope);

// Exact 4-point direct linear transform: 8 equations, 8 unknowns, m[8] = 1.
// Gaussian elimination with partial pivoting. Throws on collinear triples
// (the error names the offending points) and on singular systems.
Homography estimate_homography(const std::array<Point2, 4>& src,
                               const std::array<Point2, 4>& dst);

Point2 apply_homography(const Homography& h, Point2 p);

Homography invert(const Homography& h);

// outer ∘ inner: apply(compose(a, b), p) == apply(a, apply(b, p)).
Homography compose(const Homography& outer, const Homography& inner);

// Wire formats. Homography: 9 doubles row-major. Window annotation:
// [p1lx, p1ly, p2lx, p2ly, p1rx, p1ry, p2rx, p2ry].
std::array<double, 8> window_annotation(const ViewingWindow& w);
ViewingWindow window_from_annotation(const std::array<double, 8>& a, Probe probe);

}  // namespace fanwarp
