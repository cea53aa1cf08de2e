#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bsda {

/// Raised for every precondition or data-format violation in the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend Point2 operator/(Point2 p, double s) { return {p.x / s, p.y / s}; }
  friend bool operator==(Point2 a, Point2 b) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Point2 o) const { return x * o.x + y * o.y; }
};

inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

/// Axis-aligned box, top-left origin, pixel units.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BBox&, const BBox&) = default;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool valid() const { return w > 0.0 && h > 0.0 && std::isfinite(x) && std::isfinite(y); }
};

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// Midpoint of the bottom edge, the ground-contact proxy of a pedestrian box.
Point2 bottom_point(const BBox& roi);

}  // namespace bsda
