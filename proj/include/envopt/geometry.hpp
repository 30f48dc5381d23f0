// Exact 2-D distance, area and clearance primitives over disks and
// axis-aligned rectangles. Shared by every other component.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace envopt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  constexpr double norm_sq() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }

  // Unit vector; zero input yields the zero vector.
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct DiskBody {
  Vec2 center;
  double radius = 0.0;  // > 0

  double area() const { return M_PI * radius * radius; }
  bool valid() const { return center.finite() && radius > 0.0; }
};

struct RectBody {
  Vec2 min_corner;
  Vec2 max_corner;  // componentwise > min_corner

  double width() const { return max_corner.x - min_corner.x; }
  double height() const { return max_corner.y - min_corner.y; }
  double area() const { return width() * height(); }
  Vec2 center() const {
    return {(min_corner.x + max_corner.x) * 0.5, (min_corner.y + max_corner.y) * 0.5};
  }
  bool contains(const Vec2& p) const {
    return p.x >= min_corner.x && p.x <= max_corner.x && p.y >= min_corner.y &&
           p.y <= max_corner.y;
  }
  RectBody translated(const Vec2& d) const { return {min_corner + d, max_corner + d}; }
  // Rectangle shrunk inward by `m` on all sides (may be degenerate).
  RectBody shrunk(double m) const {
    return {{min_corner.x + m, min_corner.y + m}, {max_corner.x - m, max_corner.y - m}};
  }
  bool valid() const {
    return min_corner.finite() && max_corner.finite() && min_corner.x < max_corner.x &&
           min_corner.y < max_corner.y;
  }
};

using Body = std::variant<DiskBody, RectBody>;

// Workspace with starting, destination and obstacle regions.
struct EnvironmentLayout {
  RectBody bounds;
  std::vector<DiskBody> starts;
  std::vector<DiskBody> goals;
  std::vector<RectBody> obstacles;

  // Throws std::invalid_argument when a region invariant is broken
  // (bodies outside bounds, start/goal/obstacle regions overlapping).
  void validate() const;
};

// --- point / segment primitives ---

double point_rect_dist(const Vec2& p, const RectBody& r);
double segment_point_dist(const Vec2& a, const Vec2& b, const Vec2& p);
double segment_segment_dist(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);
double segment_rect_dist(const Vec2& a, const Vec2& b, const RectBody& r);

// --- body-to-body minimum distance (0 when the sets intersect) ---

double dist(const DiskBody& a, const DiskBody& b);
double dist(const DiskBody& a, const RectBody& b);
double dist(const RectBody& a, const DiskBody& b);
double dist(const RectBody& a, const RectBody& b);
double dist(const Body& a, const Body& b);

// Area of the union of the given bodies, overlaps counted once.
// Exact (per-slab analytic integration), not sampled.
double region_area(std::span<const Body> bodies);
double region_area(const std::vector<Body>& bodies);
double region_area(const std::vector<RectBody>& rects);

// True iff every point of the polyline keeps distance >= radius (closed
// condition) from every obstacle and the disk of that radius stays inside
// the workspace bounds. Requires at least 2 waypoints.
bool collision_free_path(std::span<const Vec2> waypoints, double radius,
                         const EnvironmentLayout& layout);

}  // namespace envopt
