#include "envopt/geometry.hpp"

#include <algorithm>
#include <limits>

namespace envopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

void EnvironmentLayout::validate() const {
  if (!bounds.valid()) throw std::invalid_argument("layout: invalid bounds");
  auto inside = [&](double lo_x, double lo_y, double hi_x, double hi_y) {
    return lo_x >= bounds.min_corner.x && lo_y >= bounds.min_corner.y &&
           hi_x <= bounds.max_corner.x && hi_y <= bounds.max_corner.y;
  };
  for (const auto& d : starts)
    if (!d.valid() || !inside(d.center.x - d.radius, d.center.y - d.radius,
                              d.center.x + d.radius, d.center.y + d.radius))
      throw std::invalid_argument("layout: start disk invalid or outside bounds");
  for (const auto& d : goals)
    if (!d.valid() || !inside(d.center.x - d.radius, d.center.y - d.radius,
                              d.center.x + d.radius, d.center.y + d.radius))
      throw std::invalid_argument("layout: goal disk invalid or outside bounds");
  for (const auto& r : obstacles)
    if (!r.valid() || !inside(r.min_corner.x, r.min_corner.y, r.max_corner.x, r.max_corner.y))
      throw std::invalid_argument("layout: obstacle invalid or outside bounds");
  // S, D and Delta must be pairwise non-overlapping regions. Touching is fine.
  auto overlaps_disk_rect = [](const DiskBody& d, const RectBody& r) {
    return point_rect_dist(d.center, r) < d.radius;
  };
  for (const auto& s : starts)
    for (const auto& o : obstacles)
      if (overlaps_disk_rect(s, o)) throw std::invalid_argument("layout: S overlaps Delta");
  for (const auto& g : goals)
    for (const auto& o : obstacles)
      if (overlaps_disk_rect(g, o)) throw std::invalid_argument("layout: D overlaps Delta");
  for (const auto& s : starts)
    for (const auto& g : goals)
      if ((s.center - g.center).norm() < s.radius + g.radius)
        throw std::invalid_argument("layout: S overlaps D");
}

// --- primitives ---

double point_rect_dist(const Vec2& p, const RectBody& r) {
  const double dx = std::max({r.min_corner.x - p.x, 0.0, p.x - r.max_corner.x});
  const double dy = std::max({r.min_corner.y - p.y, 0.0, p.y - r.max_corner.y});
  return std::hypot(dx, dy);
}

double segment_point_dist(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len_sq = ab.norm_sq();
  if (len_sq == 0.0) return (p - a).norm();
  const double t = clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v = (q - p).cross(r - p);
    return (v > 0.0) - (v < 0.0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  auto on_seg = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
           std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
  };
  if (o1 == 0 && on_seg(a, b, c)) return true;
  if (o2 == 0 && on_seg(a, b, d)) return true;
  if (o3 == 0 && on_seg(c, d, a)) return true;
  if (o4 == 0 && on_seg(c, d, b)) return true;
  return false;
}

double segment_segment_dist(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min({segment_point_dist(a, b, c), segment_point_dist(a, b, d),
                   segment_point_dist(c, d, a), segment_point_dist(c, d, b)});
}

double segment_rect_dist(const Vec2& a, const Vec2& b, const RectBody& r) {
  if (r.contains(a) || r.contains(b)) return 0.0;
  const Vec2 p00 = r.min_corner;
  const Vec2 p10 {r.max_corner.x, r.min_corner.y};
  const Vec2 p11 = r.max_corner;
  const Vec2 p01 {r.min_corner.x, r.max_corner.y};
  return std::min({segment_segment_dist(a, b, p00, p10), segment_segment_dist(a, b, p10, p11),
                   segment_segment_dist(a, b, p11, p01), segment_segment_dist(a, b, p01, p00)});
}

// --- body/body distance ---

double dist(const DiskBody& a, const DiskBody& b) {
  // Radii grouped so the result is bit-identical under argument swap.
  return std::max(0.0, (a.center - b.center).norm() - (a.radius + b.radius));
}

double dist(const DiskBody& a, const RectBody& b) {
  return std::max(0.0, point_rect_dist(a.center, b) - a.radius);
}

double dist(const RectBody& a, const DiskBody& b) { return dist(b, a); }

double dist(const RectBody& a, const RectBody& b) {
  const double dx = std::max({b.min_corner.x - a.max_corner.x, 0.0, a.min_corner.x - b.max_corner.x});
  const double dy = std::max({b.min_corner.y - a.max_corner.y, 0.0, a.min_corner.y - b.max_corner.y});
  return std::hypot(dx, dy);
}

double dist(const Body& a, const Body& b) {
  return std::visit([](const auto& x, const auto& y) { return dist(x, y); }, a, b);
}

// --- union area ---
//
// Scanline decomposition: between two consecutive critical y values the
// combinatorial structure of the union of per-body x-intervals is constant,
// so each slab integrates exactly (rect boundaries are constants, disk
// boundaries are cx +/- sqrt(r^2 - (y-cy)^2) with a closed-form integral).

namespace {

struct SlabInterval {
  double lo, hi;        // endpoints at the probe height
  int body;             // body index
  int lo_side, hi_side; // -1 = left circle arc / rect min, +1 = right arc / rect max
};

// Integral of sqrt(r^2 - u^2) du from u0 to u1 (u clamped to [-r, r]).
// The antiderivative is evaluated pole-stable: near u = +/-r both the
// sqrt and the asin lose precision catastrophically in the naive form.
double circle_slice_integral(double r, double u0, double u1) {
  auto F = [r](double u) {
    u = clamp(u, -r, r);
    if (u < -0.5 * r) {
      const double t = r + u;  // exact by Sterbenz for |u| ~ r
      const double w = std::sqrt(std::max(0.0, t * (r - u)));
      return 0.5 * (u * w + r * r * (-M_PI_2 + 2.0 * std::asin(std::sqrt(t / (2.0 * r)))));
    }
    if (u > 0.5 * r) {
      const double t = r - u;
      const double w = std::sqrt(std::max(0.0, t * (r + u)));
      return 0.5 * (u * w + r * r * (M_PI_2 - 2.0 * std::asin(std::sqrt(t / (2.0 * r)))));
    }
    const double w = std::sqrt(std::max(0.0, r * r - u * u));
    return 0.5 * (u * w + r * r * std::asin(clamp(u / r, -1.0, 1.0)));
  };
  return F(u1) - F(u0);
}

// Integral over y in [y0,y1] of the x-boundary of `body` on the given side.
double boundary_integral(const Body& body, int side, double y0, double y1) {
  if (const auto* rect = std::get_if<RectBody>(&body)) {
    const double c = side < 0 ? rect->min_corner.x : rect->max_corner.x;
    return c * (y1 - y0);
  }
  const auto& d = std::get<DiskBody>(body);
  const double arc = circle_slice_integral(d.radius, y0 - d.center.y, y1 - d.center.y);
  return d.center.x * (y1 - y0) + (side < 0 ? -arc : arc);
}

}  // namespace

double region_area(std::span<const Body> bodies) {
  if (bodies.empty()) return 0.0;

  std::vector<double> ys;
  auto add_y = [&ys](double y) {
    if (std::isfinite(y)) ys.push_back(y);
  };
  for (const auto& b : bodies) {
    if (const auto* r = std::get_if<RectBody>(&b)) {
      add_y(r->min_corner.y);
      add_y(r->max_corner.y);
    } else {
      const auto& d = std::get<DiskBody>(b);
      add_y(d.center.y - d.radius);
      add_y(d.center.y + d.radius);
    }
  }
  // Topology can also change where boundary curves cross: circle/circle
  // intersections and circle crossings of rect vertical edges.
  for (size_t i = 0; i < bodies.size(); ++i) {
    const auto* di = std::get_if<DiskBody>(&bodies[i]);
    if (!di) continue;
    for (size_t j = 0; j < bodies.size(); ++j) {
      if (i == j) continue;
      if (const auto* dj = std::get_if<DiskBody>(&bodies[j])) {
        if (j < i) continue;  // unordered pair once
        const Vec2 delta = dj->center - di->center;
        const double d2 = delta.norm_sq();
        const double d = std::sqrt(d2);
        if (d <= 0.0) continue;
        const double r1 = di->radius, r2 = dj->radius;
        if (d > r1 + r2 || d < std::abs(r1 - r2)) continue;
        const double a = (r1 * r1 - r2 * r2 + d2) / (2.0 * d);
        const double h2 = r1 * r1 - a * a;
        const double h = std::sqrt(std::max(0.0, h2));
        const Vec2 mid = di->center + delta * (a / d);
        const Vec2 perp {-delta.y / d, delta.x / d};
        add_y(mid.y + perp.y * h);
        add_y(mid.y - perp.y * h);
      } else {
        const auto& rj = std::get<RectBody>(bodies[j]);
        for (double xe : {rj.min_corner.x, rj.max_corner.x}) {
          const double dx = xe - di->center.x;
          if (std::abs(dx) > di->radius) continue;
          const double w = std::sqrt(std::max(0.0, di->radius * di->radius - dx * dx));
          add_y(di->center.y + w);
          add_y(di->center.y - w);
        }
      }
    }
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  double area = 0.0;
  std::vector<SlabInterval> ivals;
  for (size_t s = 0; s + 1 < ys.size(); ++s) {
    const double y0 = ys[s], y1 = ys[s + 1];
    if (!(y1 > y0)) continue;
    const double ym = 0.5 * (y0 + y1);
    ivals.clear();
    for (size_t b = 0; b < bodies.size(); ++b) {
      if (const auto* r = std::get_if<RectBody>(&bodies[b])) {
        if (ym <= r->min_corner.y || ym >= r->max_corner.y) continue;
        ivals.push_back({r->min_corner.x, r->max_corner.x, (int)b, -1, +1});
      } else {
        const auto& d = std::get<DiskBody>(bodies[b]);
        const double dy = ym - d.center.y;
        if (std::abs(dy) >= d.radius) continue;
        const double w = std::sqrt(std::max(0.0, d.radius * d.radius - dy * dy));
        if (w <= 0.0) continue;
        ivals.push_back({d.center.x - w, d.center.x + w, (int)b, -1, +1});
      }
    }
    if (ivals.empty()) continue;
    std::sort(ivals.begin(), ivals.end(),
              [](const SlabInterval& a, const SlabInterval& b) { return a.lo < b.lo; });
    // Merge and integrate each run's bounding arcs over the slab.
    size_t k = 0;
    while (k < ivals.size()) {
      int lo_body = ivals[k].body, lo_side = ivals[k].lo_side;
      int hi_body = ivals[k].body, hi_side = ivals[k].hi_side;
      double run_hi = ivals[k].hi;
      size_t j = k + 1;
      while (j < ivals.size() && ivals[j].lo <= run_hi) {
        if (ivals[j].hi > run_hi) {
          run_hi = ivals[j].hi;
          hi_body = ivals[j].body;
          hi_side = ivals[j].hi_side;
        }
        ++j;
      }
      area += boundary_integral(bodies[hi_body], hi_side, y0, y1) -
              boundary_integral(bodies[lo_body], lo_side, y0, y1);
      k = j;
    }
  }
  return area;
}

double region_area(const std::vector<Body>& bodies) {
  return region_area(std::span<const Body>(bodies));
}

double region_area(const std::vector<RectBody>& rects) {
  std::vector<Body> bodies(rects.begin(), rects.end());
  return region_area(bodies);
}

// --- path clearance ---

bool collision_free_path(std::span<const Vec2> waypoints, double radius,
                         const EnvironmentLayout& layout) {
  if (waypoints.size() < 2) throw std::invalid_argument("collision_free_path: need >= 2 waypoints");
  // The bounds region is convex, so checking the vertices suffices.
  const RectBody inner = layout.bounds.shrunk(radius);
  for (const auto& p : waypoints) {
    if (!(p.x >= inner.min_corner.x && p.x <= inner.max_corner.x &&
          p.y >= inner.min_corner.y && p.y <= inner.max_corner.y))
      return false;
  }
  for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
    for (const auto& o : layout.obstacles) {
      if (segment_rect_dist(waypoints[i], waypoints[i + 1], o) < radius) return false;
    }
  }
  return true;
}

}  // namespace envopt
