#include "envopt/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace envopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Lattice {
  Vec2 origin;
  double h = 0.0;
  int nx = 0, ny = 0;
  std::vector<char> free;

  int idx(int ix, int iy) const { return iy * nx + ix; }
  Vec2 pos(int ix, int iy) const { return {origin.x + ix * h, origin.y + iy * h}; }
  bool in(int ix, int iy) const { return ix >= 0 && ix < nx && iy >= 0 && iy < ny; }
};

bool point_free(const Vec2& p, const EnvironmentLayout& layout, double clearance,
                std::span<const DiskBody> extra) {
  const RectBody inner = layout.bounds.shrunk(clearance);
  if (!(p.x >= inner.min_corner.x && p.x <= inner.max_corner.x && p.y >= inner.min_corner.y &&
        p.y <= inner.max_corner.y))
    return false;
  for (const auto& o : layout.obstacles)
    if (point_rect_dist(p, o) < clearance) return false;
  for (const auto& d : extra)
    if ((p - d.center).norm() < clearance + d.radius) return false;
  return true;
}

bool segment_free(const Vec2& a, const Vec2& b, const EnvironmentLayout& layout,
                  double clearance, std::span<const DiskBody> extra) {
  for (const auto& o : layout.obstacles)
    if (segment_rect_dist(a, b, o) < clearance) return false;
  for (const auto& d : extra)
    if (segment_point_dist(a, b, d.center) < clearance + d.radius) return false;
  return true;
}

Lattice build_lattice(const EnvironmentLayout& layout, double clearance, double h,
                      std::span<const DiskBody> extra) {
  Lattice lat;
  lat.origin = layout.bounds.min_corner;
  lat.h = h;
  lat.nx = (int)std::floor(layout.bounds.width() / h) + 1;
  lat.ny = (int)std::floor(layout.bounds.height() / h) + 1;
  lat.free.assign((size_t)lat.nx * lat.ny, 0);
  for (int iy = 0; iy < lat.ny; ++iy)
    for (int ix = 0; ix < lat.nx; ++ix)
      lat.free[lat.idx(ix, iy)] = point_free(lat.pos(ix, iy), layout, clearance, extra) ? 1 : 0;
  return lat;
}

std::optional<std::pair<int, int>> snap_to_free(const Lattice& lat, const Vec2& p) {
  const int cx = (int)std::lround((p.x - lat.origin.x) / lat.h);
  const int cy = (int)std::lround((p.y - lat.origin.y) / lat.h);
  // Nearest free node within a couple of cells of the query point.
  std::optional<std::pair<int, int>> best;
  double best_d = kInf;
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      const int ix = cx + dx, iy = cy + dy;
      if (!lat.in(ix, iy) || !lat.free[lat.idx(ix, iy)]) continue;
      const double d = (lat.pos(ix, iy) - p).norm();
      if (d < best_d) {
        best_d = d;
        best = std::make_pair(ix, iy);
      }
    }
  }
  return best;
}

}  // namespace

PathQuery roadmap_shortest_path(const EnvironmentLayout& layout, const Vec2& start,
                                const Vec2& goal, double clearance, double resolution,
                                std::span<const DiskBody> extra_disks, bool need_polyline) {
  PathQuery out;
  out.length = kInf;
  const double h = resolution > 0.0 ? resolution : clearance * 0.5;

  if ((start - goal).norm() == 0.0) {
    out.reachable = true;
    out.length = 0.0;
    if (need_polyline) out.polyline = {start, goal};
    return out;
  }

  const Lattice lat = build_lattice(layout, clearance, h, extra_disks);
  const auto s = snap_to_free(lat, start);
  const auto g = snap_to_free(lat, goal);
  if (!s || !g) return out;
  const Vec2 sp = lat.pos(s->first, s->second);
  const Vec2 gp = lat.pos(g->first, g->second);
  if (!segment_free(start, sp, layout, clearance, extra_disks) ||
      !segment_free(gp, goal, layout, clearance, extra_disks))
    return out;

  const int n = lat.nx * lat.ny;
  std::vector<double> gcost(n, kInf);
  std::vector<int> parent(n, -1);
  auto heur = [&](int ix, int iy) {
    const double dx = std::abs(ix - g->first) * h;
    const double dy = std::abs(iy - g->second) * h;
    return std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy);
  };
  using QItem = std::pair<double, int>;  // (f, node)
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> open;
  const int s_id = lat.idx(s->first, s->second);
  const int g_id = lat.idx(g->first, g->second);
  gcost[s_id] = 0.0;
  open.push({heur(s->first, s->second), s_id});

  static const int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const double sqrt2 = std::sqrt(2.0);

  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    const int ux = u % lat.nx, uy = u / lat.nx;
    if (f > gcost[u] + heur(ux, uy) + 1e-12) continue;  // stale entry
    if (u == g_id) break;
    for (int k = 0; k < 8; ++k) {
      const int vx = ux + kDx[k], vy = uy + kDy[k];
      if (!lat.in(vx, vy)) continue;
      const int v = lat.idx(vx, vy);
      if (!lat.free[v]) continue;
      const bool diag = k >= 4;
      if (diag) {
        // No corner cutting through blocked orthogonal neighbors.
        if (!lat.free[lat.idx(ux, vy)] || !lat.free[lat.idx(vx, uy)]) continue;
      }
      const double step = diag ? sqrt2 * h : h;
      const double cand = gcost[u] + step;
      if (cand >= gcost[v]) continue;
      // Lazy exact validation of the edge segment.
      if (!segment_free(lat.pos(ux, uy), lat.pos(vx, vy), layout, clearance, extra_disks))
        continue;
      gcost[v] = cand;
      parent[v] = u;
      open.push({cand + heur(vx, vy), v});
    }
  }

  if (gcost[g_id] == kInf) return out;
  out.reachable = true;
  out.length = (start - sp).norm() + gcost[g_id] + (gp - goal).norm();
  if (need_polyline) {
    std::vector<Vec2> rev;
    for (int u = g_id; u != -1; u = parent[u]) rev.push_back(lat.pos(u % lat.nx, u / lat.nx));
    out.polyline.push_back(start);
    out.polyline.insert(out.polyline.end(), rev.rbegin(), rev.rend());
    out.polyline.push_back(goal);
  }
  return out;
}

}  // namespace envopt
