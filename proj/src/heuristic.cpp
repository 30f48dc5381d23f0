#include "envopt/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "envopt/metrics.hpp"
#include "envopt/roadmap.hpp"

namespace envopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EnvironmentLayout without_obstacle(const EnvironmentLayout& layout, size_t j) {
  EnvironmentLayout reduced = layout;
  reduced.obstacles.erase(reduced.obstacles.begin() + (long)j);
  return reduced;
}

// Does obstacle j block any of the given base paths? `base` holds the current
// per-agent shortest paths on the full layout.
std::vector<int> blocked_agents_for(const EnvironmentLayout& layout, size_t j,
                                    std::span<const Vec2> starts, std::span<const Vec2> goals,
                                    double radius, std::span<const PathQuery> base) {
  std::vector<int> blocked;
  const EnvironmentLayout reduced = without_obstacle(layout, j);
  for (size_t i = 0; i < starts.size(); ++i) {
    bool blocks = false;
    if (base[i].reachable) {
      // Path grazing the obstacle with clearance below the radius.
      for (size_t k = 0; k + 1 < base[i].polyline.size() && !blocks; ++k)
        if (segment_rect_dist(base[i].polyline[k], base[i].polyline[k + 1],
                              layout.obstacles[j]) < radius)
          blocks = true;
    }
    if (!blocks) {
      const PathQuery alt =
          roadmap_shortest_path(reduced, starts[i], goals[i], radius, 0.0, {}, false);
      const double cur = base[i].reachable ? base[i].length : kInf;
      if (alt.reachable && alt.length < cur - 1e-9) blocks = true;
    }
    if (blocks) blocked.push_back((int)i);
  }
  return blocked;
}

std::vector<PathQuery> base_paths(const EnvironmentLayout& layout, std::span<const Vec2> starts,
                                  std::span<const Vec2> goals, double radius) {
  std::vector<PathQuery> base(starts.size());
  for (size_t i = 0; i < starts.size(); ++i)
    base[i] = roadmap_shortest_path(layout, starts[i], goals[i], radius, 0.0, {}, true);
  return base;
}

}  // namespace

BlockReport blocking_obstacles(const EnvironmentLayout& layout, std::span<const Vec2> starts,
                               std::span<const Vec2> goals, double radius) {
  if (starts.size() != goals.size())
    throw std::invalid_argument("blocking_obstacles: |starts| != |goals|");
  BlockReport report;
  const auto base = base_paths(layout, starts, goals, radius);
  for (size_t j = 0; j < layout.obstacles.size(); ++j) {
    auto blocked = blocked_agents_for(layout, j, starts, goals, radius, base);
    if (!blocked.empty()) report[(int)j] = std::move(blocked);
  }
  return report;
}

EnvironmentLayout heuristic_round(const EnvironmentLayout& layout, std::span<const Vec2> starts,
                                  std::span<const Vec2> goals, double radius, double v_max,
                                  std::mt19937_64& rng) {
  EnvironmentLayout cur = layout;
  auto base = base_paths(cur, starts, goals, radius);
  for (size_t j = 0; j < cur.obstacles.size(); ++j) {
    if (blocked_agents_for(cur, j, starts, goals, radius, base).empty()) continue;
    // Try random headings; keep the first displacement that stays in bounds
    // and does not collide with agents' endpoints or other obstacles.
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    for (int attempt = 0; attempt < 16; ++attempt) {
      const double a = angle(rng);
      const Vec2 step{std::cos(a) * v_max, std::sin(a) * v_max};
      const RectBody moved = cur.obstacles[j].translated(step);
      if (moved.min_corner.x < cur.bounds.min_corner.x ||
          moved.min_corner.y < cur.bounds.min_corner.y ||
          moved.max_corner.x > cur.bounds.max_corner.x ||
          moved.max_corner.y > cur.bounds.max_corner.y)
        continue;
      bool ok = true;
      for (size_t k = 0; k < cur.obstacles.size() && ok; ++k)
        if (k != j && dist(moved, cur.obstacles[k]) <= 0.0) ok = false;
      for (const auto& s : cur.starts)
        if (ok && dist(moved, s) <= 0.0) ok = false;
      for (const auto& g : cur.goals)
        if (ok && dist(moved, g) <= 0.0) ok = false;
      if (ok) {
        cur.obstacles[j] = moved;
        base = base_paths(cur, starts, goals, radius);
        break;
      }
    }
  }
  return cur;
}

GridRoundResult heuristic_round_grid(const GridWorld& world, double radius,
                                     std::mt19937_64& rng) {
  GridRoundResult res;
  res.world = world;
  std::vector<Vec2> starts, goals;
  for (const auto& c : world.agents) starts.push_back(cell_center(c));
  for (const auto& c : world.goals) goals.push_back(cell_center(c));

  EnvironmentLayout layout = lift_to_layout(res.world);
  auto base = base_paths(layout, starts, goals, radius);
  for (size_t j = 0; j < res.world.obstacles.size(); ++j) {
    ++res.blocked_checks;
    if (blocked_agents_for(layout, j, starts, goals, radius, base).empty()) continue;
    ++res.blocked_count;
    // Collect the free adjacent cells and pick one uniformly.
    std::vector<GridAction> options;
    for (GridAction a :
         {GridAction::Up, GridAction::Down, GridAction::Left, GridAction::Right}) {
      if (apply_move(res.world, (int)j, a).moved) options.push_back(a);
    }
    if (options.empty()) {
      ++res.stuck_count;
      continue;
    }
    std::uniform_int_distribution<size_t> pick(0, options.size() - 1);
    res.world = apply_move(res.world, (int)j, options[pick(rng)]).world;
    layout = lift_to_layout(res.world);
    base = base_paths(layout, starts, goals, radius);
  }
  return res;
}

GridWorld run_heuristic_grid(const GridWorld& world, int rounds, double radius,
                             std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  GridWorld cur = world;
  for (int r = 0; r < rounds; ++r) cur = heuristic_round_grid(cur, radius, rng).world;
  return cur;
}

}  // namespace envopt
