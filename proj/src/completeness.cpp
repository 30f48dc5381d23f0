#include "envopt/completeness.hpp"

#include <stdexcept>

#include "envopt/roadmap.hpp"

namespace envopt {

double max_region_distance(const EnvironmentLayout& layout) {
  if (layout.starts.empty() || layout.goals.empty())
    throw std::invalid_argument("max_region_distance: empty S or D");
  // The farthest pair of points of two disks lies on the center line,
  // extended by both radii; the max over unions is the max over pairs.
  double d_max = 0.0;
  for (const auto& s : layout.starts)
    for (const auto& g : layout.goals)
      d_max = std::max(d_max, (s.center - g.center).norm() + s.radius + g.radius);
  return d_max;
}

ConditionReport offline_condition_from_terms(double free_area, int n, double d_max,
                                             double r_hat) {
  if (n < 0) throw std::invalid_argument("offline_condition: n < 0");
  if (!(r_hat > 0.0)) throw std::invalid_argument("offline_condition: r_hat <= 0");
  return ConditionReport::from_terms(free_area, 2.0 * n * d_max * r_hat);
}

ConditionReport offline_condition(const EnvironmentLayout& layout, int n, double r_hat) {
  const double d_max = max_region_distance(layout);
  std::vector<Body> occupied;
  occupied.reserve(layout.obstacles.size() + layout.starts.size() + layout.goals.size());
  for (const auto& o : layout.obstacles) occupied.emplace_back(o);
  for (const auto& s : layout.starts) occupied.emplace_back(s);
  for (const auto& g : layout.goals) occupied.emplace_back(g);
  const double free_area = layout.bounds.area() - region_area(occupied);
  return offline_condition_from_terms(free_area, n, d_max, r_hat);
}

ConditionReport online_capacity_condition(int n, double r_hat, double v_hat,
                                          double delta_dot) {
  if (n < 0 || r_hat < 0.0 || v_hat < 0.0 || delta_dot < 0.0)
    throw std::invalid_argument("online_capacity_condition: negative input");
  return ConditionReport::from_terms(delta_dot, 2.0 * n * r_hat * v_hat);
}

bool well_formed(const EnvironmentLayout& layout, double radius, double resolution) {
  if (layout.starts.size() != layout.goals.size())
    throw std::invalid_argument("well_formed: |starts| != |goals|");
  const double h = resolution > 0.0 ? resolution : radius * 0.5;
  const size_t n = layout.starts.size();
  for (size_t i = 0; i < n; ++i) {
    std::vector<DiskBody> others;
    others.reserve(2 * n - 2);
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      others.push_back(layout.starts[j]);
      others.push_back(layout.goals[j]);
    }
    const PathQuery q = roadmap_shortest_path(layout, layout.starts[i].center,
                                              layout.goals[i].center, radius, h, others);
    if (!q.reachable) return false;
  }
  return true;
}

}  // namespace envopt
