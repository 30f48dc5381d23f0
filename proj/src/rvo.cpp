#include "envopt/rvo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace envopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Candidate directions closed exactly under reflection about either axis,
// so that mirrored scenes select mirrored velocities bit-for-bit. Axis
// vectors are exact; quadrant angles are reflected by sign flips.
std::vector<Vec2> symmetric_directions(int count) {
  int quarter = std::max(1, count / 4);
  std::vector<Vec2> dirs;
  dirs.reserve(4 * quarter);
  dirs.push_back({1.0, 0.0});
  dirs.push_back({-1.0, 0.0});
  dirs.push_back({0.0, 1.0});
  dirs.push_back({0.0, -1.0});
  for (int k = 1; k < quarter; ++k) {
    const double a = (M_PI / 2.0) * k / quarter;
    const double c = std::cos(a), s = std::sin(a);
    dirs.push_back({c, s});
    dirs.push_back({-c, s});
    dirs.push_back({c, -s});
    dirs.push_back({-c, -s});
  }
  return dirs;
}

}  // namespace

Vec2 preferred_velocity(const AgentState& agent, double dt) {
  const Vec2 to_goal = agent.goal - agent.position;
  const double d = to_goal.norm();
  if (d == 0.0) return {};
  const double speed = std::min(agent.v_max, d / dt);
  return to_goal * (speed / d);
}

double time_to_collision_disk(const Vec2& rel_pos, const Vec2& rel_vel, double combined_radius) {
  const double c = rel_pos.norm_sq() - combined_radius * combined_radius;
  if (c < 0.0) return 0.0;
  const double a = rel_vel.norm_sq();
  if (a == 0.0) return kInf;
  const double b = rel_pos.dot(rel_vel);  // >0 when closing
  if (b <= 0.0) return kInf;
  const double disc = b * b - a * c;
  if (disc < 0.0) return kInf;
  const double t = (b - std::sqrt(disc)) / a;
  return t >= 0.0 ? t : kInf;
}

double time_to_collision_rect(const Vec2& p, const Vec2& u, const RectBody& rect, double r) {
  if (point_rect_dist(p, rect) < r) return 0.0;
  double best = kInf;
  // Flat faces of the rectangle inflated by r.
  if (u.x > 0.0) {
    const double t = (rect.min_corner.x - r - p.x) / u.x;
    if (t >= 0.0) {
      const double y = p.y + u.y * t;
      if (y >= rect.min_corner.y && y <= rect.max_corner.y) best = std::min(best, t);
    }
  }
  if (u.x < 0.0) {
    const double t = (rect.max_corner.x + r - p.x) / u.x;
    if (t >= 0.0) {
      const double y = p.y + u.y * t;
      if (y >= rect.min_corner.y && y <= rect.max_corner.y) best = std::min(best, t);
    }
  }
  if (u.y > 0.0) {
    const double t = (rect.min_corner.y - r - p.y) / u.y;
    if (t >= 0.0) {
      const double x = p.x + u.x * t;
      if (x >= rect.min_corner.x && x <= rect.max_corner.x) best = std::min(best, t);
    }
  }
  if (u.y < 0.0) {
    const double t = (rect.max_corner.y + r - p.y) / u.y;
    if (t >= 0.0) {
      const double x = p.x + u.x * t;
      if (x >= rect.min_corner.x && x <= rect.max_corner.x) best = std::min(best, t);
    }
  }
  // Rounded corners.
  const Vec2 corners[4] = {rect.min_corner,
                           {rect.max_corner.x, rect.min_corner.y},
                           rect.max_corner,
                           {rect.min_corner.x, rect.max_corner.y}};
  for (const Vec2& c : corners) best = std::min(best, time_to_collision_disk(c - p, u, r));
  return best;
}

VelocityChoice select_velocity(const AgentState& agent, std::span<const AgentState> neighbors,
                               std::span<const RectBody> obstacles, const PlannerConfig& cfg,
                               double dt) {
  const Vec2 v_pref = preferred_velocity(agent, dt);
  const double horizon = cfg.time_horizon * dt;
  const double step_reach = agent.v_max * dt;

  std::vector<const AgentState*> near_agents;
  for (const auto& nb : neighbors) {
    if (nb.id == agent.id) continue;
    if ((nb.position - agent.position).norm() <= cfg.neighbor_radius) near_agents.push_back(&nb);
  }
  // Obstacles that can matter within the horizon, and the subset close
  // enough to constrain this very step.
  std::vector<const RectBody*> near_rects;
  std::vector<const RectBody*> touch_rects;
  std::vector<char> penetrating;
  const double horizon_reach = agent.radius + agent.v_max * horizon;
  for (const auto& o : obstacles) {
    const double d = point_rect_dist(agent.position, o);
    if (d > std::min(cfg.neighbor_radius, horizon_reach)) continue;
    near_rects.push_back(&o);
    if (d < agent.radius + step_reach + 1e-12) {
      touch_rects.push_back(&o);
      // Already inside (possible only when external motion pushed the body
      // onto us): require the candidate not to worsen the penetration
      // instead of the usual clearance rule.
      penetrating.push_back(d < agent.radius ? 1 : 0);
    }
  }

  // One step of candidate v is admissible iff it cannot interpenetrate even
  // under worst-case simultaneous neighbor motion:
  //   |q_j - (p + v dt)| >= r_i + r_j + v_max_j * dt   for every neighbor j
  //   dist(segment p -> p + v dt, rect) >= r_i          for every obstacle.
  auto admissible = [&](const Vec2& v) {
    const Vec2 p_next = agent.position + v * dt;
    for (const AgentState* nb : near_agents) {
      const double need = agent.radius + nb->radius + nb->v_max * dt;
      if ((nb->position - p_next).norm() < need) return false;
    }
    for (size_t k = 0; k < touch_rects.size(); ++k) {
      if (penetrating[k]) {
        if (point_rect_dist(p_next, *touch_rects[k]) <
            point_rect_dist(agent.position, *touch_rects[k]))
          return false;
      } else if (segment_rect_dist(agent.position, p_next, *touch_rects[k]) < agent.radius) {
        return false;
      }
    }
    return true;
  };

  auto min_ttc = [&](const Vec2& v) {
    double ttc = kInf;
    for (const AgentState* nb : near_agents) {
      // Reciprocal assumption: the neighbor shares the avoidance effort.
      const Vec2 rel_vel = v * 2.0 - agent.velocity - nb->velocity;
      ttc = std::min(ttc, time_to_collision_disk(nb->position - agent.position, rel_vel,
                                                 agent.radius + nb->radius));
    }
    for (const RectBody* o : near_rects)
      ttc = std::min(ttc, time_to_collision_rect(agent.position, v, *o, agent.radius));
    return ttc;
  };

  // Deterministic candidate set: direction rings x speed levels, the
  // preferred velocity and a full stop.
  const int ring = std::max(4, std::min(32, cfg.sample_count));
  const int levels = std::max(1, cfg.sample_count / ring);
  std::vector<Vec2> candidates;
  candidates.reserve(static_cast<size_t>(ring) * levels + 2);
  candidates.push_back(v_pref);
  candidates.push_back({0.0, 0.0});
  const auto dirs = symmetric_directions(ring);
  for (const Vec2& d : dirs)
    for (int l = 1; l <= levels; ++l)
      candidates.push_back(d * (agent.v_max * l / levels));

  bool found = false;
  Vec2 best_v{};
  double best_cost = kInf;
  for (const Vec2& v : candidates) {
    if (v.norm() > agent.v_max * (1.0 + 1e-12)) continue;
    const double deviation = (v - v_pref).norm();
    if (found && deviation > best_cost) continue;  // penalty only adds cost
    if (!admissible(v)) continue;
    const double ttc = min_ttc(v);
    if (ttc <= 0.0) continue;
    const double c = deviation + (ttc < horizon ? 1.0 / ttc : 0.0);
    // Tie-break toward larger y, then larger x: keeps the selection
    // deterministic and mirror-equivariant.
    if (!found || c < best_cost ||
        (c == best_cost && (v.y > best_v.y || (v.y == best_v.y && v.x > best_v.x)))) {
      found = true;
      best_cost = c;
      best_v = v;
    }
  }
  if (!found) return {{0.0, 0.0}, true};
  return {best_v, false};
}

AgentsStep step_agents(std::span<const AgentState> agents, std::span<const RectBody> obstacles,
                       double dt, const PlannerConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_agents: dt <= 0");
  AgentsStep out;
  out.agents.assign(agents.begin(), agents.end());
  out.stopped.assign(agents.size(), false);
  std::vector<Vec2> chosen(agents.size());
  for (size_t i = 0; i < agents.size(); ++i) {
    const auto choice = select_velocity(agents[i], agents, obstacles, cfg, dt);
    chosen[i] = choice.velocity;
    out.stopped[i] = choice.stopped;
  }
  for (size_t i = 0; i < agents.size(); ++i) {
    out.agents[i].velocity = chosen[i];
    out.agents[i].position += chosen[i] * dt;
  }
  return out;
}

}  // namespace envopt
