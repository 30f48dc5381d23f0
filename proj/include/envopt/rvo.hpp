// Decentralized agent trajectory planner based on reciprocal velocity
// obstacles, with sampled candidate velocities and a hard per-step
// non-penetration guarantee.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "envopt/geometry.hpp"

namespace envopt {

struct AgentState {
  int id = 0;
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double v_max = 0.1;
};

struct PlannerConfig {
  double time_horizon = 10.0;     // collision look-ahead, in units of dt
  int sample_count = 256;         // candidate velocity budget
  double neighbor_radius = 2.0;   // local sensing range
  std::uint64_t rng_seed = 0;     // reserved for stochastic candidate schemes;
                                  // the default ring sampler is deterministic
};

struct VelocityChoice {
  Vec2 velocity;
  bool stopped = false;  // no admissible candidate; agent halts this step
};

// Goal-directed velocity: magnitude min(v_max, dist/dt) toward the goal,
// zero at the goal.
Vec2 preferred_velocity(const AgentState& agent, double dt = 1.0);

// Time until the moving point p (relative velocity u) comes within R of the
// origin-anchored point q; +inf when it never does, 0 when already inside.
double time_to_collision_disk(const Vec2& rel_pos, const Vec2& rel_vel, double combined_radius);

// Time until a disk of radius r centered at p and moving with u first touches
// the rectangle; +inf when it never does, 0 when already overlapping.
double time_to_collision_rect(const Vec2& p, const Vec2& u, const RectBody& rect, double r);

// Minimum-cost admissible candidate velocity. Reads only the agent itself,
// neighbors within cfg.neighbor_radius and the obstacle bodies.
VelocityChoice select_velocity(const AgentState& agent, std::span<const AgentState> neighbors,
                               std::span<const RectBody> obstacles, const PlannerConfig& cfg,
                               double dt = 1.0);

struct AgentsStep {
  std::vector<AgentState> agents;
  std::vector<bool> stopped;  // per agent: select_velocity halt flag
};

// Synchronous update: all velocities are selected against the pre-step
// snapshot, then every position advances by velocity * dt.
AgentsStep step_agents(std::span<const AgentState> agents, std::span<const RectBody> obstacles,
                       double dt, const PlannerConfig& cfg);

}  // namespace envopt
