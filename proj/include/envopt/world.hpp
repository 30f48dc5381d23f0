// Online setting: obstacles move with acceleration-constrained velocities
// chosen by a decentralized policy while agents navigate simultaneously.
#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "envopt/geometry.hpp"
#include "envopt/rvo.hpp"
#include "envopt/trace.hpp"

namespace envopt {

struct ObstacleState {
  int id = 0;
  RectBody body;
  Vec2 velocity;
  double v_max = 0.1;
  double a_max = 0.1;
};

struct WorldState {
  std::vector<AgentState> agents;
  std::vector<ObstacleState> obstacles;
  int time_step = 0;
  RectBody bounds{{0.0, 0.0}, {8.0, 8.0}};
};

struct ObstacleCommand {
  Vec2 desired_velocity;
};

// Entities whose center lies within `radius` of obstacle j's center, self
// excluded.
std::pair<std::vector<ObstacleState>, std::vector<AgentState>> neighbors(
    const WorldState& world, int obstacle, double radius);

// Velocity change clamped to a_max*dt, speed clamped to v_max, then the body
// advances by the new velocity.
ObstacleState apply_command(const ObstacleState& obstacle, const ObstacleCommand& cmd, double dt);

struct WorldStepResult {
  WorldState world;
  std::vector<TraceEvent> events;
  std::vector<bool> agent_stopped;
};

// Obstacles apply commands and agents apply planner velocities, all computed
// from the pre-step snapshot and committed simultaneously.
WorldStepResult step_world(const WorldState& world, const std::vector<ObstacleCommand>& commands,
                           const PlannerConfig& planner_cfg, double dt);

// Per-obstacle local observation handed to the decentralized policy: the
// obstacle's own state plus neighbor states within the communication radius.
struct LocalObservation {
  ObstacleState self;
  std::vector<ObstacleState> obstacle_neighbors;
  std::vector<AgentState> agent_neighbors;
};

LocalObservation local_observation(const WorldState& world, int obstacle, double comm_radius);

class ObstacleCommandPolicy {
 public:
  virtual ~ObstacleCommandPolicy() = default;
  virtual ObstacleCommand command(const LocalObservation& obs, std::mt19937_64& rng) = 0;
};

// Centralized command provider (benchmark drivers; sees the whole snapshot).
class WorldCommandSource {
 public:
  virtual ~WorldCommandSource() = default;
  virtual std::vector<ObstacleCommand> commands(const WorldState& world,
                                                std::mt19937_64& rng) = 0;
};

// Episode loop shared by the decentralized and centralized drivers.
EpisodeTrace run_world_episode(const WorldState& init, WorldCommandSource& source,
                               int max_steps, std::uint64_t rng_seed,
                               const PlannerConfig& planner_cfg = {});

// Runs the world until all agents arrive or max_steps elapse; every obstacle
// builds its observation from neighbors within comm_radius only.
EpisodeTrace run_online_episode(const WorldState& init, ObstacleCommandPolicy& policy,
                                int max_steps, double comm_radius, std::uint64_t rng_seed,
                                const PlannerConfig& planner_cfg = {});

}  // namespace envopt
