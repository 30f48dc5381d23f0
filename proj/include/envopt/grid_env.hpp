// Offline setting: occupancy-grid world, sequential per-obstacle move actions
// forming rounds, then a navigation rollout on the frozen layout.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "envopt/geometry.hpp"
#include "envopt/rvo.hpp"
#include "envopt/trace.hpp"

namespace envopt {

struct GridCell {
  int col = 0;
  int row = 0;
  bool operator==(const GridCell& o) const { return col == o.col && row == o.row; }
};

enum class GridAction : int { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4 };
constexpr int kGridActionCount = 5;

struct GridWorld {
  int width = 0;
  int height = 0;
  std::vector<GridCell> obstacles;  // index order is the fixed obstacle ordering
  std::vector<GridCell> agents;
  std::vector<GridCell> goals;

  bool in_bounds(const GridCell& c) const {
    return c.col >= 0 && c.col < width && c.row >= 0 && c.row < height;
  }
  bool occupied(const GridCell& c) const;
  // Throws std::invalid_argument when bounds/disjointness invariants fail.
  void validate() const;
};

// Binary channel stack: 0 obstacles, 1 agents, 2 goals, 3 one-hot of the
// obstacle currently under consideration. Layout: [channel][row][col].
struct Observation {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double& at(int c, int row, int col) {
    return data[((size_t)c * height + row) * width + col];
  }
  double at(int c, int row, int col) const {
    return data[((size_t)c * height + row) * width + col];
  }
};

Observation encode_observation(const GridWorld& world, int active_obstacle);

struct MoveResult {
  GridWorld world;
  bool moved = false;  // false: out of bounds or target occupied (lawful no-op)
};

MoveResult apply_move(const GridWorld& world, int obstacle, GridAction action);

// Continuous lift: cells become unit squares, agents disks at cell centers.
constexpr double kGridAgentRadius = 0.3;
Vec2 cell_center(const GridCell& c);
EnvironmentLayout lift_to_layout(const GridWorld& world, double agent_radius = kGridAgentRadius);

// Policy over obstacle moves: implementations sample from the CNN head or
// supply a fixed strategy in tests.
class ObstacleMovePolicy {
 public:
  virtual ~ObstacleMovePolicy() = default;
  virtual GridAction act(const Observation& obs, std::mt19937_64& rng) = 0;
};

struct MoveRecord {
  int round = 0;
  int obstacle = 0;
  GridAction action = GridAction::Stay;
  bool moved = false;
};

struct OptimizationEpisode {
  GridWorld world;                 // final layout
  std::vector<MoveRecord> moves;   // one per policy invocation
};

// Iterates obstacles in index order for max_rounds rounds, sampling one move
// per obstacle per round.
OptimizationEpisode run_optimization_episode(const GridWorld& world, ObstacleMovePolicy& policy,
                                             int max_rounds, std::uint64_t rng_seed);

constexpr double kArrivalTolerance = 0.1;

// Lifts the grid and runs the RVO planner until all agents are within the
// arrival tolerance of their goals or max_steps is reached.
EpisodeTrace navigate(const GridWorld& world, const PlannerConfig& planner_cfg,
                      int max_steps = 500);

}  // namespace envopt
