// Centralized comparator: move obstacles that block agents' shortest paths.
#pragma once

#include <map>
#include <random>
#include <vector>

#include "envopt/geometry.hpp"
#include "envopt/grid_env.hpp"

namespace envopt {

// obstacle index -> agents whose shortest path it blocks.
using BlockReport = std::map<int, std::vector<int>>;

// Obstacle j blocks agent i iff removing j strictly shortens (or makes
// finite) the shortest path, or i's current shortest path passes j with
// clearance < radius.
BlockReport blocking_obstacles(const EnvironmentLayout& layout, std::span<const Vec2> starts,
                               std::span<const Vec2> goals, double radius);

// One continuous round: obstacles in index order, each blocking obstacle is
// displaced one obstacle-velocity step along a uniformly random heading that
// does not collide with other bodies; others stay.
EnvironmentLayout heuristic_round(const EnvironmentLayout& layout, std::span<const Vec2> starts,
                                  std::span<const Vec2> goals, double radius, double v_max,
                                  std::mt19937_64& rng);

// One discrete round on the grid: each blocking obstacle moves to a uniformly
// random adjacent free cell (stays, flagged, when none exists).
struct GridRoundResult {
  GridWorld world;
  int blocked_checks = 0;   // one per obstacle
  int blocked_count = 0;    // obstacles found blocking this round
  int stuck_count = 0;      // blocking obstacles with no free adjacent cell
};

GridRoundResult heuristic_round_grid(const GridWorld& world, double radius,
                                     std::mt19937_64& rng);

// Runs `rounds` grid rounds.
GridWorld run_heuristic_grid(const GridWorld& world, int rounds, double radius,
                             std::uint64_t rng_seed);

}  // namespace envopt
