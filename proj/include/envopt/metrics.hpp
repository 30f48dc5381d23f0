// Reward functions and evaluation metrics: SPL, PCTSpeed, team/obstacle
// rewards, discounted return and the shortest-path oracle.
#pragma once

#include <span>
#include <vector>

#include "envopt/geometry.hpp"
#include "envopt/trace.hpp"

namespace envopt {

struct RewardConfig {
  std::vector<double> beta;          // per-obstacle regularization in [0,1]
  double gamma = 0.99;               // discount
  double collision_penalty = -1.0;   // <= 0, applied per overlapping step
  double speed_penalty_weight = 0.0; // >= 0 enables the energy-saving variant

  double beta_for(size_t j) const {
    if (beta.empty()) return 0.5;
    return beta[j < beta.size() ? j : beta.size() - 1];
  }
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MetricsReport {
  Stat spl;
  Stat pct_speed;
  Stat success_rate;
  Stat obstacle_travel;
  int n_trials = 0;
};

struct SplTrial {
  bool success = false;
  double shortest = 0.0;
  double traveled = 0.0;
};

// Projection of the velocity onto the unit goal direction: equals speed when
// heading straight at the goal, negative when receding, 0 at the goal.
double agent_progress_reward(const Vec2& position, const Vec2& goal, const Vec2& velocity);

// PCTSpeed + mean success-weighted shortest/traveled ratio over agents.
double team_reward_offline(const EpisodeTrace& trace);

// Paper reward decomposition: mean team reward plus beta_j-weighted local term.
double obstacle_reward(std::span<const double> agent_rewards, size_t j, double local_reward,
                       const RewardConfig& cfg);

// Per-step local (individual) obstacle reward: collision penalty per overlap,
// plus the optional speed penalty.
double obstacle_local_reward(int overlap_count, double speed, const RewardConfig& cfg);

// Sum of gamma^t * r_t.
double discounted_return(std::span<const double> rewards, double gamma);

// Mean over trials of success * shortest / max(traveled, shortest).
double spl(std::span<const SplTrial> trials);

// Mean over agents of (mean per-step speed until arrival) / v_max.
double pct_speed(const EpisodeTrace& trace);

// Total obstacle center displacement accumulated over the trace.
double obstacle_travel(const EpisodeTrace& trace);

// Shortest clearance-respecting path length on the octile roadmap;
// +inf when disconnected. Resolution defaults to radius/2.
double shortest_path_length(const EnvironmentLayout& layout, const Vec2& start, const Vec2& goal,
                            double radius, double resolution = 0.0);

Stat mean_std(std::span<const double> values);

}  // namespace envopt
