#include "envopt/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "envopt/roadmap.hpp"

namespace envopt {

double agent_progress_reward(const Vec2& position, const Vec2& goal, const Vec2& velocity) {
  const Vec2 to_goal = goal - position;
  const double d = to_goal.norm();
  if (d == 0.0) return 0.0;
  return to_goal.dot(velocity) / d;
}

double pct_speed(const EpisodeTrace& trace) {
  if (trace.steps.empty() || trace.agents.empty())
    throw std::invalid_argument("pct_speed: empty trace");
  double acc = 0.0;
  for (size_t i = 0; i < trace.agents.size(); ++i) {
    const auto& a = trace.agents[i];
    const int last = a.arrived ? a.arrival_step : trace.step_count();
    if (last <= 0) {
      // Arrived at spawn: the task cost nothing.
      acc += 1.0;
      continue;
    }
    double speed_sum = 0.0;
    for (int t = 1; t <= last; ++t) speed_sum += trace.steps[t].agents[i].v.norm();
    acc += speed_sum / last / a.v_max;
  }
  return acc / trace.agents.size();
}

double team_reward_offline(const EpisodeTrace& trace) {
  double ratio = 0.0;
  for (const auto& a : trace.agents) {
    if (!a.arrived || !std::isfinite(a.shortest)) continue;
    ratio += a.shortest / std::max(a.traveled, a.shortest);
  }
  return pct_speed(trace) + ratio / trace.agents.size();
}

double obstacle_reward(std::span<const double> agent_rewards, size_t j, double local_reward,
                       const RewardConfig& cfg) {
  double mean = 0.0;
  for (double r : agent_rewards) mean += r;
  if (!agent_rewards.empty()) mean /= (double)agent_rewards.size();
  return mean + cfg.beta_for(j) * local_reward;
}

double obstacle_local_reward(int overlap_count, double speed, const RewardConfig& cfg) {
  return cfg.collision_penalty * overlap_count - cfg.speed_penalty_weight * speed;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("discounted_return: gamma");
  double acc = 0.0;
  double w = 1.0;
  for (double r : rewards) {
    acc += w * r;
    w *= gamma;
  }
  return acc;
}

double spl(std::span<const SplTrial> trials) {
  if (trials.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& t : trials) {
    if (!(t.shortest > 0.0)) throw std::invalid_argument("spl: shortest must be > 0");
    if (t.traveled < 0.0) throw std::invalid_argument("spl: negative traveled length");
    if (t.success) acc += t.shortest / std::max(t.traveled, t.shortest);
  }
  return acc / trials.size();
}

double obstacle_travel(const EpisodeTrace& trace) {
  double acc = 0.0;
  for (size_t t = 1; t < trace.steps.size(); ++t) {
    const auto& prev = trace.steps[t - 1].obstacles;
    const auto& cur = trace.steps[t].obstacles;
    for (size_t j = 0; j < cur.size() && j < prev.size(); ++j)
      acc += (cur[j].p - prev[j].p).norm();
  }
  return acc;
}

double shortest_path_length(const EnvironmentLayout& layout, const Vec2& start, const Vec2& goal,
                            double radius, double resolution) {
  const PathQuery q = roadmap_shortest_path(layout, start, goal, radius, resolution);
  return q.reachable ? q.length : std::numeric_limits<double>::infinity();
}

Stat mean_std(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / values.size());
  return s;
}

}  // namespace envopt
