#include "envopt/grid_env.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "envopt/metrics.hpp"

namespace envopt {

bool GridWorld::occupied(const GridCell& c) const {
  auto has = [&c](const std::vector<GridCell>& v) {
    return std::find(v.begin(), v.end(), c) != v.end();
  };
  return has(obstacles) || has(agents) || has(goals);
}

void GridWorld::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("grid: non-positive dims");
  if (agents.size() != goals.size())
    throw std::invalid_argument("grid: |agents| != |goals|");
  std::vector<GridCell> all;
  all.reserve(obstacles.size() + agents.size() + goals.size());
  for (const auto* group : {&obstacles, &agents, &goals}) {
    for (const auto& c : *group) {
      if (!in_bounds(c)) throw std::invalid_argument("grid: cell out of bounds");
      if (std::find(all.begin(), all.end(), c) != all.end())
        throw std::invalid_argument("grid: overlapping cells");
      all.push_back(c);
    }
  }
}

Observation encode_observation(const GridWorld& world, int active_obstacle) {
  if (active_obstacle < 0 || active_obstacle >= (int)world.obstacles.size())
    throw std::out_of_range("encode_observation: active obstacle index");
  Observation obs;
  obs.channels = 4;
  obs.height = world.height;
  obs.width = world.width;
  obs.data.assign((size_t)4 * world.height * world.width, 0.0);
  for (const auto& c : world.obstacles) obs.at(0, c.row, c.col) = 1.0;
  for (const auto& c : world.agents) obs.at(1, c.row, c.col) = 1.0;
  for (const auto& c : world.goals) obs.at(2, c.row, c.col) = 1.0;
  const auto& active = world.obstacles[active_obstacle];
  obs.at(3, active.row, active.col) = 1.0;
  return obs;
}

MoveResult apply_move(const GridWorld& world, int obstacle, GridAction action) {
  if (obstacle < 0 || obstacle >= (int)world.obstacles.size())
    throw std::out_of_range("apply_move: obstacle index");
  MoveResult res{world, false};
  if (action == GridAction::Stay) return res;
  GridCell target = world.obstacles[obstacle];
  switch (action) {
    case GridAction::Up: target.row += 1; break;
    case GridAction::Down: target.row -= 1; break;
    case GridAction::Left: target.col -= 1; break;
    case GridAction::Right: target.col += 1; break;
    default: break;
  }
  if (!world.in_bounds(target) || world.occupied(target)) return res;
  res.world.obstacles[obstacle] = target;
  res.moved = true;
  return res;
}

Vec2 cell_center(const GridCell& c) { return {c.col + 0.5, c.row + 0.5}; }

EnvironmentLayout lift_to_layout(const GridWorld& world, double agent_radius) {
  EnvironmentLayout layout;
  layout.bounds = {{0.0, 0.0}, {(double)world.width, (double)world.height}};
  for (const auto& c : world.obstacles)
    layout.obstacles.push_back({{(double)c.col, (double)c.row},
                                {(double)c.col + 1.0, (double)c.row + 1.0}});
  for (const auto& c : world.agents) layout.starts.push_back({cell_center(c), agent_radius});
  for (const auto& c : world.goals) layout.goals.push_back({cell_center(c), agent_radius});
  return layout;
}

OptimizationEpisode run_optimization_episode(const GridWorld& world, ObstacleMovePolicy& policy,
                                             int max_rounds, std::uint64_t rng_seed) {
  if (max_rounds < 1) throw std::invalid_argument("run_optimization_episode: max_rounds < 1");
  OptimizationEpisode ep{world, {}};
  std::mt19937_64 rng(rng_seed);
  for (int round = 0; round < max_rounds; ++round) {
    for (int j = 0; j < (int)ep.world.obstacles.size(); ++j) {
      const Observation obs = encode_observation(ep.world, j);
      const GridAction action = policy.act(obs, rng);
      MoveResult res = apply_move(ep.world, j, action);
      ep.moves.push_back({round, j, action, res.moved});
      ep.world = std::move(res.world);
    }
  }
  return ep;
}

namespace {

void record_collision_events(TraceStep& step, const std::vector<AgentState>& agents,
                             const std::vector<RectBody>& obstacles) {
  for (size_t i = 0; i < agents.size(); ++i) {
    for (size_t j = i + 1; j < agents.size(); ++j) {
      const double gap =
          (agents[i].position - agents[j].position).norm() - agents[i].radius - agents[j].radius;
      if (gap < -1e-12) step.events.push_back({"agent_agent", (int)i, (int)j});
    }
    for (size_t k = 0; k < obstacles.size(); ++k) {
      if (point_rect_dist(agents[i].position, obstacles[k]) < agents[i].radius - 1e-12)
        step.events.push_back({"agent_obstacle", (int)i, (int)k});
    }
  }
}

}  // namespace

EpisodeTrace navigate(const GridWorld& world, const PlannerConfig& planner_cfg, int max_steps) {
  world.validate();
  const EnvironmentLayout layout = lift_to_layout(world);

  std::vector<AgentState> agents;
  for (size_t i = 0; i < world.agents.size(); ++i) {
    AgentState a;
    a.id = (int)i;
    a.position = cell_center(world.agents[i]);
    a.goal = cell_center(world.goals[i]);
    a.radius = kGridAgentRadius;
    a.v_max = 0.1;
    agents.push_back(a);
  }
  // Walls just outside the workspace keep the planner inside the bounds.
  std::vector<RectBody> obstacles = layout.obstacles;
  const double w = world.width, h = world.height, wall = 1.0;
  obstacles.push_back({{-wall, -wall}, {w + wall, 0.0}});
  obstacles.push_back({{-wall, h}, {w + wall, h + wall}});
  obstacles.push_back({{-wall, 0.0}, {0.0, h}});
  obstacles.push_back({{w, 0.0}, {w + wall, h}});

  EpisodeTrace trace;
  trace.dt = 1.0;
  trace.obstacle_extents = layout.obstacles;
  for (const auto& a : agents) {
    AgentOutcome o;
    o.id = a.id;
    o.start = a.position;
    o.goal = a.goal;
    o.radius = a.radius;
    o.v_max = a.v_max;
    o.shortest = shortest_path_length(layout, a.position, a.goal, a.radius);
    trace.agents.push_back(o);
  }

  auto snapshot = [&](int t, const std::vector<AgentState>& st) {
    TraceStep step;
    step.t = t;
    for (const auto& a : st) step.agents.push_back({a.id, a.position, a.velocity});
    for (size_t j = 0; j < layout.obstacles.size(); ++j)
      step.obstacles.push_back({(int)j,
                                layout.obstacles[j].center(),
                                {0.0, 0.0},
                                {layout.obstacles[j].width(), layout.obstacles[j].height()},
                                {},
                                false});
    return step;
  };

  auto update_arrivals = [&](int t, const std::vector<AgentState>& st) {
    bool all = true;
    for (size_t i = 0; i < st.size(); ++i) {
      auto& o = trace.agents[i];
      if (!o.arrived && (st[i].position - st[i].goal).norm() <= kArrivalTolerance) {
        o.arrived = true;
        o.arrival_step = t;
      }
      all = all && o.arrived;
    }
    return all;
  };

  std::vector<AgentState> state = agents;
  for (auto& a : state) a.velocity = {0.0, 0.0};
  trace.steps.push_back(snapshot(0, state));
  bool done = update_arrivals(0, state);
  for (int t = 1; t <= max_steps && !done; ++t) {
    AgentsStep stepped = step_agents(state, obstacles, trace.dt, planner_cfg);
    for (size_t i = 0; i < state.size(); ++i) {
      if (!trace.agents[i].arrived)
        trace.agents[i].traveled += (stepped.agents[i].position - state[i].position).norm();
    }
    state = std::move(stepped.agents);
    TraceStep step = snapshot(t, state);
    for (size_t i = 0; i < stepped.stopped.size(); ++i)
      if (stepped.stopped[i]) step.events.push_back({"planner_stop", (int)i, -1});
    record_collision_events(step, state, obstacles);
    trace.steps.push_back(std::move(step));
    done = update_arrivals(t, state);
  }
  trace.all_arrived = done;
  return trace;
}

}  // namespace envopt
