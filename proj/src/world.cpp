#include "envopt/world.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace envopt {

std::pair<std::vector<ObstacleState>, std::vector<AgentState>> neighbors(
    const WorldState& world, int obstacle, double radius) {
  if (obstacle < 0 || obstacle >= (int)world.obstacles.size())
    throw std::out_of_range("neighbors: obstacle index");
  const Vec2 c = world.obstacles[obstacle].body.center();
  std::pair<std::vector<ObstacleState>, std::vector<AgentState>> out;
  for (const auto& o : world.obstacles) {
    if (o.id == world.obstacles[obstacle].id) continue;
    if ((o.body.center() - c).norm() <= radius) out.first.push_back(o);
  }
  for (const auto& a : world.agents) {
    if ((a.position - c).norm() <= radius) out.second.push_back(a);
  }
  return out;
}

ObstacleState apply_command(const ObstacleState& obstacle, const ObstacleCommand& cmd,
                            double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("apply_command: dt <= 0");
  if (!cmd.desired_velocity.finite())
    throw std::invalid_argument("apply_command: non-finite command");
  ObstacleState next = obstacle;
  Vec2 dv = cmd.desired_velocity - obstacle.velocity;
  const double dv_norm = dv.norm();
  const double dv_cap = obstacle.a_max * dt;
  if (dv_norm > dv_cap) dv = dv * (dv_cap / dv_norm);
  Vec2 v = obstacle.velocity + dv;
  const double speed = v.norm();
  if (speed > obstacle.v_max) v = v * (obstacle.v_max / speed);
  next.velocity = v;
  next.body = obstacle.body.translated(v * dt);
  return next;
}

WorldStepResult step_world(const WorldState& world, const std::vector<ObstacleCommand>& commands,
                           const PlannerConfig& planner_cfg, double dt) {
  if (commands.size() != world.obstacles.size())
    throw std::invalid_argument("step_world: |commands| != |obstacles|");

  WorldStepResult res;
  res.world = world;

  // Agents plan against the pre-step snapshot.
  std::vector<RectBody> rects;
  rects.reserve(world.obstacles.size() + 4);
  for (const auto& o : world.obstacles) rects.push_back(o.body);
  const RectBody& b = world.bounds;
  const double wall = 1.0;
  rects.push_back({{b.min_corner.x - wall, b.min_corner.y - wall},
                   {b.max_corner.x + wall, b.min_corner.y}});
  rects.push_back({{b.min_corner.x - wall, b.max_corner.y},
                   {b.max_corner.x + wall, b.max_corner.y + wall}});
  rects.push_back({{b.min_corner.x - wall, b.min_corner.y}, {b.min_corner.x, b.max_corner.y}});
  rects.push_back({{b.max_corner.x, b.min_corner.y}, {b.max_corner.x + wall, b.max_corner.y}});

  AgentsStep agents_next = step_agents(world.agents, rects, dt, planner_cfg);
  std::vector<ObstacleState> obstacles_next;
  obstacles_next.reserve(world.obstacles.size());
  for (size_t j = 0; j < world.obstacles.size(); ++j)
    obstacles_next.push_back(apply_command(world.obstacles[j], commands[j], dt));

  res.world.agents = std::move(agents_next.agents);
  res.world.obstacles = std::move(obstacles_next);
  res.world.time_step = world.time_step + 1;
  res.agent_stopped = std::move(agents_next.stopped);

  for (size_t i = 0; i < res.agent_stopped.size(); ++i)
    if (res.agent_stopped[i]) res.events.push_back({"planner_stop", (int)i, -1});
  const auto& ag = res.world.agents;
  const auto& ob = res.world.obstacles;
  for (size_t i = 0; i < ag.size(); ++i) {
    for (size_t j = i + 1; j < ag.size(); ++j) {
      const double gap = (ag[i].position - ag[j].position).norm() - ag[i].radius - ag[j].radius;
      if (gap < -1e-12) res.events.push_back({"agent_agent", (int)i, (int)j});
    }
    for (size_t k = 0; k < ob.size(); ++k) {
      if (point_rect_dist(ag[i].position, ob[k].body) < ag[i].radius - 1e-12)
        res.events.push_back({"agent_obstacle", (int)i, (int)k});
    }
  }
  auto interiors_overlap = [](const RectBody& a, const RectBody& b) {
    return a.min_corner.x < b.max_corner.x && b.min_corner.x < a.max_corner.x &&
           a.min_corner.y < b.max_corner.y && b.min_corner.y < a.max_corner.y;
  };
  for (size_t j = 0; j < ob.size(); ++j)
    for (size_t k = j + 1; k < ob.size(); ++k)
      if (interiors_overlap(ob[j].body, ob[k].body))
        res.events.push_back({"obstacle_obstacle", (int)j, (int)k});
  return res;
}

LocalObservation local_observation(const WorldState& world, int obstacle, double comm_radius) {
  LocalObservation obs;
  obs.self = world.obstacles[obstacle];
  auto [os, as] = neighbors(world, obstacle, comm_radius);
  obs.obstacle_neighbors = std::move(os);
  obs.agent_neighbors = std::move(as);
  return obs;
}

EpisodeTrace run_world_episode(const WorldState& init, WorldCommandSource& source,
                               int max_steps, std::uint64_t rng_seed,
                               const PlannerConfig& planner_cfg) {
  if (max_steps < 1) throw std::invalid_argument("run_world_episode: max_steps < 1");

  EpisodeTrace trace;
  trace.dt = 1.0;
  for (const auto& o : init.obstacles) trace.obstacle_extents.push_back(o.body);
  for (const auto& a : init.agents) {
    AgentOutcome out;
    out.id = a.id;
    out.start = a.position;
    out.goal = a.goal;
    out.radius = a.radius;
    out.v_max = a.v_max;
    // Obstacles move, so the static roadmap is not meaningful; the straight
    // line is the reference shortest path in the online setting.
    out.shortest = (a.goal - a.position).norm();
    trace.agents.push_back(out);
  }

  auto snapshot = [](int t, const WorldState& w, const std::vector<ObstacleCommand>* cmds,
                     std::vector<TraceEvent> events) {
    TraceStep step;
    step.t = t;
    step.events = std::move(events);
    for (const auto& a : w.agents) step.agents.push_back({a.id, a.position, a.velocity});
    for (size_t j = 0; j < w.obstacles.size(); ++j) {
      ObstacleSnap s{(int)j,
                     w.obstacles[j].body.center(),
                     w.obstacles[j].velocity,
                     {w.obstacles[j].body.width(), w.obstacles[j].body.height()},
                     {},
                     false};
      if (cmds) {
        s.cmd = (*cmds)[j].desired_velocity;
        s.has_cmd = true;
      }
      step.obstacles.push_back(s);
    }
    return step;
  };

  auto update_arrivals = [&trace](int t, const WorldState& w) {
    bool all = true;
    for (size_t i = 0; i < w.agents.size(); ++i) {
      auto& o = trace.agents[i];
      if (!o.arrived && (w.agents[i].position - w.agents[i].goal).norm() <= 0.1) {
        o.arrived = true;
        o.arrival_step = t;
      }
      all = all && o.arrived;
    }
    return all;
  };

  std::mt19937_64 rng(rng_seed);
  WorldState world = init;
  trace.steps.push_back(snapshot(0, world, nullptr, {}));
  bool done = update_arrivals(0, world);
  for (int t = 1; t <= max_steps && !done; ++t) {
    std::vector<ObstacleCommand> commands = source.commands(world, rng);
    if (commands.size() != world.obstacles.size())
      throw std::invalid_argument("run_world_episode: command count");
    WorldStepResult stepped = step_world(world, commands, planner_cfg, trace.dt);
    for (size_t i = 0; i < world.agents.size(); ++i) {
      if (!trace.agents[i].arrived)
        trace.agents[i].traveled +=
            (stepped.world.agents[i].position - world.agents[i].position).norm();
    }
    world = std::move(stepped.world);
    trace.steps.push_back(snapshot(t, world, &commands, std::move(stepped.events)));
    done = update_arrivals(t, world);
  }
  trace.all_arrived = done;
  return trace;
}

namespace {

// Decentralized adapter: each obstacle acts on its local observation only.
class LocalPolicySource : public WorldCommandSource {
 public:
  LocalPolicySource(ObstacleCommandPolicy& policy, double comm_radius)
      : policy_(policy), comm_radius_(comm_radius) {}

  std::vector<ObstacleCommand> commands(const WorldState& world, std::mt19937_64& rng) override {
    std::vector<ObstacleCommand> out;
    out.reserve(world.obstacles.size());
    for (int j = 0; j < (int)world.obstacles.size(); ++j)
      out.push_back(policy_.command(local_observation(world, j, comm_radius_), rng));
    return out;
  }

 private:
  ObstacleCommandPolicy& policy_;
  double comm_radius_;
};

}  // namespace

EpisodeTrace run_online_episode(const WorldState& init, ObstacleCommandPolicy& policy,
                                int max_steps, double comm_radius, std::uint64_t rng_seed,
                                const PlannerConfig& planner_cfg) {
  LocalPolicySource source(policy, comm_radius);
  return run_world_episode(init, source, max_steps, rng_seed, planner_cfg);
}

}  // namespace envopt
