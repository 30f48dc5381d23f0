// Time-indexed record of a navigation episode: states, commands, collision
// events and per-agent outcomes. The unit of metric computation and export.
#pragma once

#include <string>
#include <vector>

#include "envopt/geometry.hpp"

namespace envopt {

struct TraceEvent {
  std::string kind;  // agent_agent | agent_obstacle | obstacle_obstacle | planner_stop
  int a = -1;
  int b = -1;
};

struct AgentSnap {
  int id = 0;
  Vec2 p;
  Vec2 v;
};

struct ObstacleSnap {
  int id = 0;
  Vec2 p;    // rectangle center
  Vec2 v;
  Vec2 ext;  // rectangle width/height
  Vec2 cmd;
  bool has_cmd = false;
};

struct TraceStep {
  int t = 0;
  std::vector<AgentSnap> agents;
  std::vector<ObstacleSnap> obstacles;
  std::vector<TraceEvent> events;
};

struct AgentOutcome {
  int id = 0;
  Vec2 start;
  Vec2 goal;
  double radius = 0.3;
  double v_max = 0.1;
  bool arrived = false;
  int arrival_step = -1;
  double traveled = 0.0;   // path length until arrival (or episode end)
  double shortest = 0.0;   // reference shortest-path length for SPL; +inf if blocked
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;       // steps[0] is the initial state
  std::vector<AgentOutcome> agents;
  std::vector<RectBody> obstacle_extents;  // extents at episode start
  double dt = 1.0;
  bool all_arrived = false;

  int step_count() const { return steps.empty() ? 0 : (int)steps.size() - 1; }
};

}  // namespace envopt
