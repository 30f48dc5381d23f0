// 8-connected lattice roadmap over a layout, with exact segment clearance
// validation. Backs the well-formedness decision and shortest-path metric.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "envopt/geometry.hpp"

namespace envopt {

struct PathQuery {
  bool reachable = false;
  double length = 0.0;          // octile length, +inf when disconnected
  std::vector<Vec2> polyline;   // node positions start..goal (when requested)
};

// Shortest clearance-respecting path between two points on an 8-connected
// lattice at the given resolution (node spacing), octile edge costs.
// `extra_disks` act as additional static obstacles (e.g. other agents'
// start/goal disks). Edges are validated with exact segment clearance.
PathQuery roadmap_shortest_path(const EnvironmentLayout& layout, const Vec2& start,
                                const Vec2& goal, double clearance, double resolution,
                                std::span<const DiskBody> extra_disks = {},
                                bool need_polyline = false);

}  // namespace envopt
