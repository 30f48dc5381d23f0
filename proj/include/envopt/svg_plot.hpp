// Dependency-free static SVG rendering: metric curves with std bands and
// trajectory plots with time-colored polylines.
#pragma once

#include <string>
#include <vector>

#include "envopt/geometry.hpp"
#include "envopt/trace.hpp"

namespace envopt {

struct MetricCurve {
  std::string label;
  std::string color;           // e.g. "#1f77b4"
  std::vector<double> x;       // sweep points (obstacle counts)
  std::vector<double> mean;
  std::vector<double> stddev;  // shaded band half-width
};

std::string render_metric_curves_svg(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<MetricCurve>& curves);

// Workspace view: obstacle outlines at t=0 (grey) and final step (brown),
// start circles, goal squares, agent polylines colored red (start) to
// yellow (end).
std::string render_trajectories_svg(const RectBody& bounds, const EpisodeTrace& trace,
                                    const std::string& title = "");

// Two-panel figure from a pair of traces (e.g. before/after optimization).
std::string render_before_after_svg(const RectBody& bounds, const EpisodeTrace& before,
                                    const EpisodeTrace& after);

}  // namespace envopt
