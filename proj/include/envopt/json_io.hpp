// JSON serialization for layouts, grid worlds, traces, condition reports and
// metric reports. Field order is fixed by construction (ordered documents).
#pragma once

#include <string>
#include <vector>

#include "envopt/completeness.hpp"
#include "envopt/geometry.hpp"
#include "envopt/grid_env.hpp"
#include "envopt/metrics.hpp"
#include "envopt/trace.hpp"

namespace envopt {

// {bounds:[[minx,miny],[maxx,maxy]], starts:[[cx,cy,r]..], goals:[..],
//  obstacles:[[minx,miny,maxx,maxy]..]}
std::string layout_to_json(const EnvironmentLayout& layout);
EnvironmentLayout layout_from_json(const std::string& text);

// {width, height, obstacles:[[c,r]..], agents:[[c,r]..], goals:[[c,r]..]}
std::string grid_to_json(const GridWorld& world);
GridWorld grid_from_json(const std::string& text);

// One step per line:
// {"t":..,"agents":[{"id":..,"p":[x,y],"v":[x,y]}],"obstacles":[..],"events":[..]}
std::string trace_to_jsonl(const EpisodeTrace& trace);
EpisodeTrace trace_from_jsonl(const std::string& text);

std::string condition_report_to_json(const std::string& name, const ConditionReport& report);

// CSV columns: metric, mean, std, n_trials.
std::string metrics_report_to_csv(const MetricsReport& report);
std::string metrics_report_to_json(const MetricsReport& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace envopt
