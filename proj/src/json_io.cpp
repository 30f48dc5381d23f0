#include "envopt/json_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace envopt {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vec_json(const Vec2& v) { return ordered_json::array({v.x, v.y}); }

Vec2 vec_from(const ordered_json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

std::string layout_to_json(const EnvironmentLayout& layout) {
  ordered_json j;
  j["bounds"] = ordered_json::array(
      {vec_json(layout.bounds.min_corner), vec_json(layout.bounds.max_corner)});
  auto disks = [](const std::vector<DiskBody>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& d : v) arr.push_back({d.center.x, d.center.y, d.radius});
    return arr;
  };
  j["starts"] = disks(layout.starts);
  j["goals"] = disks(layout.goals);
  ordered_json obs = ordered_json::array();
  for (const auto& r : layout.obstacles)
    obs.push_back({r.min_corner.x, r.min_corner.y, r.max_corner.x, r.max_corner.y});
  j["obstacles"] = obs;
  return j.dump();
}

EnvironmentLayout layout_from_json(const std::string& text) {
  const auto j = ordered_json::parse(text);
  EnvironmentLayout layout;
  layout.bounds = {vec_from(j.at("bounds").at(0)), vec_from(j.at("bounds").at(1))};
  for (const auto& d : j.at("starts"))
    layout.starts.push_back({{d.at(0).get<double>(), d.at(1).get<double>()}, d.at(2).get<double>()});
  for (const auto& d : j.at("goals"))
    layout.goals.push_back({{d.at(0).get<double>(), d.at(1).get<double>()}, d.at(2).get<double>()});
  for (const auto& r : j.at("obstacles"))
    layout.obstacles.push_back({{r.at(0).get<double>(), r.at(1).get<double>()},
                                {r.at(2).get<double>(), r.at(3).get<double>()}});
  return layout;
}

std::string grid_to_json(const GridWorld& world) {
  ordered_json j;
  j["width"] = world.width;
  j["height"] = world.height;
  auto cells = [](const std::vector<GridCell>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : v) arr.push_back({c.col, c.row});
    return arr;
  };
  j["obstacles"] = cells(world.obstacles);
  j["agents"] = cells(world.agents);
  j["goals"] = cells(world.goals);
  return j.dump();
}

GridWorld grid_from_json(const std::string& text) {
  const auto j = ordered_json::parse(text);
  GridWorld world;
  world.width = j.at("width");
  world.height = j.at("height");
  auto cells = [](const ordered_json& arr) {
    std::vector<GridCell> v;
    for (const auto& c : arr) v.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    return v;
  };
  world.obstacles = cells(j.at("obstacles"));
  world.agents = cells(j.at("agents"));
  world.goals = cells(j.at("goals"));
  return world;
}

std::string trace_to_jsonl(const EpisodeTrace& trace) {
  std::ostringstream out;
  for (const auto& step : trace.steps) {
    ordered_json j;
    j["t"] = step.t;
    ordered_json agents = ordered_json::array();
    for (const auto& a : step.agents)
      agents.push_back({{"id", a.id}, {"p", vec_json(a.p)}, {"v", vec_json(a.v)}});
    j["agents"] = agents;
    ordered_json obstacles = ordered_json::array();
    for (const auto& o : step.obstacles) {
      ordered_json oj = {{"id", o.id}, {"p", vec_json(o.p)}, {"v", vec_json(o.v)},
                         {"ext", vec_json(o.ext)}};
      if (o.has_cmd) oj["cmd"] = vec_json(o.cmd);
      obstacles.push_back(oj);
    }
    j["obstacles"] = obstacles;
    ordered_json events = ordered_json::array();
    for (const auto& e : step.events)
      events.push_back({{"kind", e.kind}, {"a", e.a}, {"b", e.b}});
    j["events"] = events;
    out << j.dump() << "\n";
  }
  return out.str();
}

EpisodeTrace trace_from_jsonl(const std::string& text) {
  EpisodeTrace trace;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = ordered_json::parse(line);
    TraceStep step;
    step.t = j.at("t");
    for (const auto& a : j.at("agents"))
      step.agents.push_back({a.at("id").get<int>(), vec_from(a.at("p")), vec_from(a.at("v"))});
    for (const auto& o : j.at("obstacles")) {
      ObstacleSnap s;
      s.id = o.at("id");
      s.p = vec_from(o.at("p"));
      s.v = vec_from(o.at("v"));
      s.ext = vec_from(o.at("ext"));
      if (o.contains("cmd")) {
        s.cmd = vec_from(o.at("cmd"));
        s.has_cmd = true;
      }
      step.obstacles.push_back(s);
    }
    for (const auto& e : j.at("events"))
      step.events.push_back({e.at("kind").get<std::string>(), e.at("a").get<int>(),
                             e.at("b").get<int>()});
    trace.steps.push_back(std::move(step));
  }
  // Summary fields (outcomes, extents) are not part of the line schema; the
  // parsed trace carries the per-step record only.
  if (!trace.steps.empty()) {
    for (const auto& o : trace.steps.front().obstacles)
      trace.obstacle_extents.push_back(
          {{o.p.x - o.ext.x / 2, o.p.y - o.ext.y / 2}, {o.p.x + o.ext.x / 2, o.p.y + o.ext.y / 2}});
  }
  return trace;
}

std::string condition_report_to_json(const std::string& name, const ConditionReport& report) {
  ordered_json j;
  j["check"] = name;
  j["satisfied"] = report.satisfied;
  j["lhs"] = report.lhs;
  j["rhs"] = report.rhs;
  j["margin"] = report.margin;
  return j.dump();
}

std::string metrics_report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "metric,mean,std,n_trials\n";
  char buf[160];
  auto row = [&](const char* name, const Stat& s) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d\n", name, s.mean, s.stddev,
                  report.n_trials);
    out << buf;
  };
  row("spl", report.spl);
  row("pct_speed", report.pct_speed);
  row("success_rate", report.success_rate);
  row("obstacle_travel", report.obstacle_travel);
  return out.str();
}

std::string metrics_report_to_json(const MetricsReport& report) {
  ordered_json j;
  auto stat = [](const Stat& s) {
    return ordered_json{{"mean", s.mean}, {"std", s.stddev}};
  };
  j["spl"] = stat(report.spl);
  j["pct_speed"] = stat(report.pct_speed);
  j["success_rate"] = stat(report.success_rate);
  j["obstacle_travel"] = stat(report.obstacle_travel);
  j["n_trials"] = report.n_trials;
  return j.dump();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace envopt
