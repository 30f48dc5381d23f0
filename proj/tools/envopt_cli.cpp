// Command-line front end: completeness checks, training, evaluation, the
// heuristic baseline and plot emission.
#include <filesystem>
#include <iostream>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "envopt/completeness.hpp"
#include "envopt/experiment.hpp"
#include "envopt/json_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace envopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

ExperimentConfig load_config(const std::string& path, std::uint64_t* seed_override,
                             const std::string& out_override) {
  ExperimentConfig cfg =
      path.empty() ? ExperimentConfig{} : config_from_json(read_text_file(path));
  if (seed_override) cfg.seed = *seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  return cfg;
}

int cmd_check(const std::string& layout_path, int agents, double r_hat, double v_hat,
              double capacity, bool include_well_formed) {
  const EnvironmentLayout layout = layout_from_json(read_text_file(layout_path));
  layout.validate();
  const int n = agents >= 0 ? agents : (int)layout.starts.size();
  double r = r_hat;
  if (r <= 0.0) {
    r = 0.0;
    for (const auto& d : layout.starts) r = std::max(r, d.radius);
    if (r <= 0.0) r = 0.5;
  }
  std::cout << condition_report_to_json("offline", offline_condition(layout, n, r)) << "\n";
  std::cout << condition_report_to_json("online",
                                        online_capacity_condition(n, r, v_hat, capacity))
            << "\n";
  if (include_well_formed) {
    nlohmann::ordered_json j;
    j["check"] = "well_formed";
    j["satisfied"] = well_formed(layout, r);
    std::cout << j.dump() << "\n";
  }
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& trace_paths,
             const std::vector<std::string>& report_specs, const std::string& out_dir,
             double world_w, double world_h) {
  std::vector<EpisodeTrace> traces;
  for (const auto& p : trace_paths) traces.push_back(trace_from_jsonl(read_text_file(p)));
  std::vector<LabeledSweep> sweeps;
  const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  const std::regex re("report_m(\\d+)\\.json");
  for (size_t i = 0; i < report_specs.size(); ++i) {
    const auto eq = report_specs[i].find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--report expects LABEL=DIR");
    LabeledSweep s;
    s.label = report_specs[i].substr(0, eq);
    s.color = palette[i % palette.size()];
    const std::string dir = report_specs[i].substr(eq + 1);
    std::map<int, SweepPoint> points;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::smatch match;
      const std::string name = entry.path().filename().string();
      if (!std::regex_match(name, match, re)) continue;
      const auto j = nlohmann::ordered_json::parse(read_text_file(entry.path().string()));
      SweepPoint p;
      p.m = std::stoi(match[1]);
      auto stat = [&](const char* key) {
        return Stat{j.at(key).at("mean").get<double>(), j.at(key).at("std").get<double>()};
      };
      p.report.spl = stat("spl");
      p.report.pct_speed = stat("pct_speed");
      p.report.success_rate = stat("success_rate");
      p.report.obstacle_travel = stat("obstacle_travel");
      p.report.n_trials = j.at("n_trials");
      points[p.m] = std::move(p);
    }
    for (auto& [m, p] : points) s.sweeps.push_back(std::move(p));
    sweeps.push_back(std::move(s));
  }
  const RectBody bounds{{0.0, 0.0}, {world_w, world_h}};
  const auto files = render_plots(sweeps, traces, bounds, out_dir.empty() ? "." : out_dir);
  for (const auto& f : files) std::cout << f << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"environment optimization workbench for multi-agent navigation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint, layout_path, policy_source = "none";
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "experiment config JSON");
  auto* seed_opt = app.add_option("--seed", seed, "seed override");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--checkpoint", checkpoint, "policy checkpoint path");

  auto* check = app.add_subcommand("check", "evaluate completeness conditions for a layout");
  int check_agents = -1;
  double check_rhat = 0.0, check_vhat = 0.1, check_capacity = 0.5;
  bool check_wf = false;
  check->add_option("--layout", layout_path, "layout JSON file")->required();
  check->add_option("--agents", check_agents, "agent count n (default: |starts|)");
  check->add_option("--r-hat", check_rhat, "max agent radius (default: from layout)");
  check->add_option("--v-hat", check_vhat, "max agent speed");
  check->add_option("--capacity", check_capacity, "obstacle area change rate per step");
  check->add_flag("--well-formed", check_wf, "also decide well-formedness");

  auto* train_off = app.add_subcommand("train-offline", "train the CNN layout policy (PPO)");
  auto* train_on = app.add_subcommand("train-online", "train the GNN obstacle policy (PPO)");
  auto* eval = app.add_subcommand("eval", "run seeded evaluation trials");
  eval->add_option("--policy", policy_source, "none|heuristic|trained");
  auto* baseline = app.add_subcommand("baseline", "run the heuristic comparator");
  auto* plot = app.add_subcommand("plot", "render SVG plots from reports/traces");
  std::vector<std::string> plot_traces, plot_reports;
  double plot_w = 8.0, plot_h = 8.0;
  plot->add_option("--trace", plot_traces, "trace JSONL file (repeatable)");
  plot->add_option("--report", plot_reports, "LABEL=DIR with report_m*.json (repeatable)");
  plot->add_option("--world-width", plot_w, "workspace width for trajectory plots");
  plot->add_option("--world-height", plot_h, "workspace height for trajectory plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (check->parsed())
      return cmd_check(layout_path, check_agents, check_rhat, check_vhat, check_capacity,
                       check_wf);

    ExperimentConfig cfg;
    try {
      cfg = load_config(config_path, seed_opt->count() > 0 ? &seed : nullptr, out_dir);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    }

    if (train_off->parsed()) {
      const TrainResult r = train_offline(cfg);
      std::cout << "checkpoint: " << r.checkpoint_path << "\nlog: " << r.log_path
                << "\nupdates: " << r.updates << "\nenv_steps: " << r.env_steps << "\n";
      return kExitOk;
    }
    if (train_on->parsed()) {
      const TrainResult r = train_online(cfg);
      std::cout << "checkpoint: " << r.checkpoint_path << "\nlog: " << r.log_path
                << "\nupdates: " << r.updates << "\nenv_steps: " << r.env_steps << "\n";
      return kExitOk;
    }
    if (eval->parsed() || baseline->parsed()) {
      const PolicySource source =
          baseline->parsed() ? PolicySource::Heuristic : policy_source_from_string(policy_source);
      if (source == PolicySource::Trained && checkpoint.empty()) {
        std::cerr << "config error: --checkpoint required for --policy trained\n";
        return kExitConfig;
      }
      const TrialsResult r = run_trials(cfg, source, checkpoint, cfg.out_dir);
      for (const auto& p : r.sweeps)
        std::cout << "m=" << p.m << " spl=" << p.report.spl.mean
                  << " pct_speed=" << p.report.pct_speed.mean
                  << " success=" << p.report.success_rate.mean << "\n";
      return kExitOk;
    }
    if (plot->parsed())
      return cmd_plot(plot_traces, plot_reports, out_dir, plot_w, plot_h);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
