// Experiment protocol: configuration, seeded scenario generation, PPO task
// adapters for both settings, training loops, trial aggregation and plots.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "envopt/grid_env.hpp"
#include "envopt/heuristic.hpp"
#include "envopt/metrics.hpp"
#include "envopt/policy.hpp"
#include "envopt/ppo.hpp"
#include "envopt/svg_plot.hpp"
#include "envopt/world.hpp"

namespace envopt {

struct ExperimentConfig {
  std::string setting = "offline";  // offline | online
  int grid_width = 8;
  int grid_height = 8;
  double world_width = 8.0;
  double world_height = 8.0;
  int n_agents = 4;
  int m_obstacles_train = 10;
  std::vector<int> m_obstacles_test = {10, 12, 14, 16, 18};
  double agent_radius = 0.3;
  double v_max = 0.1;
  double a_max = 0.1;
  double comm_radius = 2.0;
  int max_steps = 500;
  int max_rounds = 10;        // obstacle-move rounds (offline policy and heuristic)
  int train_rounds = 3;       // rounds per training episode (offline)
  int n_trials = 20;
  std::uint64_t seed = 7;
  bool require_blocked = false;  // reject scenarios until an agent is blocked
  double blocked_detour_ratio = 1.25;
  double beta = 0.5;
  RewardConfig reward;
  PlannerConfig planner;
  PpoConfig ppo;
  std::string out_dir = "out";

  RewardConfig reward_for(int m) const {
    RewardConfig r = reward;
    r.beta.assign(m, beta);
    return r;
  }
};

// Overlays a JSON document (possibly partial) onto the built-in defaults.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// --- seeded scenario generation ---

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

GridWorld random_grid_world(int width, int height, int m, int n, std::mt19937_64& rng);

// True when some obstacle blocks some agent and at least one agent detours
// by more than the configured ratio (or is disconnected).
bool grid_world_blocked(const GridWorld& world, double radius, double detour_ratio);

GridWorld random_scenario(const ExperimentConfig& cfg, int m, std::uint64_t seed);

WorldState random_world_state(const ExperimentConfig& cfg, int m, std::uint64_t seed);

// --- policy adapters ---

class CnnMovePolicy : public ObstacleMovePolicy {
 public:
  CnnMovePolicy(const CnnPolicy& policy, bool greedy) : policy_(policy), greedy_(greedy) {}
  GridAction act(const Observation& obs, std::mt19937_64& rng) override;

 private:
  const CnnPolicy& policy_;
  bool greedy_;
};

class StayPolicy : public ObstacleMovePolicy {
 public:
  GridAction act(const Observation&, std::mt19937_64&) override { return GridAction::Stay; }
};

class GnnCommandPolicy : public ObstacleCommandPolicy {
 public:
  GnnCommandPolicy(const GnnPolicy& policy, bool deterministic)
      : policy_(policy), deterministic_(deterministic) {}
  ObstacleCommand command(const LocalObservation& obs, std::mt19937_64& rng) override;

 private:
  const GnnPolicy& policy_;
  bool deterministic_;
};

class ZeroCommandPolicy : public ObstacleCommandPolicy {
 public:
  ObstacleCommand command(const LocalObservation&, std::mt19937_64&) override { return {}; }
};

// --- PPO task adapters ---

class OfflineCnnTask : public PpoTask {
 public:
  OfflineCnnTask(const ExperimentConfig& cfg, CnnPolicy& policy);
  RolloutBatch collect(int episodes, std::mt19937_64& rng) override;
  Eval eval_sample(size_t index, ad::Tape& tape, std::span<const ad::Var> pv) override;
  std::vector<ad::Var> register_params(ad::Tape& tape) const override;
  std::vector<Tensor*> parameters() override;

 private:
  const ExperimentConfig& cfg_;
  CnnPolicy& policy_;
  std::vector<Observation> obs_;
  std::vector<int> actions_;
};

class OnlineGnnTask : public PpoTask {
 public:
  OnlineGnnTask(const ExperimentConfig& cfg, GnnPolicy& policy);
  RolloutBatch collect(int episodes, std::mt19937_64& rng) override;
  Eval eval_sample(size_t index, ad::Tape& tape, std::span<const ad::Var> pv) override;
  std::vector<ad::Var> register_params(ad::Tape& tape) const override;
  std::vector<Tensor*> parameters() override;

  // Collection with externally supplied commands (diagnostics/tests): returns
  // the per-step obstacle rewards the trainer would see for a zero policy.
  std::vector<std::vector<double>> zero_policy_rewards(std::uint64_t scenario_seed, int m,
                                                       int max_steps) const;

 private:
  const ExperimentConfig& cfg_;
  GnnPolicy& policy_;
  std::vector<GnnNodeInput> obs_;
  std::vector<Vec2> actions_;  // raw gaussian samples (normalized units)
};

// --- training loops ---

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  int updates = 0;
  long long env_steps = 0;
};

TrainResult train_offline(const ExperimentConfig& cfg);
TrainResult train_online(const ExperimentConfig& cfg);

// --- evaluation protocol ---

enum class PolicySource { None, Heuristic, Trained };

PolicySource policy_source_from_string(const std::string& s);

struct TrialRecord {
  int m = 0;
  int trial = 0;
  double spl = 0.0;
  double pct_speed = 0.0;
  double success_rate = 0.0;
  double obstacle_travel = 0.0;
  double wall_clock_sec = 0.0;
};

struct SweepPoint {
  int m = 0;
  MetricsReport report;
  std::vector<TrialRecord> trials;
};

struct TrialsResult {
  std::vector<SweepPoint> sweeps;
  std::vector<std::string> trace_paths;
};

// Runs n_trials seeded episodes per obstacle count; writes CSV + JSON + traces
// under out_dir (unless it is empty).
TrialsResult run_trials(const ExperimentConfig& cfg, PolicySource source,
                        const std::string& checkpoint_path, const std::string& out_dir);

// Metric curves + trajectory SVGs from finished sweeps/traces.
struct LabeledSweep {
  std::string label;
  std::string color;
  std::vector<SweepPoint> sweeps;
};

std::vector<std::string> render_plots(const std::vector<LabeledSweep>& sweeps,
                                      const std::vector<EpisodeTrace>& traces,
                                      const RectBody& bounds, const std::string& out_dir);

// --- trend analysis ---

double spearman_rho(std::span<const double> x, std::span<const double> y);
// One-sided p-value for positive association (t approximation).
double spearman_p_positive(double rho, int n);

}  // namespace envopt
