#include "envopt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "envopt/json_io.hpp"
#include "json.hpp"

namespace envopt {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093453;

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ull) ^ (b * 0xd1b54a32d192ed03ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// --- config ---

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["setting"] = c.setting;
  j["grid"] = {{"width", c.grid_width}, {"height", c.grid_height}};
  j["world"] = {{"width", c.world_width}, {"height", c.world_height}};
  j["n_agents"] = c.n_agents;
  j["m_obstacles_train"] = c.m_obstacles_train;
  j["m_obstacles_test"] = c.m_obstacles_test;
  j["agent_radius"] = c.agent_radius;
  j["v_max"] = c.v_max;
  j["a_max"] = c.a_max;
  j["comm_radius"] = c.comm_radius;
  j["max_steps"] = c.max_steps;
  j["max_rounds"] = c.max_rounds;
  j["train_rounds"] = c.train_rounds;
  j["n_trials"] = c.n_trials;
  j["seed"] = c.seed;
  j["require_blocked"] = c.require_blocked;
  j["blocked_detour_ratio"] = c.blocked_detour_ratio;
  j["reward"] = {{"beta", c.beta},
                 {"gamma", c.reward.gamma},
                 {"collision_penalty", c.reward.collision_penalty},
                 {"speed_penalty_weight", c.reward.speed_penalty_weight}};
  j["planner"] = {{"time_horizon", c.planner.time_horizon},
                  {"sample_count", c.planner.sample_count},
                  {"neighbor_radius", c.planner.neighbor_radius},
                  {"rng_seed", c.planner.rng_seed}};
  j["ppo"] = {{"clip_ratio", c.ppo.clip_ratio},
              {"gae_lambda", c.ppo.gae_lambda},
              {"epochs_per_batch", c.ppo.epochs_per_batch},
              {"minibatch_size", c.ppo.minibatch_size},
              {"learning_rate", c.ppo.learning_rate},
              {"entropy_coeff", c.ppo.entropy_coeff},
              {"value_coeff", c.ppo.value_coeff},
              {"batch_episodes", c.ppo.batch_episodes},
              {"seed", c.ppo.seed},
              {"total_env_steps", c.ppo.total_env_steps},
              {"checkpoint_every", c.ppo.checkpoint_every},
              {"eval_every", c.ppo.eval_every},
              {"eval_trials", c.ppo.eval_trials}};
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;  // built-in defaults; config/defaults.json mirrors them
  const auto j = ordered_json::parse(text);
  auto get = [](const ordered_json& obj, const char* key, auto& into) {
    if (obj.contains(key)) into = obj.at(key).get<std::decay_t<decltype(into)>>();
  };
  get(j, "setting", c.setting);
  if (c.setting != "offline" && c.setting != "online")
    throw std::invalid_argument("config: setting must be offline|online");
  if (j.contains("grid")) {
    get(j.at("grid"), "width", c.grid_width);
    get(j.at("grid"), "height", c.grid_height);
  }
  if (j.contains("world")) {
    get(j.at("world"), "width", c.world_width);
    get(j.at("world"), "height", c.world_height);
  }
  get(j, "n_agents", c.n_agents);
  get(j, "m_obstacles_train", c.m_obstacles_train);
  get(j, "m_obstacles_test", c.m_obstacles_test);
  get(j, "agent_radius", c.agent_radius);
  get(j, "v_max", c.v_max);
  get(j, "a_max", c.a_max);
  get(j, "comm_radius", c.comm_radius);
  get(j, "max_steps", c.max_steps);
  get(j, "max_rounds", c.max_rounds);
  get(j, "train_rounds", c.train_rounds);
  get(j, "n_trials", c.n_trials);
  get(j, "seed", c.seed);
  get(j, "require_blocked", c.require_blocked);
  get(j, "blocked_detour_ratio", c.blocked_detour_ratio);
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    get(r, "beta", c.beta);
    get(r, "gamma", c.reward.gamma);
    get(r, "collision_penalty", c.reward.collision_penalty);
    get(r, "speed_penalty_weight", c.reward.speed_penalty_weight);
  }
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    get(p, "time_horizon", c.planner.time_horizon);
    get(p, "sample_count", c.planner.sample_count);
    get(p, "neighbor_radius", c.planner.neighbor_radius);
    get(p, "rng_seed", c.planner.rng_seed);
  }
  if (j.contains("ppo")) {
    const auto& p = j.at("ppo");
    get(p, "clip_ratio", c.ppo.clip_ratio);
    get(p, "gae_lambda", c.ppo.gae_lambda);
    get(p, "epochs_per_batch", c.ppo.epochs_per_batch);
    get(p, "minibatch_size", c.ppo.minibatch_size);
    get(p, "learning_rate", c.ppo.learning_rate);
    get(p, "entropy_coeff", c.ppo.entropy_coeff);
    get(p, "value_coeff", c.ppo.value_coeff);
    get(p, "batch_episodes", c.ppo.batch_episodes);
    get(p, "seed", c.ppo.seed);
    get(p, "total_env_steps", c.ppo.total_env_steps);
    get(p, "checkpoint_every", c.ppo.checkpoint_every);
    get(p, "eval_every", c.ppo.eval_every);
    get(p, "eval_trials", c.ppo.eval_trials);
  }
  get(j, "out_dir", c.out_dir);
  if (c.n_trials < 1 || c.grid_width <= 0 || c.grid_height <= 0 || c.n_agents < 0)
    throw std::invalid_argument("config: invalid dimensions/trials");
  return c;
}

// --- scenario generation ---

GridWorld random_grid_world(int width, int height, int m, int n, std::mt19937_64& rng) {
  const int cells = width * height;
  if (m + 2 * n > cells) throw std::invalid_argument("random_grid_world: too many entities");
  std::vector<int> ids(cells);
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates: first m + 2n entries become the occupied cells.
  for (int i = 0; i < m + 2 * n; ++i) {
    std::uniform_int_distribution<int> pick(i, cells - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  GridWorld w;
  w.width = width;
  w.height = height;
  auto cell = [&](int k) { return GridCell{ids[k] % width, ids[k] / width}; };
  for (int k = 0; k < m; ++k) w.obstacles.push_back(cell(k));
  for (int k = 0; k < n; ++k) w.agents.push_back(cell(m + k));
  for (int k = 0; k < n; ++k) w.goals.push_back(cell(m + n + k));
  return w;
}

bool grid_world_blocked(const GridWorld& world, double radius, double detour_ratio) {
  const EnvironmentLayout layout = lift_to_layout(world);
  std::vector<Vec2> starts, goals;
  for (const auto& c : world.agents) starts.push_back(cell_center(c));
  for (const auto& c : world.goals) goals.push_back(cell_center(c));
  if (blocking_obstacles(layout, starts, goals, radius).empty()) return false;
  for (size_t i = 0; i < starts.size(); ++i) {
    const double len = shortest_path_length(layout, starts[i], goals[i], radius);
    const double straight = (goals[i] - starts[i]).norm();
    if (!std::isfinite(len) || len > detour_ratio * straight) return true;
  }
  return false;
}

GridWorld random_scenario(const ExperimentConfig& cfg, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    GridWorld w = random_grid_world(cfg.grid_width, cfg.grid_height, m, cfg.n_agents, rng);
    if (!cfg.require_blocked ||
        grid_world_blocked(w, cfg.agent_radius, cfg.blocked_detour_ratio))
      return w;
  }
  throw std::runtime_error("random_scenario: no blocked layout found");
}

WorldState random_world_state(const ExperimentConfig& cfg, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WorldState w;
  w.bounds = {{0.0, 0.0}, {cfg.world_width, cfg.world_height}};
  const double H = cfg.world_height;

  // Agents start in the left band and head for the right band.
  auto sample_band = [&](double x_lo, double x_hi, std::vector<Vec2>& placed) {
    std::uniform_real_distribution<double> ux(x_lo, x_hi);
    std::uniform_real_distribution<double> uy(0.6, H - 0.6);
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Vec2 p{ux(rng), uy(rng)};
      bool ok = true;
      for (const auto& q : placed)
        if ((p - q).norm() < 1.2) ok = false;
      if (ok) {
        placed.push_back(p);
        return p;
      }
    }
    throw std::runtime_error("random_world_state: cannot place agent");
  };
  std::vector<Vec2> starts_placed, goals_placed;
  for (int i = 0; i < cfg.n_agents; ++i) {
    AgentState a;
    a.id = i;
    a.position = sample_band(0.6, 1.4, starts_placed);
    a.goal = sample_band(cfg.world_width - 1.4, cfg.world_width - 0.6, goals_placed);
    a.radius = cfg.agent_radius;
    a.v_max = cfg.v_max;
    w.agents.push_back(a);
  }

  // Obstacles on a jittered slot grid across the middle of the workspace.
  std::vector<Vec2> slots;
  for (double x = 1.8; x + 1.0 <= cfg.world_width - 1.7; x += 1.1)
    for (double y = 0.3; y + 1.0 <= H - 0.25; y += 1.1) slots.push_back({x, y});
  if ((int)slots.size() < m) throw std::invalid_argument("random_world_state: too many obstacles");
  std::shuffle(slots.begin(), slots.end(), rng);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  for (int j = 0; j < m; ++j) {
    ObstacleState o;
    o.id = j;
    const Vec2 corner{slots[j].x + jitter(rng), slots[j].y + jitter(rng)};
    o.body = {corner, corner + Vec2{1.0, 1.0}};
    o.v_max = cfg.v_max;
    o.a_max = cfg.a_max;
    w.obstacles.push_back(o);
  }
  return w;
}

// --- policy adapters ---

GridAction CnnMovePolicy::act(const Observation& obs, std::mt19937_64& rng) {
  const auto out = policy_.forward(obs);
  if (greedy_) {
    int best = 0;
    for (int a = 1; a < (int)out.logits.size(); ++a)
      if (out.logits[a] > out.logits[best]) best = a;
    return static_cast<GridAction>(best);
  }
  const auto sampled = sample_action(out.logits, ActionKind::Categorical5, rng);
  return static_cast<GridAction>(sampled.discrete);
}

ObstacleCommand GnnCommandPolicy::command(const LocalObservation& obs, std::mt19937_64& rng) {
  const GnnNodeInput input = build_gnn_input(obs, policy_.cfg);
  const auto out = policy_.forward_local(input);
  Vec2 raw;
  if (deterministic_) {
    raw = {out.head[0], out.head[1]};
  } else {
    const auto sampled = sample_action(out.head, ActionKind::Gaussian2, rng);
    raw = sampled.continuous;
  }
  // Commands are produced in normalized units and scaled to the speed cap.
  return {raw * policy_.cfg.v_scale};
}

// --- offline PPO task ---

OfflineCnnTask::OfflineCnnTask(const ExperimentConfig& cfg, CnnPolicy& policy)
    : cfg_(cfg), policy_(policy) {}

std::vector<ad::Var> OfflineCnnTask::register_params(ad::Tape& tape) const {
  return policy_.register_params(tape);
}

std::vector<Tensor*> OfflineCnnTask::parameters() {
  std::vector<Tensor*> out;
  for (auto& t : policy_.params) out.push_back(&t);
  return out;
}

RolloutBatch OfflineCnnTask::collect(int episodes, std::mt19937_64& rng) {
  obs_.clear();
  actions_.clear();
  RolloutBatch batch;
  const int m = cfg_.m_obstacles_train;
  const RewardConfig reward_cfg = cfg_.reward_for(m);
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t scen_seed = rng();
    GridWorld world = random_scenario(cfg_, m, scen_seed);
    std::vector<double> rewards;
    const int total_moves = cfg_.train_rounds * m;
    for (int round = 0; round < cfg_.train_rounds; ++round) {
      for (int j = 0; j < m; ++j) {
        const Observation obs = encode_observation(world, j);
        ad::Tape tape;
        const auto pv = policy_.register_params(tape);
        const auto fwd = policy_.forward(tape, pv, obs);
        const auto sampled = sample_action(tape.val(fwd.logits), ActionKind::Categorical5, rng);
        const auto action = static_cast<GridAction>(sampled.discrete);
        MoveResult res = apply_move(world, j, action);
        const bool rejected = action != GridAction::Stay && !res.moved;
        world = std::move(res.world);

        RolloutSample s;
        s.episode = e;
        s.t = (int)rewards.size();
        // Local term only until the terminal navigation reward arrives.
        s.reward = reward_cfg.beta_for(j) *
                   obstacle_local_reward(rejected ? 1 : 0, 0.0, reward_cfg);
        s.value = tape.val(fwd.value)[0];
        s.log_prob = sampled.log_prob;
        batch.samples.push_back(s);
        obs_.push_back(obs);
        actions_.push_back(sampled.discrete);
        rewards.push_back(s.reward);
      }
    }
    // Terminal team reward from the navigation rollout on the frozen layout.
    const EpisodeTrace trace = navigate(world, cfg_.planner, cfg_.max_steps);
    const double team = team_reward_offline(trace);
    batch.samples[batch.samples.size() - 1].reward += team;
    rewards.back() += team;
    batch.env_steps += total_moves;
    batch.episode_returns.push_back(std::accumulate(rewards.begin(), rewards.end(), 0.0));
  }
  return batch;
}

PpoTask::Eval OfflineCnnTask::eval_sample(size_t index, ad::Tape& tape,
                                          std::span<const ad::Var> pv) {
  const auto fwd = policy_.forward(tape, pv, obs_[index]);
  const ad::Var logp_all = tape.log_softmax(fwd.logits);
  const ad::Var log_prob = tape.pick(logp_all, actions_[index]);
  // H = -sum p log p
  const ad::Var entropy = tape.scale(tape.sum(tape.mul(tape.exp_(logp_all), logp_all)), -1.0);
  return {log_prob, entropy, fwd.value};
}

// --- online PPO task ---

OnlineGnnTask::OnlineGnnTask(const ExperimentConfig& cfg, GnnPolicy& policy)
    : cfg_(cfg), policy_(policy) {}

std::vector<ad::Var> OnlineGnnTask::register_params(ad::Tape& tape) const {
  return policy_.register_params(tape);
}

std::vector<Tensor*> OnlineGnnTask::parameters() {
  std::vector<Tensor*> out;
  for (auto& t : policy_.params) out.push_back(&t);
  return out;
}

namespace {

// Per-step rewards for every obstacle, using the pre-step agent positions and
// the committed post-step velocities/overlaps.
std::vector<double> online_step_rewards(const WorldState& before, const WorldState& after,
                                        const RewardConfig& reward_cfg) {
  std::vector<double> agent_rewards;
  for (size_t i = 0; i < after.agents.size(); ++i)
    agent_rewards.push_back(agent_progress_reward(before.agents[i].position,
                                                  after.agents[i].goal,
                                                  after.agents[i].velocity));
  std::vector<double> out;
  for (size_t j = 0; j < after.obstacles.size(); ++j) {
    int overlaps = 0;
    for (const auto& a : after.agents)
      if (point_rect_dist(a.position, after.obstacles[j].body) < a.radius) ++overlaps;
    for (size_t k = 0; k < after.obstacles.size(); ++k) {
      if (k == j) continue;
      const auto& A = after.obstacles[j].body;
      const auto& B = after.obstacles[k].body;
      if (A.min_corner.x < B.max_corner.x && B.min_corner.x < A.max_corner.x &&
          A.min_corner.y < B.max_corner.y && B.min_corner.y < A.max_corner.y)
        ++overlaps;
    }
    const double local =
        obstacle_local_reward(overlaps, after.obstacles[j].velocity.norm(), reward_cfg);
    out.push_back(obstacle_reward(agent_rewards, j, local, reward_cfg));
  }
  return out;
}

bool all_arrived(const WorldState& w) {
  for (const auto& a : w.agents)
    if ((a.position - a.goal).norm() > kArrivalTolerance) return false;
  return true;
}

}  // namespace

RolloutBatch OnlineGnnTask::collect(int episodes, std::mt19937_64& rng) {
  obs_.clear();
  actions_.clear();
  RolloutBatch batch;
  const int m = cfg_.m_obstacles_train;
  const RewardConfig reward_cfg = cfg_.reward_for(m);

  struct PendingSample {
    GnnNodeInput input;
    Vec2 action;
    double value, log_prob, reward;
  };

  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t scen_seed = rng();
    WorldState world = random_world_state(cfg_, m, scen_seed);
    std::vector<std::vector<PendingSample>> streams(m);
    double ep_return = 0.0;
    for (int t = 0; t < cfg_.max_steps && !all_arrived(world); ++t) {
      std::vector<ObstacleCommand> commands(m);
      std::vector<PendingSample> pending(m);
      for (int j = 0; j < m; ++j) {
        const GnnNodeInput input =
            build_gnn_input(local_observation(world, j, cfg_.comm_radius), policy_.cfg);
        const auto out = policy_.forward_local(input);
        const auto sampled = sample_action(out.head, ActionKind::Gaussian2, rng);
        commands[j] = {sampled.continuous * policy_.cfg.v_scale};
        pending[j] = {input, sampled.continuous, out.value, sampled.log_prob, 0.0};
      }
      WorldStepResult stepped = step_world(world, commands, cfg_.planner, 1.0);
      const std::vector<double> rewards = online_step_rewards(world, stepped.world, reward_cfg);
      for (int j = 0; j < m; ++j) {
        pending[j].reward = rewards[j];
        ep_return += rewards[j];
        streams[j].push_back(std::move(pending[j]));
      }
      world = std::move(stepped.world);
      batch.env_steps += 1;
    }
    for (int j = 0; j < m; ++j) {
      for (size_t t = 0; t < streams[j].size(); ++t) {
        auto& p = streams[j][t];
        RolloutSample s;
        s.episode = e * m + j;
        s.t = (int)t;
        s.reward = p.reward;
        s.value = p.value;
        s.log_prob = p.log_prob;
        batch.samples.push_back(s);
        obs_.push_back(std::move(p.input));
        actions_.push_back(p.action);
      }
    }
    batch.episode_returns.push_back(ep_return);
  }
  return batch;
}

PpoTask::Eval OnlineGnnTask::eval_sample(size_t index, ad::Tape& tape,
                                         std::span<const ad::Var> pv) {
  const auto fwd = policy_.forward_local(tape, pv, obs_[index]);
  // Diagonal-Gaussian log-density of the stored raw action under the head.
  const double action[2] = {actions_[index].x, actions_[index].y};
  ad::Var log_prob = tape.scalar(-kLogTwoPi);
  ad::Var log_std_sum = tape.scalar(0.0);
  for (int d = 0; d < 2; ++d) {
    const ad::Var mu = tape.pick(fwd.head, d);
    const ad::Var log_std = tape.pick(fwd.head, 2 + d);
    const ad::Var z = tape.mul(tape.sub(tape.scalar(action[d]), mu),
                               tape.exp_(tape.scale(log_std, -1.0)));
    log_prob = tape.add(log_prob, tape.sub(tape.scale(tape.square(z), -0.5), log_std));
    log_std_sum = tape.add(log_std_sum, log_std);
  }
  const ad::Var entropy = tape.add(log_std_sum, tape.scalar(1.0 + kLogTwoPi));
  return {log_prob, entropy, fwd.value};
}

std::vector<std::vector<double>> OnlineGnnTask::zero_policy_rewards(std::uint64_t scenario_seed,
                                                                    int m, int max_steps) const {
  const RewardConfig reward_cfg = cfg_.reward_for(m);
  WorldState world = random_world_state(cfg_, m, scenario_seed);
  std::vector<std::vector<double>> rewards(m);
  for (int t = 0; t < max_steps && !all_arrived(world); ++t) {
    std::vector<ObstacleCommand> commands(m);
    WorldStepResult stepped = step_world(world, commands, cfg_.planner, 1.0);
    const auto r = online_step_rewards(world, stepped.world, reward_cfg);
    for (int j = 0; j < m; ++j) rewards[j].push_back(r[j]);
    world = std::move(stepped.world);
  }
  return rewards;
}

// --- training loops ---

namespace {

struct TrainLog {
  std::ostringstream csv;
  TrainLog() { csv << "update,env_steps,mean_return,eval_spl,policy_loss,value_loss,entropy\n"; }
  void row(int update, long long steps, double ret, double eval_spl, const UpdateStats& s) {
    char buf[256];
    if (std::isnan(eval_spl))
      std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,,%.17g,%.17g,%.17g\n", update, steps, ret,
                    s.policy_loss, s.value_loss, s.entropy);
    else
      std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n", update, steps,
                    ret, eval_spl, s.policy_loss, s.value_loss, s.entropy);
    csv << buf;
  }
};

double eval_offline_spl(const ExperimentConfig& cfg, const CnnPolicy& policy) {
  std::vector<SplTrial> trials;
  CnnMovePolicy mover(policy, /*greedy=*/true);
  for (int k = 0; k < cfg.ppo.eval_trials; ++k) {
    const std::uint64_t seed = substream_seed(cfg.seed, 0xe7a1, (std::uint64_t)k);
    GridWorld world = random_scenario(cfg, cfg.m_obstacles_train, seed);
    const auto ep = run_optimization_episode(world, mover, cfg.train_rounds, seed);
    const EpisodeTrace trace = navigate(ep.world, cfg.planner, cfg.max_steps);
    for (const auto& a : trace.agents) {
      const double shortest =
          std::isfinite(a.shortest) ? a.shortest : (a.goal - a.start).norm();
      trials.push_back({a.arrived, std::max(shortest, 1e-9), a.traveled});
    }
  }
  return spl(trials);
}

double eval_online_spl(const ExperimentConfig& cfg, const GnnPolicy& policy) {
  std::vector<SplTrial> trials;
  GnnCommandPolicy commander(policy, /*deterministic=*/true);
  for (int k = 0; k < cfg.ppo.eval_trials; ++k) {
    const std::uint64_t seed = substream_seed(cfg.seed, 0xe7a2, (std::uint64_t)k);
    WorldState world = random_world_state(cfg, cfg.m_obstacles_train, seed);
    const EpisodeTrace trace =
        run_online_episode(world, commander, cfg.max_steps, cfg.comm_radius, seed, cfg.planner);
    for (const auto& a : trace.agents)
      trials.push_back({a.arrived, std::max(a.shortest, 1e-9), a.traveled});
  }
  return spl(trials);
}

}  // namespace

TrainResult train_offline(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  CnnConfig pc;
  pc.height = cfg.grid_height;
  pc.width = cfg.grid_width;
  CnnPolicy policy = CnnPolicy::init(pc, cfg.ppo.seed);
  OfflineCnnTask task(cfg, policy);
  AdamState adam;
  std::mt19937_64 rng(substream_seed(cfg.ppo.seed, 0x0ff1, 0));
  TrainLog log;
  TrainResult result;
  result.checkpoint_path = cfg.out_dir + "/policy_offline.bin";

  int update = 0;
  long long steps = 0;
  while (steps < cfg.ppo.total_env_steps) {
    RolloutBatch batch = task.collect(cfg.ppo.batch_episodes, rng);
    steps += batch.env_steps;
    const UpdateStats stats = ppo_update(task, batch, cfg.reward.gamma, cfg.ppo, adam, rng);
    ++update;
    const bool do_eval = cfg.ppo.eval_every > 0 && update % cfg.ppo.eval_every == 0;
    log.row(update, steps, stats.mean_return,
            do_eval ? eval_offline_spl(cfg, policy) : std::nan(""), stats);
    if (cfg.ppo.checkpoint_every > 0 && update % cfg.ppo.checkpoint_every == 0)
      save_policy(cfg.out_dir + "/policy_offline_u" + std::to_string(update) + ".bin", policy);
  }
  save_policy(result.checkpoint_path, policy);
  result.log_path = cfg.out_dir + "/train_offline_log.csv";
  write_text_file(result.log_path, log.csv.str());
  result.updates = update;
  result.env_steps = steps;
  return result;
}

TrainResult train_online(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  GnnConfig pc;
  pc.comm_radius = cfg.comm_radius;
  pc.v_scale = cfg.v_max;
  GnnPolicy policy = GnnPolicy::init(pc, cfg.ppo.seed);
  OnlineGnnTask task(cfg, policy);
  AdamState adam;
  std::mt19937_64 rng(substream_seed(cfg.ppo.seed, 0x0ff2, 0));
  TrainLog log;
  TrainResult result;
  result.checkpoint_path = cfg.out_dir + "/policy_online.bin";

  int update = 0;
  long long steps = 0;
  while (steps < cfg.ppo.total_env_steps) {
    RolloutBatch batch = task.collect(cfg.ppo.batch_episodes, rng);
    steps += batch.env_steps;
    const UpdateStats stats = ppo_update(task, batch, cfg.reward.gamma, cfg.ppo, adam, rng);
    ++update;
    const bool do_eval = cfg.ppo.eval_every > 0 && update % cfg.ppo.eval_every == 0;
    log.row(update, steps, stats.mean_return,
            do_eval ? eval_online_spl(cfg, policy) : std::nan(""), stats);
    if (cfg.ppo.checkpoint_every > 0 && update % cfg.ppo.checkpoint_every == 0)
      save_policy(cfg.out_dir + "/policy_online_u" + std::to_string(update) + ".bin", policy);
  }
  save_policy(result.checkpoint_path, policy);
  result.log_path = cfg.out_dir + "/train_online_log.csv";
  write_text_file(result.log_path, log.csv.str());
  result.updates = update;
  result.env_steps = steps;
  return result;
}

// --- evaluation ---

PolicySource policy_source_from_string(const std::string& s) {
  if (s == "none") return PolicySource::None;
  if (s == "heuristic") return PolicySource::Heuristic;
  if (s == "trained") return PolicySource::Trained;
  throw std::invalid_argument("policy source must be none|heuristic|trained");
}

namespace {

struct TrialOutcome {
  EpisodeTrace trace;
  double obstacle_moves = 0.0;  // optimization-phase travel (offline)
};

TrialOutcome run_offline_trial(const ExperimentConfig& cfg, PolicySource source,
                               const CnnPolicy* policy, int m, std::uint64_t seed) {
  GridWorld world = random_scenario(cfg, m, seed);
  TrialOutcome out;
  if (source == PolicySource::Heuristic) {
    std::mt19937_64 rng(substream_seed(seed, 0x4e5, 0));
    GridWorld cur = world;
    for (int r = 0; r < cfg.max_rounds; ++r) {
      const auto res = heuristic_round_grid(cur, cfg.agent_radius, rng);
      out.obstacle_moves += res.blocked_count - res.stuck_count;
      cur = res.world;
    }
    world = cur;
  } else if (source == PolicySource::Trained) {
    CnnMovePolicy mover(*policy, /*greedy=*/true);
    const auto ep = run_optimization_episode(world, mover, cfg.train_rounds, seed);
    for (const auto& mv : ep.moves) out.obstacle_moves += mv.moved ? 1.0 : 0.0;
    world = ep.world;
  }
  out.trace = navigate(world, cfg.planner, cfg.max_steps);
  return out;
}

// Centralized comparator for the online setting: periodically recompute which
// obstacles block the agents' shortest paths and command those away along a
// random heading at full speed.
class OnlineHeuristicSource : public WorldCommandSource {
 public:
  OnlineHeuristicSource(double radius, int refresh_every)
      : radius_(radius), refresh_every_(refresh_every) {}

  std::vector<ObstacleCommand> commands(const WorldState& world, std::mt19937_64& rng) override {
    if (step_++ % refresh_every_ == 0) {
      EnvironmentLayout layout;
      layout.bounds = world.bounds;
      std::vector<Vec2> starts, goals;
      for (const auto& a : world.agents) {
        starts.push_back(a.position);
        goals.push_back(a.goal);
      }
      for (const auto& o : world.obstacles) layout.obstacles.push_back(o.body);
      const BlockReport report = blocking_obstacles(layout, starts, goals, radius_);
      headings_.assign(world.obstacles.size(), Vec2{});
      std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
      for (const auto& [ob, agents] : report) {
        const double a = angle(rng);
        headings_[ob] = {std::cos(a) * world.obstacles[ob].v_max,
                         std::sin(a) * world.obstacles[ob].v_max};
      }
    }
    std::vector<ObstacleCommand> out(world.obstacles.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = {headings_[j]};
    return out;
  }

 private:
  double radius_;
  int refresh_every_;
  int step_ = 0;
  std::vector<Vec2> headings_;
};

TrialOutcome run_online_trial(const ExperimentConfig& cfg, PolicySource source,
                              const GnnPolicy* policy, int m, std::uint64_t seed) {
  WorldState world = random_world_state(cfg, m, seed);
  TrialOutcome out;
  if (source == PolicySource::Trained) {
    GnnCommandPolicy commander(*policy, /*deterministic=*/true);
    out.trace = run_online_episode(world, commander, cfg.max_steps, cfg.comm_radius, seed,
                                   cfg.planner);
  } else if (source == PolicySource::Heuristic) {
    OnlineHeuristicSource driver(cfg.agent_radius, /*refresh_every=*/10);
    out.trace = run_world_episode(world, driver, cfg.max_steps, seed, cfg.planner);
  } else {
    ZeroCommandPolicy zero;
    out.trace =
        run_online_episode(world, zero, cfg.max_steps, cfg.comm_radius, seed, cfg.planner);
  }
  out.obstacle_moves = obstacle_travel(out.trace);
  return out;
}

}  // namespace

TrialsResult run_trials(const ExperimentConfig& cfg, PolicySource source,
                        const std::string& checkpoint_path, const std::string& out_dir) {
  std::optional<CnnPolicy> cnn;
  std::optional<GnnPolicy> gnn;
  if (source == PolicySource::Trained) {
    if (checkpoint_path.empty()) throw std::runtime_error("run_trials: missing checkpoint");
    if (cfg.setting == "offline")
      cnn = load_cnn_policy(checkpoint_path);
    else
      gnn = load_gnn_policy(checkpoint_path);
  }
  if (!out_dir.empty()) fs::create_directories(out_dir);

  TrialsResult result;
  for (int m : cfg.m_obstacles_test) {
    SweepPoint point;
    point.m = m;
    std::vector<double> spls, pcts, succ, travel;
    for (int k = 0; k < cfg.n_trials; ++k) {
      const std::uint64_t seed = substream_seed(cfg.seed, (std::uint64_t)m, (std::uint64_t)k);
      const auto t0 = std::chrono::steady_clock::now();
      const TrialOutcome outcome =
          cfg.setting == "offline"
              ? run_offline_trial(cfg, source, cnn ? &*cnn : nullptr, m, seed)
              : run_online_trial(cfg, source, gnn ? &*gnn : nullptr, m, seed);
      const auto t1 = std::chrono::steady_clock::now();

      std::vector<SplTrial> agent_trials;
      int arrived = 0;
      for (const auto& a : outcome.trace.agents) {
        const double shortest =
            std::isfinite(a.shortest) ? a.shortest : (a.goal - a.start).norm();
        agent_trials.push_back({a.arrived, std::max(shortest, 1e-9), a.traveled});
        arrived += a.arrived ? 1 : 0;
      }
      TrialRecord rec;
      rec.m = m;
      rec.trial = k;
      rec.spl = spl(agent_trials);
      rec.pct_speed = pct_speed(outcome.trace);
      rec.success_rate = outcome.trace.agents.empty()
                             ? 1.0
                             : (double)arrived / outcome.trace.agents.size();
      rec.obstacle_travel = cfg.setting == "offline" ? outcome.obstacle_moves
                                                     : obstacle_travel(outcome.trace);
      rec.wall_clock_sec = std::chrono::duration<double>(t1 - t0).count();
      point.trials.push_back(rec);
      spls.push_back(rec.spl);
      pcts.push_back(rec.pct_speed);
      succ.push_back(rec.success_rate);
      travel.push_back(rec.obstacle_travel);

      if (!out_dir.empty()) {
        const std::string path = out_dir + "/trace_m" + std::to_string(m) + "_t" +
                                 std::to_string(k) + ".jsonl";
        write_text_file(path, trace_to_jsonl(outcome.trace));
        result.trace_paths.push_back(path);
      }
    }
    point.report.spl = mean_std(spls);
    point.report.pct_speed = mean_std(pcts);
    point.report.success_rate = mean_std(succ);
    point.report.obstacle_travel = mean_std(travel);
    point.report.n_trials = cfg.n_trials;
    if (!out_dir.empty()) {
      write_text_file(out_dir + "/report_m" + std::to_string(m) + ".csv",
                      metrics_report_to_csv(point.report));
      write_text_file(out_dir + "/report_m" + std::to_string(m) + ".json",
                      metrics_report_to_json(point.report));
    }
    result.sweeps.push_back(std::move(point));
  }
  return result;
}

std::vector<std::string> render_plots(const std::vector<LabeledSweep>& sweeps,
                                      const std::vector<EpisodeTrace>& traces,
                                      const RectBody& bounds, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  auto metric_plot = [&](const std::string& name, auto select) {
    std::vector<MetricCurve> curves;
    for (const auto& s : sweeps) {
      MetricCurve c;
      c.label = s.label;
      c.color = s.color;
      for (const auto& p : s.sweeps) {
        c.x.push_back(p.m);
        const Stat st = select(p.report);
        c.mean.push_back(st.mean);
        c.stddev.push_back(st.stddev);
      }
      curves.push_back(std::move(c));
    }
    const std::string path = out_dir + "/" + name + ".svg";
    write_text_file(path,
                    render_metric_curves_svg(name, "obstacles", name, curves));
    files.push_back(path);
  };
  if (!sweeps.empty()) {
    metric_plot("spl", [](const MetricsReport& r) { return r.spl; });
    metric_plot("pct_speed", [](const MetricsReport& r) { return r.pct_speed; });
  }
  for (size_t i = 0; i < traces.size(); ++i) {
    const std::string path = out_dir + "/trajectory_" + std::to_string(i) + ".svg";
    write_text_file(path, render_trajectories_svg(bounds, traces[i]));
    files.push_back(path);
  }
  if (traces.size() >= 2) {
    const std::string path = out_dir + "/before_after.svg";
    write_text_file(path, render_before_after_svg(bounds, traces[0], traces[1]));
    files.push_back(path);
  }
  return files;
}

// --- trend analysis ---

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (double)(i + j) / 2.0 + 1.0;  // mid-rank for ties
    for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman_rho: need matched samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  double mx = 0, my = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= rx.size();
  my /= ry.size();
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0 || dy == 0) return 0.0;
  return num / std::sqrt(dx * dy);
}

double spearman_p_positive(double rho, int n) {
  if (n < 3) return 1.0;
  if (rho >= 1.0) return 0.0;
  const double t = rho * std::sqrt((n - 2) / (1.0 - rho * rho));
  // Student-t upper-tail via the normal approximation with Welch correction
  // for moderate n; adequate for the trend gate.
  const double z = t * (1.0 - 1.0 / (4.0 * (n - 2)));
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace envopt
