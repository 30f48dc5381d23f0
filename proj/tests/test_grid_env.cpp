#include <random>

#include "doctest.h"
#include "envopt/grid_env.hpp"
#include "envopt/json_io.hpp"

using namespace envopt;

namespace {

GridWorld demo_world() {
  GridWorld w;
  w.width = 8;
  w.height = 8;
  w.obstacles = {{2, 3}, {5, 5}};
  w.agents = {{0, 0}, {1, 1}};
  w.goals = {{7, 7}, {7, 0}};
  return w;
}

class CountingPolicy : public ObstacleMovePolicy {
 public:
  int calls = 0;
  GridAction act(const Observation&, std::mt19937_64&) override {
    ++calls;
    return GridAction::Stay;
  }
};

class FixedPolicy : public ObstacleMovePolicy {
 public:
  explicit FixedPolicy(GridAction a) : action_(a) {}
  GridAction act(const Observation&, std::mt19937_64&) override { return action_; }

 private:
  GridAction action_;
};

class RandomPolicy : public ObstacleMovePolicy {
 public:
  GridAction act(const Observation&, std::mt19937_64& rng) override {
    std::uniform_int_distribution<int> pick(0, kGridActionCount - 1);
    return static_cast<GridAction>(pick(rng));
  }
};

}  // namespace

TEST_CASE("encode_observation: channels and the active one-hot") {
  const GridWorld w = demo_world();
  const Observation obs = encode_observation(w, 0);
  CHECK(obs.channels == 4);
  // Obstacle channel: ones exactly at (2,3) and (5,5), indexed [row][col].
  int ones = 0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) ones += obs.at(0, r, c) == 1.0 ? 1 : 0;
  CHECK(ones == 2);
  CHECK(obs.at(0, 3, 2) == 1.0);
  CHECK(obs.at(0, 5, 5) == 1.0);
  // Agent channel has exactly two ones.
  int agent_ones = 0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) agent_ones += obs.at(1, r, c) == 1.0 ? 1 : 0;
  CHECK(agent_ones == 2);
  // Active channel is a single one at the selected obstacle.
  int active_ones = 0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) active_ones += obs.at(3, r, c) == 1.0 ? 1 : 0;
  CHECK(active_ones == 1);
  CHECK(obs.at(3, 3, 2) == 1.0);
  const Observation obs1 = encode_observation(w, 1);
  CHECK(obs1.at(3, 5, 5) == 1.0);
}

TEST_CASE("encode_observation: out-of-range active obstacle rejected") {
  GridWorld empty;
  empty.width = 4;
  empty.height = 4;
  CHECK_THROWS_AS(encode_observation(empty, 0), std::out_of_range);
  CHECK_THROWS_AS(encode_observation(demo_world(), 2), std::out_of_range);
}

TEST_CASE("apply_move: legal move, boundary no-op, occupancy no-op") {
  const GridWorld w = demo_world();
  const MoveResult right = apply_move(w, 0, GridAction::Right);
  CHECK(right.moved);
  CHECK(right.world.obstacles[0] == GridCell{3, 3});

  GridWorld corner = w;
  corner.obstacles[0] = {0, 5};
  const MoveResult off = apply_move(corner, 0, GridAction::Left);
  CHECK_FALSE(off.moved);
  CHECK(off.world.obstacles[0] == GridCell{0, 5});

  GridWorld packed = w;
  packed.obstacles = {{1, 0}};
  packed.agents = {{1, 1}};
  packed.goals = {{7, 7}};
  const MoveResult onto_agent = apply_move(packed, 0, GridAction::Up);
  CHECK_FALSE(onto_agent.moved);
  // Stay reports not-moved and leaves the world unchanged.
  CHECK_FALSE(apply_move(w, 0, GridAction::Stay).moved);
}

TEST_CASE("apply_move preserves invariants and obstacle count over random action streams") {
  std::mt19937_64 rng(31);
  GridWorld w = demo_world();
  std::uniform_int_distribution<int> action(0, 4), idx(0, 1);
  for (int k = 0; k < 2000; ++k) {
    w = apply_move(w, idx(rng), static_cast<GridAction>(action(rng))).world;
    CHECK(w.obstacles.size() == 2);
    CHECK_NOTHROW(w.validate());
  }
}

TEST_CASE("run_optimization_episode: one policy invocation per obstacle per round") {
  GridWorld w = demo_world();
  for (int k = 0; k < 8; ++k) w.obstacles.push_back({k, 6});  // 10 obstacles
  CountingPolicy counter;
  const auto ep = run_optimization_episode(w, counter, 1, 42);
  CHECK(counter.calls == 10);
  CHECK(ep.moves.size() == 10);
  const auto ep3 = run_optimization_episode(w, counter, 3, 42);
  CHECK(ep3.moves.size() == 30);
  CHECK_THROWS_AS(run_optimization_episode(w, counter, 0, 1), std::invalid_argument);
}

TEST_CASE("run_optimization_episode: stay policy leaves the world unchanged") {
  const GridWorld w = demo_world();
  FixedPolicy stay(GridAction::Stay);
  const auto ep = run_optimization_episode(w, stay, 5, 9);
  CHECK(ep.world.obstacles == w.obstacles);
  CHECK(ep.world.agents == w.agents);
}

TEST_CASE("run_optimization_episode: fixed seed reproduces the trace") {
  const GridWorld w = demo_world();
  RandomPolicy random_policy;
  const auto a = run_optimization_episode(w, random_policy, 4, 1234);
  const auto b = run_optimization_episode(w, random_policy, 4, 1234);
  REQUIRE(a.moves.size() == b.moves.size());
  for (size_t i = 0; i < a.moves.size(); ++i) {
    CHECK(a.moves[i].action == b.moves[i].action);
    CHECK(a.moves[i].moved == b.moves[i].moved);
  }
  CHECK(a.world.obstacles == b.world.obstacles);
}

TEST_CASE("lift_to_layout: unit cells, disk agents at centers") {
  const GridWorld w = demo_world();
  const EnvironmentLayout layout = lift_to_layout(w);
  CHECK(layout.bounds.max_corner.x == 8.0);
  REQUIRE(layout.obstacles.size() == 2);
  CHECK(layout.obstacles[0].min_corner == Vec2{2.0, 3.0});
  CHECK(layout.obstacles[0].max_corner == Vec2{3.0, 4.0});
  REQUIRE(layout.starts.size() == 2);
  CHECK(layout.starts[0].center == Vec2{0.5, 0.5});
  CHECK(layout.starts[0].radius == doctest::Approx(0.3));
  CHECK_NOTHROW(layout.validate());
}

TEST_CASE("navigate: adjacent goal arrives; success flag set") {
  GridWorld w;
  w.width = 8;
  w.height = 8;
  w.agents = {{2, 2}};
  w.goals = {{3, 2}};
  PlannerConfig cfg;
  const EpisodeTrace trace = navigate(w, cfg, 100);
  CHECK(trace.all_arrived);
  REQUIRE(trace.agents.size() == 1);
  CHECK(trace.agents[0].arrived);
  CHECK(trace.agents[0].arrival_step <= 12);
  CHECK(trace.agents[0].traveled == doctest::Approx(1.0).epsilon(0.15));
  CHECK(trace.agents[0].shortest == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("navigate: walled-in agent fails without interpenetration") {
  GridWorld w;
  w.width = 8;
  w.height = 8;
  w.agents = {{1, 1}};
  w.goals = {{6, 6}};
  w.obstacles = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  PlannerConfig cfg;
  const EpisodeTrace trace = navigate(w, cfg, 500);
  CHECK_FALSE(trace.all_arrived);
  CHECK_FALSE(trace.agents[0].arrived);
  const EnvironmentLayout layout = lift_to_layout(w);
  for (const auto& step : trace.steps)
    for (const auto& o : layout.obstacles)
      CHECK(point_rect_dist(step.agents[0].p, o) - 0.3 >= -1e-9);
}

TEST_CASE("navigate: no interpenetration deeper than 1e-9 across a busy world") {
  GridWorld w = demo_world();
  w.obstacles = {{3, 3}, {4, 3}, {3, 4}, {2, 5}, {5, 2}};
  PlannerConfig cfg;
  const EpisodeTrace trace = navigate(w, cfg, 300);
  const EnvironmentLayout layout = lift_to_layout(w);
  for (const auto& step : trace.steps) {
    for (size_t i = 0; i < step.agents.size(); ++i) {
      for (const auto& o : layout.obstacles)
        CHECK(point_rect_dist(step.agents[i].p, o) - 0.3 >= -1e-9);
      for (size_t j = i + 1; j < step.agents.size(); ++j)
        CHECK((step.agents[i].p - step.agents[j].p).norm() - 0.6 >= -1e-9);
    }
  }
  // Obstacle count conserved in every step record.
  for (const auto& step : trace.steps) CHECK(step.obstacles.size() == 5);
}

TEST_CASE("grid JSON round trip") {
  const GridWorld w = demo_world();
  const std::string text = grid_to_json(w);
  CHECK(text.find("\"width\"") < text.find("\"height\""));
  CHECK(text.find("\"obstacles\"") < text.find("\"agents\""));
  const GridWorld back = grid_from_json(text);
  CHECK(back.obstacles == w.obstacles);
  CHECK(back.agents == w.agents);
  CHECK(back.goals == w.goals);
}

TEST_CASE("trace JSONL: one line per step, schema fields present") {
  GridWorld w;
  w.width = 8;
  w.height = 8;
  w.agents = {{2, 2}};
  w.goals = {{4, 2}};
  w.obstacles = {{6, 6}};
  PlannerConfig cfg;
  const EpisodeTrace trace = navigate(w, cfg, 60);
  const std::string text = trace_to_jsonl(trace);
  size_t lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  CHECK(lines == trace.steps.size());
  CHECK(text.find("\"t\":0") != std::string::npos);
  CHECK(text.find("\"agents\":[{\"id\":0,\"p\":[") != std::string::npos);
  CHECK(text.find("\"obstacles\":") != std::string::npos);
  CHECK(text.find("\"events\":") != std::string::npos);
  const EpisodeTrace back = trace_from_jsonl(text);
  REQUIRE(back.steps.size() == trace.steps.size());
  CHECK(back.steps[3].agents[0].p.x == trace.steps[3].agents[0].p.x);
  CHECK(back.steps[5].obstacles[0].ext.x == 1.0);
}
