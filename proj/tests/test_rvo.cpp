#include <random>

#include "doctest.h"
#include "envopt/rvo.hpp"

using namespace envopt;

namespace {

AgentState make_agent(int id, Vec2 pos, Vec2 goal, double v_max = 0.1, double radius = 0.3) {
  AgentState a;
  a.id = id;
  a.position = pos;
  a.goal = goal;
  a.v_max = v_max;
  a.radius = radius;
  return a;
}

double pair_gap(const AgentState& a, const AgentState& b) {
  return (a.position - b.position).norm() - (a.radius + b.radius);
}

}  // namespace

TEST_CASE("preferred_velocity: straight at max speed, zero at goal, no overshoot") {
  CHECK(preferred_velocity(make_agent(0, {0, 0}, {10, 0})).x == doctest::Approx(0.1));
  CHECK(preferred_velocity(make_agent(0, {0, 0}, {10, 0})).y == 0.0);
  CHECK(preferred_velocity(make_agent(0, {3, 3}, {3, 3})).x == 0.0);
  const Vec2 close = preferred_velocity(make_agent(0, {0, 0}, {0.05, 0}), 1.0);
  CHECK(close.x == doctest::Approx(0.05));
}

TEST_CASE("time_to_collision_disk: closing, separating, overlapping") {
  // Head-on closing at relative speed 0.2 from gap 1.4 (centers 2, R=0.6).
  CHECK(time_to_collision_disk({2, 0}, {0.2, 0}, 0.6) == doctest::Approx(7.0));
  CHECK(time_to_collision_disk({2, 0}, {-0.2, 0}, 0.6) ==
        std::numeric_limits<double>::infinity());
  CHECK(time_to_collision_disk({0.3, 0}, {0.1, 0}, 0.6) == 0.0);
  // Lateral miss.
  CHECK(time_to_collision_disk({2, 1}, {0.2, 0}, 0.6) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("time_to_collision_rect: face hit, corner hit, miss") {
  const RectBody r{{2, -1}, {3, 1}};
  // Disk radius 0.5 moving +x hits the inflated face x=1.5 at t=15.
  CHECK(time_to_collision_rect({0, 0}, {0.1, 0}, r, 0.5) == doctest::Approx(15.0));
  CHECK(time_to_collision_rect({0, 0}, {-0.1, 0}, r, 0.5) ==
        std::numeric_limits<double>::infinity());
  // Aimed above the face: corner circle decides.
  const double t_corner = time_to_collision_rect({0, 1.2}, {0.1, 0}, r, 0.5);
  CHECK(t_corner > 15.0);
  CHECK(t_corner < std::numeric_limits<double>::infinity());
  CHECK(time_to_collision_rect({2.5, 0}, {0.1, 0}, r, 0.5) == 0.0);
}

TEST_CASE("select_velocity: no neighbors or obstacles returns the preferred velocity") {
  PlannerConfig cfg;
  const AgentState a = make_agent(0, {1, 1}, {5, 4});
  const auto choice = select_velocity(a, {}, {}, cfg);
  const Vec2 pref = preferred_velocity(a);
  CHECK_FALSE(choice.stopped);
  CHECK(choice.velocity.x == pref.x);
  CHECK(choice.velocity.y == pref.y);
}

TEST_CASE("select_velocity: symmetric head-on pair picks mirror-symmetric velocities") {
  PlannerConfig cfg;
  std::vector<AgentState> agents{make_agent(0, {-1, 0}, {4, 0}),
                                 make_agent(1, {1, 0}, {-4, 0})};
  const auto va = select_velocity(agents[0], agents, {}, cfg);
  const auto vb = select_velocity(agents[1], agents, {}, cfg);
  CHECK_FALSE(va.stopped);
  CHECK_FALSE(vb.stopped);
  // Mirror across the perpendicular bisector of the pair.
  CHECK(vb.velocity.x == doctest::Approx(-va.velocity.x).epsilon(1e-12));
  CHECK(vb.velocity.y == doctest::Approx(va.velocity.y).epsilon(1e-12));
  // One synchronous step keeps the disks separated (exact distance oracle).
  const auto stepped = step_agents(agents, {}, 1.0, cfg);
  CHECK(pair_gap(stepped.agents[0], stepped.agents[1]) >= 0.0);
}

TEST_CASE("select_velocity: agent behind a wide wall deviates laterally") {
  PlannerConfig cfg;
  const std::vector<RectBody> wall{{{1.0, -2.0}, {1.5, 2.0}}};
  const AgentState a = make_agent(0, {0.5, 0.0}, {5.0, 0.0});
  const auto choice = select_velocity(a, {}, wall, cfg);
  CHECK_FALSE(choice.stopped);
  CHECK(std::abs(choice.velocity.y) > 0.0);
}

TEST_CASE("select_velocity: fully enclosed agent stops with a flag") {
  PlannerConfig cfg;
  std::vector<AgentState> agents{make_agent(0, {0, 0}, {5, 0})};
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * M_PI * k / 8.0;
    agents.push_back(make_agent(k + 1, {0.65 * std::cos(a), 0.65 * std::sin(a)}, {0, 0}));
  }
  const auto choice = select_velocity(agents[0], agents, {}, cfg);
  CHECK(choice.stopped);
  CHECK(choice.velocity.x == 0.0);
  CHECK(choice.velocity.y == 0.0);
}

TEST_CASE("step_agents: zero agents is the identity; dt must be positive") {
  PlannerConfig cfg;
  CHECK(step_agents({}, {}, 1.0, cfg).agents.empty());
  CHECK_THROWS_AS(step_agents({}, {}, 0.0, cfg), std::invalid_argument);
}

TEST_CASE("step_agents: single agent covers 5 units within 55 steps") {
  PlannerConfig cfg;
  std::vector<AgentState> agents{make_agent(0, {1, 4}, {6, 4})};
  int arrived_at = -1;
  for (int t = 1; t <= 55 && arrived_at < 0; ++t) {
    agents = step_agents(agents, {}, 1.0, cfg).agents;
    if ((agents[0].position - agents[0].goal).norm() <= 1e-9) arrived_at = t;
  }
  CHECK(arrived_at > 0);
  CHECK(arrived_at <= 55);
}

TEST_CASE("step_agents: four agents in empty 8x8 space all arrive without collision") {
  PlannerConfig cfg;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.8, 7.2);
  int ok_runs = 0;
  for (int run = 0; run < 5; ++run) {
    std::vector<AgentState> agents;
    std::vector<Vec2> placed;
    for (int i = 0; i < 4; ++i) {
      Vec2 p, g;
      for (;;) {
        p = {u(rng), u(rng)};
        bool far = true;
        for (const auto& q : placed)
          if ((p - q).norm() < 1.2) far = false;
        if (far) break;
      }
      placed.push_back(p);
      for (;;) {
        g = {u(rng), u(rng)};
        bool far = (g - p).norm() > 1.0;
        for (const auto& q : placed)
          if ((g - q).norm() < 1.2) far = false;
        if (far) break;
      }
      placed.push_back(g);
      agents.push_back(make_agent(i, p, g));
    }
    // Boundary walls as obstacles.
    const std::vector<RectBody> walls{{{-1, -1}, {9, 0}}, {{-1, 8}, {9, 9}},
                                      {{-1, 0}, {0, 8}}, {{8, 0}, {9, 8}}};
    bool collision = false;
    bool all_arrived = false;
    for (int t = 0; t < 500 && !all_arrived; ++t) {
      agents = step_agents(agents, walls, 1.0, cfg).agents;
      for (size_t i = 0; i < agents.size(); ++i)
        for (size_t j = i + 1; j < agents.size(); ++j)
          if (pair_gap(agents[i], agents[j]) < -1e-9) collision = true;
      all_arrived = true;
      for (const auto& a : agents)
        if ((a.position - a.goal).norm() > 0.1) all_arrived = false;
    }
    CHECK_FALSE(collision);
    if (all_arrived && !collision) ++ok_runs;
  }
  CHECK(ok_runs >= 4);
}

TEST_CASE("step_agents: randomized safety, speed cap and determinism") {
  PlannerConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 7.5);
  for (int scenario = 0; scenario < 5; ++scenario) {
    std::vector<AgentState> agents;
    std::vector<RectBody> obstacles;
    for (int k = 0; k < 4; ++k) {
      const Vec2 c{u(rng), u(rng)};
      obstacles.push_back({c, c + Vec2{0.8, 0.8}});
    }
    int id = 0;
    while ((int)agents.size() < 4) {
      const Vec2 p{u(rng), u(rng)};
      bool ok = true;
      for (const auto& o : obstacles)
        if (point_rect_dist(p, o) < 0.35) ok = false;
      for (const auto& a : agents)
        if ((a.position - p).norm() < 0.75) ok = false;
      if (ok) agents.push_back(make_agent(id++, p, {u(rng), u(rng)}));
    }
    auto replay = agents;
    for (int t = 0; t < 100; ++t) {
      agents = step_agents(agents, obstacles, 1.0, cfg).agents;
      for (size_t i = 0; i < agents.size(); ++i) {
        CHECK(agents[i].velocity.norm() <= agents[i].v_max + 1e-9);
        for (size_t j = i + 1; j < agents.size(); ++j)
          CHECK(pair_gap(agents[i], agents[j]) >= -1e-9);
        for (const auto& o : obstacles)
          CHECK(point_rect_dist(agents[i].position, o) - agents[i].radius >= -1e-9);
      }
    }
    // Bitwise determinism on replay.
    for (int t = 0; t < 100; ++t) replay = step_agents(replay, obstacles, 1.0, cfg).agents;
    for (size_t i = 0; i < agents.size(); ++i) {
      CHECK(agents[i].position.x == replay[i].position.x);
      CHECK(agents[i].position.y == replay[i].position.y);
      CHECK(agents[i].velocity.x == replay[i].velocity.x);
      CHECK(agents[i].velocity.y == replay[i].velocity.y);
    }
  }
}

TEST_CASE("select_velocity: reads only neighbors within the sensing radius") {
  PlannerConfig cfg;
  std::vector<AgentState> near{make_agent(0, {2, 2}, {6, 2}), make_agent(1, {3, 2.2}, {0, 2})};
  std::vector<AgentState> with_far = near;
  with_far.push_back(make_agent(2, {2 + cfg.neighbor_radius + 0.01, 2}, {0, 0}));
  with_far.push_back(make_agent(3, {7.9, 7.9}, {0, 0}));
  const auto a = select_velocity(near[0], near, {}, cfg);
  const auto b = select_velocity(with_far[0], with_far, {}, cfg);
  CHECK(a.velocity.x == b.velocity.x);
  CHECK(a.velocity.y == b.velocity.y);
  // Moving the far agent inside the radius does change the decision context.
  with_far[2].position = {2.5, 2.0};
  const auto c = select_velocity(with_far[0], with_far, {}, cfg);
  (void)c;  // may or may not differ; the call itself must be well-defined
}

TEST_CASE("planner parameter sweep keeps safety and termination") {
  // Asymmetric crossing scenario: exactly mirror-symmetric setups are the
  // planner's known measure-zero livelock and are excluded by design.
  for (double horizon : {5.0, 10.0, 20.0}) {
    for (int samples : {64, 128, 256}) {
      for (double radius : {1.0, 2.0, 4.0}) {
        PlannerConfig cfg;
        cfg.time_horizon = horizon;
        cfg.sample_count = samples;
        cfg.neighbor_radius = radius;
        std::vector<AgentState> agents{make_agent(0, {1, 1.2}, {7, 6.6}),
                                       make_agent(1, {7, 1.4}, {1.2, 7})};
        const std::vector<RectBody> obstacles{{{3.2, 3.6}, {4.2, 4.6}}};
        bool violated = false;
        for (int t = 0; t < 200; ++t) {
          agents = step_agents(agents, obstacles, 1.0, cfg).agents;
          if (pair_gap(agents[0], agents[1]) < -1e-9) violated = true;
          for (const auto& a : agents)
            for (const auto& o : obstacles)
              if (point_rect_dist(a.position, o) - a.radius < -1e-9) violated = true;
        }
        CHECK_FALSE(violated);
        CHECK((agents[0].position - agents[0].goal).norm() <= 0.1);
        CHECK((agents[1].position - agents[1].goal).norm() <= 0.1);
      }
    }
  }
}
