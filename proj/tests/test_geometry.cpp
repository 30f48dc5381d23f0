#include <random>

#include "doctest.h"
#include "envopt/geometry.hpp"
#include "envopt/json_io.hpp"

using namespace envopt;

namespace {

// Monte-Carlo union-area oracle over the bodies' bounding box.
double mc_union_area(const std::vector<Body>& bodies, int samples, std::uint64_t seed) {
  if (bodies.empty()) return 0.0;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& b : bodies) {
    if (const auto* r = std::get_if<RectBody>(&b)) {
      x0 = std::min(x0, r->min_corner.x);
      y0 = std::min(y0, r->min_corner.y);
      x1 = std::max(x1, r->max_corner.x);
      y1 = std::max(y1, r->max_corner.y);
    } else {
      const auto& d = std::get<DiskBody>(b);
      x0 = std::min(x0, d.center.x - d.radius);
      y0 = std::min(y0, d.center.y - d.radius);
      x1 = std::max(x1, d.center.x + d.radius);
      y1 = std::max(y1, d.center.y + d.radius);
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  int hits = 0;
  for (int k = 0; k < samples; ++k) {
    const Vec2 p{ux(rng), uy(rng)};
    for (const auto& b : bodies) {
      const bool inside =
          std::holds_alternative<RectBody>(b)
              ? std::get<RectBody>(b).contains(p)
              : (p - std::get<DiskBody>(b).center).norm() <= std::get<DiskBody>(b).radius;
      if (inside) {
        ++hits;
        break;
      }
    }
  }
  return (double)hits / samples * (x1 - x0) * (y1 - y0);
}

RectBody unit_square(double x, double y) { return {{x, y}, {x + 1.0, y + 1.0}}; }

}  // namespace

TEST_CASE("dist: disk/disk") {
  CHECK(dist(DiskBody{{0, 0}, 1}, DiskBody{{3, 0}, 1}) == doctest::Approx(1.0));
  CHECK(dist(DiskBody{{0, 0}, 1}, DiskBody{{1, 0}, 1}) == 0.0);
}

TEST_CASE("dist: disk/rect axis-aligned gap") {
  CHECK(dist(DiskBody{{0, 0}, 0.5}, RectBody{{2, -1}, {3, 1}}) == doctest::Approx(1.5));
}

TEST_CASE("dist: rect/rect") {
  CHECK(dist(RectBody{{0, 0}, {1, 1}}, RectBody{{2, 0}, {3, 1}}) == doctest::Approx(1.0));
  CHECK(dist(RectBody{{0, 0}, {2, 2}}, RectBody{{1, 1}, {3, 3}}) == 0.0);
  // Diagonal gap.
  CHECK(dist(RectBody{{0, 0}, {1, 1}}, RectBody{{2, 2}, {3, 3}}) ==
        doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("dist: symmetry and translation invariance over random bodies") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0), ur(0.1, 2.0);
  for (int k = 0; k < 300; ++k) {
    auto rand_body = [&]() -> Body {
      if (rng() & 1) return DiskBody{{u(rng), u(rng)}, ur(rng)};
      const Vec2 c{u(rng), u(rng)};
      return RectBody{c, c + Vec2{ur(rng), ur(rng)}};
    };
    const Body a = rand_body();
    const Body b = rand_body();
    CHECK(dist(a, b) == dist(b, a));
    const Vec2 shift{u(rng), u(rng)};
    auto translated = [&shift](const Body& body) -> Body {
      if (const auto* d = std::get_if<DiskBody>(&body))
        return DiskBody{d->center + shift, d->radius};
      const auto& r = std::get<RectBody>(body);
      return r.translated(shift);
    };
    // Exact invariance does not survive floating point for arbitrary shifts;
    // pairwise differences do (they cancel), so allow only tiny error.
    CHECK(dist(translated(a), translated(b)) == doctest::Approx(dist(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("region_area: basic cases") {
  CHECK(region_area(std::vector<Body>{}) == 0.0);
  CHECK(region_area(std::vector<Body>{unit_square(0, 0), unit_square(3, 0)}) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // Two identical unit squares count once (expected value from the
  // Monte-Carlo union oracle).
  const std::vector<Body> twice{unit_square(0, 0), unit_square(0, 0)};
  CHECK(region_area(twice) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mc_union_area(twice, 1000000, 5) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("region_area: disk matches analytic area") {
  const std::vector<Body> disk{DiskBody{{0.3, -0.2}, 1.7}};
  CHECK(region_area(disk) == doctest::Approx(M_PI * 1.7 * 1.7).epsilon(1e-12));
}

TEST_CASE("region_area: disjoint bodies sum exactly") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-20.0, 20.0), ur(0.2, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Body> bodies;
    double expected = 0.0;
    for (int k = 0; k < 8; ++k) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        Body b;
        if (rng() & 1) {
          const DiskBody d{{u(rng), u(rng)}, ur(rng)};
          b = d;
        } else {
          const Vec2 c{u(rng), u(rng)};
          b = RectBody{c, c + Vec2{ur(rng), ur(rng)}};
        }
        bool disjoint = true;
        for (const auto& other : bodies)
          if (dist(b, other) <= 1e-6) disjoint = false;
        if (disjoint) {
          bodies.push_back(b);
          expected += std::holds_alternative<DiskBody>(b) ? std::get<DiskBody>(b).area()
                                                          : std::get<RectBody>(b).area();
          break;
        }
      }
    }
    CHECK(region_area(bodies) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("region_area: overlapping mixed bodies match Monte-Carlo oracle") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ur(0.3, 1.2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Body> bodies;
    for (int k = 0; k < 5; ++k) {
      if (rng() & 1) {
        bodies.push_back(DiskBody{{u(rng), u(rng)}, ur(rng)});
      } else {
        const Vec2 c{u(rng), u(rng)};
        bodies.push_back(RectBody{c, c + Vec2{ur(rng), ur(rng)}});
      }
    }
    const double mc = mc_union_area(bodies, 400000, 1000 + trial);
    const double exact = region_area(bodies);
    CHECK(exact == doctest::Approx(mc).epsilon(2e-2));
  }
}

TEST_CASE("collision_free_path: straight segment in empty layout") {
  EnvironmentLayout layout;
  layout.bounds = {{0, 0}, {8, 8}};
  const std::vector<Vec2> path{{1, 1}, {7, 7}};
  CHECK(collision_free_path(path, 0.3, layout));
}

TEST_CASE("collision_free_path: segment through an obstacle") {
  EnvironmentLayout layout;
  layout.bounds = {{0, 0}, {8, 8}};
  layout.obstacles.push_back({{3, 3}, {4, 4}});
  const std::vector<Vec2> through{{1, 3.5}, {7, 3.5}};
  CHECK_FALSE(collision_free_path(through, 0.3, layout));
}

TEST_CASE("collision_free_path: grazing contact at exactly the radius is free") {
  EnvironmentLayout layout;
  layout.bounds = {{0, 0}, {8, 8}};
  layout.obstacles.push_back({{3, 3}, {4, 4}});
  // Horizontal line passing exactly 0.25 below the obstacle edge y=3
  // (binary-exact offsets keep the contact distance exact).
  const std::vector<Vec2> graze{{1.0, 2.75}, {7.0, 2.75}};
  CHECK(collision_free_path(graze, 0.25, layout));
  // Dense-sampling oracle agrees under the closed condition.
  bool sampled_free = true;
  for (int k = 0; k <= 10000; ++k) {
    const double t = k / 10000.0;
    const Vec2 p = graze[0] + (graze[1] - graze[0]) * t;
    if (point_rect_dist(p, layout.obstacles[0]) < 0.25) sampled_free = false;
  }
  CHECK(sampled_free);
  // A hair closer is not free.
  const std::vector<Vec2> closer{{1.0, 2.7501}, {7.0, 2.7501}};
  CHECK_FALSE(collision_free_path(closer, 0.25, layout));
}

TEST_CASE("collision_free_path: bounds containment and radius monotonicity") {
  EnvironmentLayout layout;
  layout.bounds = {{0, 0}, {8, 8}};
  layout.obstacles.push_back({{2, 2}, {3, 6}});
  const std::vector<Vec2> outside{{0.1, 0.1}, {7, 7}};
  CHECK_FALSE(collision_free_path(outside, 0.3, layout));

  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.5, 7.5), urad(0.05, 0.6);
  for (int k = 0; k < 200; ++k) {
    const std::vector<Vec2> path{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const double r = urad(rng);
    if (collision_free_path(path, r, layout)) {
      CHECK(collision_free_path(path, r * 0.5, layout));
      CHECK(collision_free_path(path, 0.0, layout));
    }
  }
}

TEST_CASE("layout JSON round trip preserves geometry") {
  EnvironmentLayout layout;
  layout.bounds = {{0, 0}, {8, 8}};
  layout.starts = {{{1.5, 1.5}, 0.3}, {{1.5, 6.5}, 0.3}};
  layout.goals = {{{6.5, 6.5}, 0.3}, {{6.5, 1.5}, 0.3}};
  layout.obstacles = {{{3, 3}, {4, 4}}, {{5, 2}, {6, 3}}};
  const std::string text = layout_to_json(layout);
  // Field order is pinned.
  CHECK(text.find("\"bounds\"") < text.find("\"starts\""));
  CHECK(text.find("\"starts\"") < text.find("\"goals\""));
  CHECK(text.find("\"goals\"") < text.find("\"obstacles\""));
  const EnvironmentLayout back = layout_from_json(text);
  CHECK(back.bounds.max_corner.x == 8.0);
  REQUIRE(back.starts.size() == 2);
  CHECK(back.starts[1].center.y == 6.5);
  REQUIRE(back.obstacles.size() == 2);
  CHECK(back.obstacles[1].min_corner.x == 5.0);
  CHECK_NOTHROW(back.validate());
}

TEST_CASE("layout validate rejects broken invariants") {
  EnvironmentLayout layout;
  layout.bounds = {{0, 0}, {8, 8}};
  layout.starts = {{{1, 1}, 0.3}};
  layout.goals = {{{7, 7}, 0.3}};
  layout.obstacles = {{{3, 3}, {4, 4}}};
  CHECK_NOTHROW(layout.validate());
  SUBCASE("body outside bounds") {
    layout.obstacles.push_back({{7.5, 7.5}, {9, 9}});
    CHECK_THROWS_AS(layout.validate(), std::invalid_argument);
  }
  SUBCASE("start overlapping obstacle") {
    layout.starts.push_back({{3.5, 3.5}, 0.3});
    CHECK_THROWS_AS(layout.validate(), std::invalid_argument);
  }
  SUBCASE("start overlapping goal") {
    layout.starts.push_back({{7.0, 7.1}, 0.3});
    CHECK_THROWS_AS(layout.validate(), std::invalid_argument);
  }
}
