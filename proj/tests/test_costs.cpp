#include <catch2/catch_amalgamated.hpp>
#include <imleplan/costs.hpp>
#include <imleplan/rng.hpp>

#include <cmath>

using namespace imleplan;

namespace {

Forecast static_obstacle(double x, double y, int steps, double dt = 0.4) {
  Scene sc;
  sc.dt = dt;
  sc.obstacles.push_back({x, y, 0.0, 0.0});
  return constant_velocity_forecast(sc, steps);
}

Trajectory path(std::initializer_list<std::array<double, 2>> pts, double dt = 0.4) {
  Trajectory t = make_trajectory(static_cast<int>(pts.size()), 2, 0, dt);
  int k = 0;
  for (const auto& p : pts) {
    t.at(k, 0) = p[0];
    t.at(k, 1) = p[1];
    ++k;
  }
  return t;
}

}  // namespace

TEST_CASE("barrier penalty charges squared-clearance deficit") {
  // first step 0.3 m from a static obstacle with radius 0.5: h = 0.09 - 0.25
  const Trajectory t = path({{0.3, 0.0}, {1.0, 0.0}});
  const Forecast f = static_obstacle(0.0, 0.0, 2);
  REQUIRE(cbf_penalty(t, f, 0.5, 0.2) == Catch::Approx(0.16).margin(1e-12));

  // both steps clear and non-approaching: exactly zero
  const Trajectory safe = path({{5.0, 5.0}, {5.0, 5.0}});
  REQUIRE(cbf_penalty(safe, f, 0.5, 0.2) == 0.0);
}

TEST_CASE("barrier decay hinge fires on too-fast approach even without contact") {
  // h drops from 3.75 to 0.75 in one step; allowed floor is 0.8 * 3.75 = 3.0
  const Trajectory t = path({{2.0, 0.0}, {1.0, 0.0}});
  const Forecast f = static_obstacle(0.0, 0.0, 2);
  REQUIRE(cbf_penalty(t, f, 0.5, 0.2) == Catch::Approx(3.0 - 0.75).margin(1e-12));
}

TEST_CASE("barrier penalty sums over obstacles and checks the forecast span") {
  const Trajectory t = path({{0.3, 0.0}, {0.3, 0.0}});
  Scene sc;
  sc.dt = 0.4;
  sc.obstacles.push_back({0.0, 0.0, 0.0, 0.0});
  sc.obstacles.push_back({0.6, 0.0, 0.0, 0.0});
  const Forecast both = constant_velocity_forecast(sc, 2);
  const Forecast first_only = static_obstacle(0.0, 0.0, 2);
  const Forecast second_only = static_obstacle(0.6, 0.0, 2);
  REQUIRE(cbf_penalty(t, both, 0.5, 0.2) ==
          Catch::Approx(cbf_penalty(t, first_only, 0.5, 0.2) + cbf_penalty(t, second_only, 0.5, 0.2)).margin(1e-12));

  const Forecast shorter = static_obstacle(0.0, 0.0, 1);
  REQUIRE_THROWS_AS(cbf_penalty(t, shorter, 0.5, 0.2), DimensionError);
  Forecast none;
  REQUIRE(cbf_penalty(t, none, 0.5, 0.2) == 0.0);  // no obstacles, span irrelevant
}

TEST_CASE("goal-progress cost is terminal value plus hinged increases") {
  // squared goal distances 4, 1, 9 -> 9 + hinge(-3) + hinge(8) = 17
  const Trajectory t = path({{2.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}});
  REQUIRE(clf_cost(t, 0.0, 0.0) == 17.0);

  // monotone descent pays only the terminal term
  const Trajectory down = path({{3.0, 0.0}, {2.0, 0.0}, {1.0, 0.0}});
  REQUIRE(clf_cost(down, 0.0, 0.0) == 1.0);
}

TEST_CASE("deviation penalty compares against the shifted previous plan") {
  const Trajectory prev = path({{9.0, 9.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}});
  const Trajectory now = path({{2.0, 0.0}, {2.0, 2.0}, {6.0, 0.0}});
  // offsets (1,0), (0,2), (3,0) against prev steps 1..3, discount 0.5
  REQUIRE(deviation_penalty(now, prev, 0.5) == 1.0 + 0.5 * 4.0 + 0.25 * 9.0);

  // perfect follow-through costs nothing
  const Trajectory follow = path({{1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}});
  REQUIRE(deviation_penalty(follow, prev, 0.5) == 0.0);
}

TEST_CASE("total cost blends the three terms with configured weights") {
  CostConfig cfg;
  cfg.cbf_weight = 10.0;
  cfg.clf_weight = 1.0;
  cfg.deviation_weight = 0.2;
  const Trajectory t = path({{0.3, 0.0}, {1.0, 0.0}, {2.0, 0.0}});
  const Trajectory prev = path({{0.0, 0.0}, {0.5, 0.5}, {1.5, 0.0}, {2.5, 0.0}});
  const Forecast f = static_obstacle(0.0, 0.0, 3);
  const CostBreakdown b = total_cost(t, f, 8.0, 0.0, cfg, &prev);
  REQUIRE(b.cbf == cbf_penalty(t, f, cfg.safety_radius, cfg.barrier_alpha));
  REQUIRE(b.clf == clf_cost(t, 8.0, 0.0));
  REQUIRE(b.deviation == deviation_penalty(t, prev, cfg.deviation_discount));
  REQUIRE(b.total == 10.0 * b.cbf + 1.0 * b.clf + 0.2 * b.deviation);
  REQUIRE(b.cbf > 0.0);
  REQUIRE(b.deviation > 0.0);
}

TEST_CASE("cost gradient matches central differences with every term active") {
  Rng rng(77);
  CostConfig cfg;
  const int H = 6;
  Trajectory t = make_trajectory(H, 2, 0, 0.4);
  Trajectory prev = make_trajectory(H, 2, 0, 0.4);
  for (int k = 0; k < H; ++k) {
    t.at(k, 0) = 0.2 * k + 0.3 * rng.gaussian();
    t.at(k, 1) = 0.3 * rng.gaussian();
    prev.at(k, 0) = 0.2 * k + 0.3 * rng.gaussian();
    prev.at(k, 1) = 0.3 * rng.gaussian();
  }
  const Forecast f = static_obstacle(0.6, 0.1, H);
  const auto g = cost_gradient(t, f, 2.0, 0.0, cfg, &prev);
  REQUIRE(g.size() == static_cast<std::size_t>(H) * 2);

  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < H; ++k)
    for (int d = 0; d < 2; ++d) {
      Trajectory hi = t, lo = t;
      hi.at(k, d) += h;
      lo.at(k, d) -= h;
      const double fd =
          (total_cost(hi, f, 2.0, 0.0, cfg, &prev).total - total_cost(lo, f, 2.0, 0.0, cfg, &prev).total) / (2 * h);
      const double got = g[static_cast<std::size_t>(k * 2 + d)];
      const double rel = std::abs(fd - got) / std::max(std::abs(fd) + std::abs(got), 1e-6);
      worst = std::max(worst, rel);
    }
  REQUIRE(worst < 1e-4);
}

TEST_CASE("gradient is exactly zero when nothing is active") {
  CostConfig cfg;
  cfg.clf_weight = 0.0;
  cfg.deviation_weight = 0.0;
  const Trajectory far = path({{40.0, 40.0}, {40.0, 40.0}, {40.0, 40.0}});
  const Forecast f = static_obstacle(0.0, 0.0, 3);
  for (double v : cost_gradient(far, f, 0.0, 0.0, cfg)) REQUIRE(v == 0.0);
}

TEST_CASE("cost config validation bounds every knob") {
  CostConfig cfg;
  REQUIRE_NOTHROW(validate_cost_config(cfg));
  cfg.safety_radius = 0.0;
  REQUIRE_THROWS_AS(validate_cost_config(cfg), ConfigError);
  cfg = {};
  cfg.barrier_alpha = 0.0;
  REQUIRE_THROWS_AS(validate_cost_config(cfg), ConfigError);
  cfg = {};
  cfg.barrier_alpha = 1.5;
  REQUIRE_THROWS_AS(validate_cost_config(cfg), ConfigError);
  cfg = {};
  cfg.deviation_discount = 0.0;
  REQUIRE_THROWS_AS(validate_cost_config(cfg), ConfigError);
  cfg = {};
  cfg.cbf_weight = -1.0;
  REQUIRE_THROWS_AS(validate_cost_config(cfg), ConfigError);
}

TEST_CASE("dimension guards on degenerate inputs") {
  Trajectory one_d = make_trajectory(3, 1, 0, 0.4);
  const Forecast f = static_obstacle(0.0, 0.0, 3);
  REQUIRE_THROWS_AS(cbf_penalty(one_d, f, 0.5, 0.2), DimensionError);
  REQUIRE_THROWS_AS(clf_cost(one_d, 0.0, 0.0), DimensionError);
  const Trajectory ok = path({{0, 0}, {1, 0}, {2, 0}});
  REQUIRE_THROWS_AS(deviation_penalty(ok, one_d, 0.9), DimensionError);
}
