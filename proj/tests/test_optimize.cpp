#include <cmath>
#include <vector>

#include "doctest.h"
#include "permon/ipa.hpp"
#include "permon/optimize.hpp"
#include "permon/sim.hpp"
#include "support.hpp"

using namespace permon;
using testsupport::schedule;

TEST_CASE("feasibility projection clips per parity and clamps to the box") {
  const double L = 20.0;
  CHECK(clamp_feasible(schedule({12.0, 16.0, 4.0}), L).locations ==
        std::vector<double>{12.0, 12.0, 12.0});
  CHECK(clamp_feasible(schedule({12.0, -3.0, 25.0}), L).locations ==
        std::vector<double>{12.0, 0.0, 20.0});
  CHECK(clamp_feasible(schedule({12.0, 4.0, 16.0}), L).locations ==
        std::vector<double>{12.0, 4.0, 16.0});
  testsupport::Rng rng(17);
  for (int k = 0; k < 50; ++k) {
    SwitchingSchedule raw;
    const int n = rng.integer(1, 6);
    for (int j = 0; j < n; ++j) raw.locations.push_back(rng.uniform(-5.0, 25.0));
    CHECK(clamp_feasible(raw, L).feasible(L));
  }
}

TEST_CASE("direction projection") {
  const double L = 20.0;
  SUBCASE("interior point passes through") {
    const std::vector<double> g{0.3, -0.2};
    CHECK(project_direction(g, schedule({12.0, 4.0}), L) == g);
  }
  SUBCASE("active pair whose step would cross is averaged") {
    // lower turn equal to its predecessor; step re-orders iff g1 > g2
    const std::vector<double> g{1.0, -1.0};
    const auto projected = project_direction(g, schedule({12.0, 12.0}), L);
    CHECK(projected[0] == doctest::Approx(0.0));
    CHECK(projected[1] == doctest::Approx(0.0));
    // step in the feasible order passes through
    const std::vector<double> ok{-1.0, 1.0};
    CHECK(project_direction(ok, schedule({12.0, 12.0}), L) == ok);
  }
  SUBCASE("box faces zero outward components") {
    const auto at_top = project_direction({-0.5}, schedule({20.0}), L);
    CHECK(at_top[0] == 0.0);
    const auto at_bottom = project_direction({0.5, 0.7}, schedule({12.0, 0.0}), L);
    CHECK(at_bottom[1] == 0.0);
    CHECK(at_bottom[0] == doctest::Approx(0.5));
  }
}

TEST_CASE("armijo accepts the full step on an easy descent") {
  const MissionConfig config = testsupport::example1();
  const SwitchingSchedule theta = testsupport::example1_seed();
  const Trajectory trajectory = simulate(config, theta);
  const IpaResult ipa = ipa_gradient(config, theta, trajectory);
  const ArmijoSettings settings;
  const ArmijoResult result =
      armijo_step(config, theta, ipa.gradient, trajectory.cost, settings);
  CHECK_FALSE(result.stalled);
  CHECK(result.step > 0.0);
  CHECK(result.new_cost < trajectory.cost);
}

TEST_CASE("armijo reports a stall on a zero direction") {
  const MissionConfig config = testsupport::example1();
  const SwitchingSchedule theta = testsupport::example1_seed();
  const ArmijoResult result =
      armijo_step(config, theta, {0.0}, simulate_cost(config, theta), {});
  CHECK(result.stalled);
  CHECK(result.step == 0.0);
}

TEST_CASE("optimizer: descent is monotone and iterates stay feasible") {
  const MissionConfig config = testsupport::example1();
  OptimizerSettings settings;
  settings.max_iterations = 60;  // enough to exercise growth and descent
  const OptimizerReport report =
      optimize(config, testsupport::example1_seed(), settings);

  REQUIRE_FALSE(report.phases.empty());
  for (const PhaseTrace& phase : report.phases) {
    for (std::size_t k = 1; k < phase.cost_history.size(); ++k)
      CHECK(phase.cost_history[k] <= phase.cost_history[k - 1] + 1e-12);
  }
  CHECK(report.theta.feasible(config.length));
  CHECK(report.cost <= simulate_cost(config, testsupport::example1_seed()));
  // the one-switch phase reflects off the lower end, so the schedule grows
  CHECK(report.phases.size() >= 2);
  CHECK(report.phases[0].switch_count == 1);
  CHECK(report.phases[1].switch_count == 2);
  REQUIRE(report.growth_cost_delta.size() == report.phases.size() - 1);
  for (double delta : report.growth_cost_delta) CHECK(std::isfinite(delta));
}

TEST_CASE("appending a switch at a trailing final position leaves cost alone") {
  // with theta = [19] the agent ends at s = 2 still moving down, so a switch
  // appended there is consumed exactly at the horizon and changes nothing
  const MissionConfig config = testsupport::example1();
  const Trajectory base = simulate(config, schedule({19.0}));
  REQUIRE(base.s_end == doctest::Approx(2.0));
  REQUIRE(base.interior());
  const double grown = simulate_cost(config, schedule({19.0, base.s_end}));
  CHECK(std::abs(grown - base.cost) <= 1e-9);
}

TEST_CASE("optimizer honors a converged fixed point") {
  // tiny mission that converges quickly to an interior optimum
  MissionConfig config;
  config.length = 10.0;
  config.sensing_range = 3.0;
  config.service_rate = 2.0;
  config.horizon = 12.0;
  for (double position : {2.0, 5.0, 8.0}) {
    SamplePoint point;
    point.position = position;
    point.inflow_rate = 0.3;
    point.initial_uncertainty = 1.0;
    config.points.push_back(point);
  }
  OptimizerSettings settings;
  settings.grad_tolerance = 1e-7;
  settings.max_iterations = 4000;
  const OptimizerReport report = optimize(config, std::nullopt, settings);
  if (report.converged) {
    const Trajectory trajectory = simulate(config, report.theta);
    const IpaResult ipa = ipa_gradient(config, report.theta, trajectory);
    const std::vector<double> direction =
        project_direction(ipa.gradient, report.theta, config.length);
    double norm = 0.0;
    for (double d : direction) norm += d * d;
    CHECK(std::sqrt(norm) < settings.grad_tolerance);
  }
  CHECK(report.theta.feasible(config.length));
}

TEST_CASE("default seed alternates near the mission ends") {
  MissionConfig config = testsupport::example1();
  config.horizon = 50.0;  // floor(50 / 20) = 2 switches
  OptimizerSettings settings;
  settings.max_iterations = 0;  // seed only
  settings.max_growth = 0;
  const OptimizerReport report = optimize(config, std::nullopt, settings);
  REQUIRE(report.phases[0].switch_count == 2);
  CHECK(report.theta.locations[0] == doctest::Approx(18.0));
  CHECK(report.theta.locations[1] == doctest::Approx(2.0));
}
