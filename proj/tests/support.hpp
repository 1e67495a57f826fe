#pragma once

// Shared fixtures and oracles for the test suites: the two reference mission
// configs, random mission/schedule generators, and a dense fixed-step
// integrator used as an independent check on the event-driven simulator.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "permon/model.hpp"
#include "permon/sim.hpp"

namespace testsupport {

inline permon::MissionConfig example1() {
  return permon::MissionConfig::uniform_grid(20.0, 4.0, 3.0, 36.0, 21, 0.01, 2.0);
}

inline permon::MissionConfig example2() {
  return permon::MissionConfig::uniform_grid(100.0, 4.0, 3.0, 980.0, 101, 0.01, 2.0);
}

inline permon::SwitchingSchedule schedule(std::initializer_list<double> values) {
  permon::SwitchingSchedule out;
  out.locations = values;
  return out;
}

// Reference switching vectors, stored as the turning points are consumed
// (upper and lower turns alternating).
inline permon::SwitchingSchedule example1_seed() { return schedule({12.0}); }
inline permon::SwitchingSchedule example1_three_switch_seed() {
  return schedule({12.0, 4.0, 16.0});
}
inline permon::SwitchingSchedule example1_reference_optimum() {
  return schedule({17.81, 1.29});
}
inline permon::SwitchingSchedule example2_seed() {
  return schedule({95.0, 5.0, 95.0, 5.0, 95.0, 5.0, 95.0, 5.0, 95.0});
}
inline permon::SwitchingSchedule example2_reference_optimum() {
  return schedule({98.03, 2.94, 96.97, 3.21, 96.65, 3.61, 96.35, 4.08, 95.70, 4.57});
}

struct Rng {
  std::mt19937_64 engine;

  explicit Rng(unsigned seed) : engine(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine);
  }
};

inline permon::MissionConfig random_config(Rng& rng, int max_points = 7) {
  permon::MissionConfig config;
  config.length = rng.uniform(6.0, 25.0);
  config.sensing_range = rng.uniform(0.8, 0.45 * config.length);
  config.service_rate = rng.uniform(0.8, 4.0);
  config.horizon = rng.uniform(0.8 * config.length, 2.5 * config.length);
  const int count = rng.integer(1, max_points);
  std::vector<double> positions(count);
  for (double& p : positions) p = rng.uniform(0.0, config.length);
  std::sort(positions.begin(), positions.end());
  for (double p : positions) {
    permon::SamplePoint point;
    point.position = p;
    point.inflow_rate = rng.uniform(0.05, 0.7) * config.service_rate;
    point.initial_uncertainty = rng.uniform(0.0, 1.0) < 0.2 ? 0.0 : rng.uniform(0.1, 3.0);
    config.points.push_back(point);
  }
  config.validate();
  return config;
}

inline permon::SwitchingSchedule random_schedule(Rng& rng,
                                                 const permon::MissionConfig& config,
                                                 int max_switches = 4) {
  const int n = rng.integer(1, max_switches);
  permon::SwitchingSchedule out;
  out.locations.push_back(rng.uniform(0.3 * config.length, 0.95 * config.length));
  for (int j = 1; j < n; ++j) {
    if (j % 2 == 1)
      out.locations.push_back(rng.uniform(0.02 * config.length, out.locations.back()));
    else
      out.locations.push_back(rng.uniform(out.locations.back(), 0.98 * config.length));
  }
  return out;
}

// Dense forward-Euler integration of the same closed loop; trapezoidal cost.
// Independent of the event-driven machinery.
inline double euler_cost(const permon::MissionConfig& config,
                         const permon::SwitchingSchedule& schedule,
                         double dt) {
  const std::size_t m = config.point_count();
  std::vector<double> uncertainty(m);
  for (std::size_t i = 0; i < m; ++i)
    uncertainty[i] = config.points[i].initial_uncertainty;
  double s = 0.0, u = 1.0, t = 0.0, integral = 0.0;
  std::size_t next = 0;
  while (t < config.horizon - 1e-15) {
    const double h = std::min(dt, config.horizon - t);
    while (next < schedule.size()) {
      const double target = schedule.locations[next];
      const bool reached = u > 0.0 ? s >= target - 1e-12 : s <= target + 1e-12;
      if (!reached) break;
      u = -u;
      ++next;
    }
    if (next >= schedule.size()) {
      if (s <= 0.0 && u < 0.0) u = 1.0;
      if (s >= config.length && u > 0.0) u = -1.0;
    }
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      before += uncertainty[i];
      const double p = permon::detection_probability(config.points[i].position, s,
                                                     config.sensing_range);
      const double rate = permon::uncertainty_rate(
          uncertainty[i], p, config.points[i].inflow_rate, config.service_rate);
      uncertainty[i] = std::max(0.0, uncertainty[i] + h * rate);
      after += uncertainty[i];
    }
    integral += 0.5 * h * (before + after);
    s += u * h;
    s = std::clamp(s, 0.0, config.length);
    t += h;
  }
  return integral / config.horizon;
}

}  // namespace testsupport
