#pragma once

#include <optional>
#include <string>
#include <vector>

#include "permon/model.hpp"
#include "permon/trajectory.hpp"

namespace permon {

struct ArmijoSettings {
  double initial_step = 1.0;
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backtracks = 40;
};

struct OptimizerSettings {
  double grad_tolerance = 2e-10;  // stop when the projected gradient norm drops below
  int max_iterations = 1000;      // per phase
  ArmijoSettings armijo;
  int max_growth = 8;  // cap on schedule extensions
};

struct PhaseTrace {
  int switch_count = 0;
  std::vector<double> cost_history;  // cost at phase start plus one entry per accepted step
  double grad_norm = 0.0;            // projected gradient norm at phase exit
  bool converged = false;            // grad_norm fell below the tolerance
  bool stalled = false;              // no acceptable step within the backtrack budget
};

struct OptimizerReport {
  SwitchingSchedule theta;
  double cost = 0.0;
  std::vector<PhaseTrace> phases;
  bool converged = false;
  bool boundary_free = false;  // final trajectory avoids 0 and length for t > 0
  double grad_norm = 0.0;
  std::vector<double> growth_cost_delta;  // |cost change| at each schedule extension
  std::vector<std::string> warnings;

  int iterations_total() const;
  std::vector<double> cost_history_flat() const;
};

// Clip each location against its predecessor per turn parity, then clamp to
// the mission interval. Always lands on a feasible schedule.
SwitchingSchedule clamp_feasible(SwitchingSchedule schedule, double length);

// Project the gradient so a small step along the negative direction keeps the
// schedule feasible: averages the components of active equal-location pairs
// whose step would re-order them, zeroes box-active components that point
// outward. Returns a feasible descent direction (possibly zero).
std::vector<double> project_direction(const std::vector<double>& gradient,
                                      const SwitchingSchedule& schedule,
                                      double length);

struct ArmijoResult {
  double step = 0.0;
  double new_cost = 0.0;
  bool stalled = true;
  SwitchingSchedule theta;
};

// Largest step initial_step * backtrack^m satisfying the sufficient-decrease
// test on the projected trial point.
ArmijoResult armijo_step(const MissionConfig& config,
                         const SwitchingSchedule& theta,
                         const std::vector<double>& direction,
                         double current_cost, const ArmijoSettings& settings);

// Projected gradient descent over the switching locations with Armijo step
// sizes. Starts from `seed` or from an alternating default with
// max(1, floor(horizon / length)) entries; after each phase, if the
// trajectory touched a mission end point, appends a switch at the final
// position and re-optimizes, up to max_growth extensions.
OptimizerReport optimize(const MissionConfig& config,
                         const std::optional<SwitchingSchedule>& seed,
                         const OptimizerSettings& settings = {});

}  // namespace permon
