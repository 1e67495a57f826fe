#pragma once

#include <span>
#include <vector>

#include "permon/model.hpp"
#include "permon/trajectory.hpp"

namespace permon {

enum class ControlSearch {
  Binary,      // u in {-1, +1}
  Continuous,  // grid over [-1, 1] refined by golden-section
};

struct RhSettings {
  double planning_horizon = 0.0;  // window length; defaulted when <= 0
  double action_horizon = 0.0;    // application interval; defaulted when <= 0
  ControlSearch search = ControlSearch::Binary;
  int grid_points = 41;

  // planning_horizon = min(2 * sensing_range, horizon), action = half of it.
  static RhSettings defaults(const MissionConfig& config);
  RhSettings resolved(const MissionConfig& config) const;
  void validate(const MissionConfig& config) const;
};

// Integral of total uncertainty over [t_now, t_now + duration] under a
// constant control, reflecting at the mission end points. Shares the
// event-driven core with the full simulator; honors per-point inflow
// schedules.
double window_cost(const MissionConfig& config, double t_now, double s_now,
                   std::span<const double> uncertainty, double u,
                   double duration);

// Constant control minimizing the window cost over the planning horizon
// (clamped to the remaining mission time). Near-ties resolve to the larger
// control.
double rh_step(const MissionConfig& config, double t_now, double s_now,
               std::span<const double> uncertainty, const RhSettings& settings);

struct RhResult {
  Trajectory trajectory;  // realized closed loop, cost per the mission horizon
  std::vector<double> control_times;
  std::vector<double> controls;
};

// Closed loop: every action interval, pick the best constant control for the
// planning window and apply it.
RhResult rh_run(const MissionConfig& config, const RhSettings& settings = {});

}  // namespace permon
