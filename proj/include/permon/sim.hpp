#pragma once

#include <span>
#include <vector>

#include "permon/model.hpp"
#include "permon/trajectory.hpp"

namespace permon {

// Live state of the event-driven integration.
struct SimState {
  double t = 0.0;
  double s = 0.0;
  double u = 1.0;
  std::size_t next_switch = 0;
  std::vector<double> uncertainty;
  std::vector<PointMode> modes;
};

struct SimOptions {
  bool record_segments = true;
  bool record_events = true;
};

PointMode classify_mode(const SamplePoint& point, double s, double u,
                        double uncertainty, const MissionConfig& config);

// Initial state at t = 0: s = 0, control +1, queues at their initial values.
SimState initial_state(const MissionConfig& config);

// Earliest pending event from `state`: the next switching location, sensing
// boundary or mission end point ahead of the agent, the earliest queue
// reaching zero (closed-form quadratic root), or the horizon end. Requires
// modes consistent with the state.
Event next_event(const MissionConfig& config, const SwitchingSchedule& schedule,
                 const SimState& state, double t_end);

Trajectory simulate(const MissionConfig& config,
                    const SwitchingSchedule& schedule,
                    const SimOptions& options);
Trajectory simulate(const MissionConfig& config,
                    const SwitchingSchedule& schedule);

// Cost-only run, no segment or event recording.
double simulate_cost(const MissionConfig& config,
                     const SwitchingSchedule& schedule);

namespace detail {

// Shared event-driven core. Advances `state` until `t_end`, reflecting at the
// mission boundaries; consumes switching locations when `schedule` is set,
// otherwise keeps the control magnitude fixed (|u| <= 1, fractional allowed).
// Returns the un-normalized integral of total uncertainty over the span and
// updates `out` (switch bookkeeping, touch flags, optional segments/events).
struct EngineOptions {
  const SwitchingSchedule* schedule = nullptr;
  std::span<const double> inflow;  // per-point override; empty = base rates
  bool emit_horizon_end = true;
  SimOptions record;
};

double run_events(const MissionConfig& config, SimState& state, double t_end,
                  const EngineOptions& options, Trajectory& out);

}  // namespace detail
}  // namespace permon
