#include "permon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace permon {
namespace {

constexpr double kTimeTolScale = 1e-12;
constexpr double kUncertaintyTolScale = 1e-12;
constexpr double kRateTolScale = 1e-12;
constexpr double kTouchTolScale = 1e-6;
constexpr double kGrazeTol = 1e-10;

// Sensing boundaries of one point, ordered left to right. `drain_*` bracket
// the band where the net rate is negative; boundary ids are 0..4.
struct Criticals {
  double far_left, drain_left, center, drain_right, far_right;

  double by_id(int id) const {
    switch (id) {
      case 0: return far_left;
      case 1: return drain_left;
      case 2: return center;
      case 3: return drain_right;
      default: return far_right;
    }
  }
};

Criticals criticals_for(const SamplePoint& point, double range, double service,
                        double inflow) {
  const double drain_half = range * (1.0 - inflow / service);
  return {point.position - range, point.position - drain_half, point.position,
          point.position + drain_half, point.position + range};
}

double probability_slope(ModeRegion region, double range) {
  switch (mode_class(region)) {
    case ModeClass::InRangeLeft: return 1.0 / range;
    case ModeClass::InRangeRight: return -1.0 / range;
    default: return 0.0;
  }
}

// A location exactly on a boundary is assigned to the region in the travel
// direction (rightward for a stationary control).
ModeRegion geometric_region(const Criticals& c, double s, double direction) {
  if (direction >= 0.0) {
    if (s < c.far_left) return ModeRegion::FarLeft;
    if (s < c.drain_left) return ModeRegion::NearLeftRising;
    if (s < c.center) return ModeRegion::NearLeftFalling;
    if (s < c.drain_right) return ModeRegion::NearRightFalling;
    if (s < c.far_right) return ModeRegion::NearRightRising;
    return ModeRegion::FarRight;
  }
  if (s <= c.far_left) return ModeRegion::FarLeft;
  if (s <= c.drain_left) return ModeRegion::NearLeftRising;
  if (s <= c.center) return ModeRegion::NearLeftFalling;
  if (s <= c.drain_right) return ModeRegion::NearRightFalling;
  if (s <= c.far_right) return ModeRegion::NearRightRising;
  return ModeRegion::FarRight;
}

PointMode classify(const SamplePoint& point, double s, double u,
                   double uncertainty, const MissionConfig& config,
                   double inflow) {
  const Criticals c =
      criticals_for(point, config.sensing_range, config.service_rate, inflow);
  ModeRegion region = geometric_region(c, s, u);
  if (uncertainty == 0.0) {
    const double p = detection_probability(point.position, s, config.sensing_range);
    const double rate = inflow - config.service_rate * p;
    const double tol = kRateTolScale * std::max(1.0, config.service_rate);
    bool pinned = rate < -tol;
    if (!pinned && std::abs(rate) <= tol) {
      // On the drain boundary the rate is zero; pin only if it is about to
      // fall (or the agent is stationary).
      const double rate_slope =
          -config.service_rate * probability_slope(region, config.sensing_range) * u;
      pinned = rate_slope <= 0.0;
    }
    if (pinned) region = ModeRegion::EmptyDwell;
  }
  return {u < 0.0 ? -1 : 1, region};
}

struct RateCoeffs {
  double rate = 0.0;   // dR/dt at the segment start
  double accel = 0.0;  // half the rate's time derivative
};

RateCoeffs coeffs_for(const SamplePoint& point, ModeRegion region, double s,
                      double u, const MissionConfig& config, double inflow) {
  switch (mode_class(region)) {
    case ModeClass::Pinned: return {0.0, 0.0};
    case ModeClass::OutOfRange: return {inflow, 0.0};
    default: break;
  }
  const double p = detection_probability(point.position, s, config.sensing_range);
  const double slope = probability_slope(region, config.sensing_range);
  return {inflow - config.service_rate * p, -0.5 * config.service_rate * slope * u};
}

// Next sensing boundary ahead of the agent given the point's current region;
// none when the point only recedes. Dwelling points report only their exit
// boundary (interior crossings leave the mode unchanged).
std::optional<int> crossing_boundary_id(ModeRegion region, double direction) {
  if (direction > 0.0) {
    switch (region) {
      case ModeRegion::FarLeft: return 0;
      case ModeRegion::NearLeftRising: return 1;
      case ModeRegion::NearLeftFalling: return 2;
      case ModeRegion::NearRightFalling: return 3;
      case ModeRegion::NearRightRising: return 4;
      case ModeRegion::EmptyDwell: return 3;
      default: return std::nullopt;
    }
  }
  if (direction < 0.0) {
    switch (region) {
      case ModeRegion::FarRight: return 4;
      case ModeRegion::NearRightRising: return 3;
      case ModeRegion::NearRightFalling: return 2;
      case ModeRegion::NearLeftFalling: return 1;
      case ModeRegion::NearLeftRising: return 0;
      case ModeRegion::EmptyDwell: return 1;
      default: return std::nullopt;
    }
  }
  return std::nullopt;
}

// Earliest root of value + rate*x + accel*x^2 in (0, limit]; value > 0.
// Flags a vanishing discriminant (tangential contact with zero).
std::optional<double> earliest_root(double value, double rate, double accel,
                                    double limit, bool* grazing) {
  if (std::abs(accel) < 1e-14 * std::max(1.0, std::abs(rate))) {
    if (rate >= 0.0) return std::nullopt;
    const double x = -value / rate;
    return x <= limit ? std::optional<double>(x) : std::nullopt;
  }
  const double disc = rate * rate - 4.0 * accel * value;
  if (disc < 0.0) return std::nullopt;
  if (grazing && disc < kGrazeTol * std::max(1.0, rate * rate)) *grazing = true;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (rate + std::copysign(sq, rate));
  double lo = q / accel;
  double hi = q != 0.0 ? value / q : std::numeric_limits<double>::infinity();
  if (lo > hi) std::swap(lo, hi);
  if (lo > 0.0 && lo <= limit) return lo;
  if (hi > 0.0 && hi <= limit) return hi;
  return std::nullopt;
}

struct Candidate {
  double time = 0.0;
  EventKind kind = EventKind::HorizonEnd;
  int index = 0;
  int detail = 0;
  double snap_position = std::numeric_limits<double>::quiet_NaN();
  bool grazing = false;
};

struct Workspace {
  std::vector<RateCoeffs> coeffs;
  std::vector<Candidate> candidates;
  std::vector<Candidate> cluster;
  std::vector<double> snap_tol;
};

double effective_inflow(const MissionConfig& config,
                        std::span<const double> inflow, std::size_t i) {
  return inflow.empty() ? config.points[i].inflow_rate : inflow[i];
}

void collect_candidates(const MissionConfig& config, const SimState& state,
                        double t_end, const detail::EngineOptions& options,
                        Workspace& ws) {
  const double time_tol = kTimeTolScale * std::max(1.0, config.horizon);
  const double remaining = t_end - state.t;
  ws.candidates.clear();
  ws.candidates.push_back({t_end, EventKind::HorizonEnd, 0, 0,
                           std::numeric_limits<double>::quiet_NaN(), false});
  const SwitchingSchedule* schedule = options.schedule;
  if (schedule && state.next_switch < schedule->size() && state.u != 0.0) {
    const double target = schedule->locations[state.next_switch];
    const double dt = std::max(0.0, (target - state.s) / state.u);
    if (dt <= remaining + time_tol)
      ws.candidates.push_back({state.t + dt, EventKind::SwitchingPoint,
                               static_cast<int>(state.next_switch), 0, target, false});
  }
  if (state.u > 0.0) {
    const double dt = std::max(0.0, (config.length - state.s) / state.u);
    if (dt <= remaining + time_tol)
      ws.candidates.push_back(
          {state.t + dt, EventKind::BoundaryReflect, 1, 0, config.length, false});
  } else if (state.u < 0.0) {
    const double dt = std::max(0.0, state.s / -state.u);
    if (dt <= remaining + time_tol)
      ws.candidates.push_back({state.t + dt, EventKind::BoundaryReflect, 0, 0, 0.0, false});
  }
  for (std::size_t i = 0; i < config.point_count(); ++i) {
    const SamplePoint& point = config.points[i];
    const ModeRegion region = state.modes[i].region;
    if (state.u != 0.0) {
      if (auto id = crossing_boundary_id(region, state.u)) {
        const Criticals c = criticals_for(point, config.sensing_range,
                                          config.service_rate,
                                          effective_inflow(config, options.inflow, i));
        const double target = c.by_id(*id);
        const double dt = std::max(0.0, (target - state.s) / state.u);
        if (dt <= remaining + time_tol)
          ws.candidates.push_back({state.t + dt, EventKind::RegionCross,
                                   static_cast<int>(i), *id, target, false});
      }
    }
    const ModeClass mc = mode_class(region);
    if ((mc == ModeClass::InRangeLeft || mc == ModeClass::InRangeRight) &&
        state.uncertainty[i] > 0.0) {
      bool grazing = false;
      if (auto root = earliest_root(state.uncertainty[i], ws.coeffs[i].rate,
                                    ws.coeffs[i].accel, remaining, &grazing))
        ws.candidates.push_back({state.t + *root, EventKind::QueueEmpty,
                                 static_cast<int>(i), 0,
                                 std::numeric_limits<double>::quiet_NaN(), grazing});
    }
  }
}

void select_cluster(const MissionConfig& config, Workspace& ws) {
  const double time_tol = kTimeTolScale * std::max(1.0, config.horizon);
  double earliest = std::numeric_limits<double>::infinity();
  for (const Candidate& c : ws.candidates) earliest = std::min(earliest, c.time);
  ws.cluster.clear();
  for (const Candidate& c : ws.candidates)
    if (c.time <= earliest + time_tol) ws.cluster.push_back(c);
  std::sort(ws.cluster.begin(), ws.cluster.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.kind != b.kind) return a.kind < b.kind;
              if (a.index != b.index) return a.index < b.index;
              return a.detail < b.detail;
            });
  for (Candidate& c : ws.cluster) c.time = earliest;
}

}  // namespace

PointMode classify_mode(const SamplePoint& point, double s, double u,
                        double uncertainty, const MissionConfig& config) {
  return classify(point, s, u, uncertainty, config, point.inflow_rate);
}

SimState initial_state(const MissionConfig& config) {
  SimState state;
  state.uncertainty.reserve(config.point_count());
  state.modes.resize(config.point_count());
  for (const SamplePoint& point : config.points)
    state.uncertainty.push_back(point.initial_uncertainty);
  for (std::size_t i = 0; i < config.point_count(); ++i)
    state.modes[i] = classify_mode(config.points[i], state.s, state.u,
                                   state.uncertainty[i], config);
  return state;
}

Event next_event(const MissionConfig& config, const SwitchingSchedule& schedule,
                 const SimState& state, double t_end) {
  Workspace ws;
  detail::EngineOptions options;
  options.schedule = &schedule;
  ws.coeffs.resize(config.point_count());
  for (std::size_t i = 0; i < config.point_count(); ++i)
    ws.coeffs[i] = coeffs_for(config.points[i], state.modes[i].region, state.s,
                              state.u, config, config.points[i].inflow_rate);
  collect_candidates(config, state, t_end, options, ws);
  select_cluster(config, ws);
  const Candidate& first = ws.cluster.front();
  return {first.time, first.kind, first.index, first.detail};
}

namespace detail {

double run_events(const MissionConfig& config, SimState& state, double t_end,
                  const EngineOptions& options, Trajectory& out) {
  const std::size_t m = config.point_count();
  const double time_tol = kTimeTolScale * std::max(1.0, config.horizon);
  const double touch_tol = kTouchTolScale * std::max(1.0, config.length);
  Workspace ws;
  ws.coeffs.resize(m);
  ws.snap_tol.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    ws.snap_tol[i] = kUncertaintyTolScale *
                     std::max(1.0, config.points[i].initial_uncertainty);

  auto inflow_of = [&](std::size_t i) {
    return effective_inflow(config, options.inflow, i);
  };
  auto reclassify = [&] {
    for (std::size_t i = 0; i < m; ++i)
      state.modes[i] = classify(config.points[i], state.s, state.u,
                                state.uncertainty[i], config, inflow_of(i));
  };
  auto note_touch = [&] {
    if (state.t <= time_tol) return;
    if (state.s <= touch_tol) out.touched_lower = true;
    if (state.s >= config.length - touch_tol) out.touched_upper = true;
  };

  for (std::size_t i = 0; i < m; ++i)
    if (state.uncertainty[i] < ws.snap_tol[i]) state.uncertainty[i] = 0.0;
  reclassify();

  double integral = 0.0;
  long guard = 0;
  const long guard_max = 40'000'000 / static_cast<long>(m) + 1'000'000;
  bool done = false;
  while (!done) {
    if (++guard > guard_max)
      throw std::runtime_error("event cascade: simulation did not progress");
    for (std::size_t i = 0; i < m; ++i)
      ws.coeffs[i] = coeffs_for(config.points[i], state.modes[i].region,
                                state.s, state.u, config, inflow_of(i));
    collect_candidates(config, state, t_end, options, ws);
    select_cluster(config, ws);
    const double t_next = ws.cluster.front().time;
    const double dt = std::max(0.0, t_next - state.t);
    if (dt > 0.0) {
      if (options.record.record_segments) {
        Segment seg;
        seg.t_begin = state.t;
        seg.t_end = t_next;
        seg.s_begin = state.s;
        seg.u = state.u;
        seg.points.resize(m);
        for (std::size_t i = 0; i < m; ++i)
          seg.points[i] = {state.uncertainty[i], ws.coeffs[i].rate,
                           ws.coeffs[i].accel, state.modes[i]};
        out.segments.push_back(std::move(seg));
      }
      for (std::size_t i = 0; i < m; ++i) {
        const RateCoeffs& c = ws.coeffs[i];
        integral += dt * (state.uncertainty[i] + dt * (c.rate / 2.0 + dt * c.accel / 3.0));
        state.uncertainty[i] += dt * (c.rate + dt * c.accel);
      }
      state.s += state.u * dt;
    }
    state.t = t_next;
    for (std::size_t i = 0; i < m; ++i)
      if (state.uncertainty[i] < ws.snap_tol[i]) state.uncertainty[i] = 0.0;

    for (const Candidate& event : ws.cluster) {
      switch (event.kind) {
        case EventKind::QueueEmpty:
          state.uncertainty[event.index] = 0.0;
          if (event.grazing)
            out.warnings.push_back(
                "near-tangential queue empty at point " +
                std::to_string(event.index) + ", t=" + std::to_string(event.time));
          if (options.record.record_events)
            out.events.push_back({event.time, event.kind, event.index, 0});
          break;
        case EventKind::RegionCross:
          state.s = event.snap_position;
          if (options.record.record_events)
            out.events.push_back({event.time, event.kind, event.index, event.detail});
          break;
        case EventKind::SwitchingPoint: {
          state.s = event.snap_position;
          const std::size_t j = static_cast<std::size_t>(event.index);
          if (j < out.switch_time.size()) {
            out.switch_time[j] = event.time;
            out.switch_direction[j] = state.u < 0.0 ? -1 : 1;
          }
          state.u = -state.u;
          ++state.next_switch;
          if (options.record.record_events)
            out.events.push_back({event.time, event.kind, event.index, 0});
          break;
        }
        case EventKind::BoundaryReflect: {
          // A coincident switch may already point the agent inward.
          const bool outward = event.index == 1 ? state.u > 0.0 : state.u < 0.0;
          if (!outward) break;
          state.s = event.snap_position;
          state.u = -state.u;
          (event.index == 1 ? out.touched_upper : out.touched_lower) = true;
          if (options.record.record_events)
            out.events.push_back({event.time, event.kind, event.index, 0});
          break;
        }
        case EventKind::HorizonEnd:
          done = true;
          if (options.emit_horizon_end && options.record.record_events)
            out.events.push_back({event.time, event.kind, 0, 0});
          break;
      }
    }
    note_touch();
    if (!done) reclassify();
  }
  return integral;
}

}  // namespace detail

Trajectory simulate(const MissionConfig& config,
                    const SwitchingSchedule& schedule,
                    const SimOptions& options) {
  config.validate();
  schedule.validate(config.length);
  Trajectory trajectory;
  trajectory.config = config;
  trajectory.schedule = schedule;
  trajectory.switch_time.assign(schedule.size(), -1.0);
  trajectory.switch_direction.assign(schedule.size(), 0);
  SimState state = initial_state(config);
  detail::EngineOptions engine;
  engine.schedule = &schedule;
  engine.record = options;
  const double integral =
      detail::run_events(config, state, config.horizon, engine, trajectory);
  trajectory.cost = integral / config.horizon;
  trajectory.s_end = state.s;
  return trajectory;
}

Trajectory simulate(const MissionConfig& config,
                    const SwitchingSchedule& schedule) {
  return simulate(config, schedule, SimOptions{});
}

double simulate_cost(const MissionConfig& config,
                     const SwitchingSchedule& schedule) {
  return simulate(config, schedule, SimOptions{false, false}).cost;
}

}  // namespace permon
