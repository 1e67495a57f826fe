#include "permon/receding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "permon/sim.hpp"

namespace permon {
namespace {

constexpr double kTieTol = 1e-9;

// Advances with a constant control, splitting at inflow-schedule breakpoints
// so the event core always sees constant rates. Reflections inside a span
// carry over (the control keeps its magnitude, the sign bounces).
double propagate_constant(const MissionConfig& config, SimState& state,
                          double t_until, bool emit_end, const SimOptions& record,
                          Trajectory& out) {
  std::vector<double> cuts;
  for (const SamplePoint& point : config.points)
    for (const InflowStep& step : point.inflow_schedule)
      if (step.time > state.t && step.time < t_until) cuts.push_back(step.time);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(t_until);

  std::vector<double> inflow(config.point_count());
  double integral = 0.0;
  for (double cut : cuts) {
    for (std::size_t i = 0; i < config.point_count(); ++i)
      inflow[i] = config.points[i].inflow_at(state.t);
    detail::EngineOptions options;
    options.inflow = inflow;
    options.record = record;
    options.emit_horizon_end = emit_end && cut == cuts.back();
    integral += detail::run_events(config, state, cut, options, out);
  }
  return integral;
}

bool has_inflow_schedule(const MissionConfig& config) {
  for (const SamplePoint& point : config.points)
    if (!point.inflow_schedule.empty()) return true;
  return false;
}

}  // namespace

RhSettings RhSettings::defaults(const MissionConfig& config) {
  RhSettings settings;
  settings.planning_horizon = std::min(2.0 * config.sensing_range, config.horizon);
  settings.action_horizon = 0.5 * settings.planning_horizon;
  return settings;
}

RhSettings RhSettings::resolved(const MissionConfig& config) const {
  RhSettings out = *this;
  const RhSettings fallback = defaults(config);
  if (out.planning_horizon <= 0.0) out.planning_horizon = fallback.planning_horizon;
  if (out.action_horizon <= 0.0)
    out.action_horizon = std::min(0.5 * out.planning_horizon, fallback.action_horizon);
  out.validate(config);
  return out;
}

void RhSettings::validate(const MissionConfig& config) const {
  if (!(action_horizon > 0.0) || action_horizon > planning_horizon ||
      planning_horizon > config.horizon)
    throw std::invalid_argument(
        "receding horizon requires 0 < action <= planning <= mission horizon");
  if (grid_points < 2)
    throw std::invalid_argument("continuous search needs at least two grid points");
}

double window_cost(const MissionConfig& config, double t_now, double s_now,
                   std::span<const double> uncertainty, double u,
                   double duration) {
  if (uncertainty.size() != config.point_count())
    throw std::invalid_argument("uncertainty vector size mismatch");
  if (std::abs(u) > 1.0 + 1e-12)
    throw std::invalid_argument("control magnitude exceeds 1");
  SimState state;
  state.t = t_now;
  state.s = s_now;
  state.u = u;
  state.uncertainty.assign(uncertainty.begin(), uncertainty.end());
  state.modes.resize(config.point_count());
  Trajectory scratch;
  scratch.config = config;
  return propagate_constant(config, state, t_now + duration, false,
                            SimOptions{false, false}, scratch);
}

double rh_step(const MissionConfig& config, double t_now, double s_now,
               std::span<const double> uncertainty, const RhSettings& settings) {
  if (s_now < 0.0 || s_now > config.length)
    throw std::invalid_argument("agent position outside the mission interval");
  for (double value : uncertainty)
    if (value < 0.0) throw std::invalid_argument("negative uncertainty");
  const RhSettings resolved = settings.resolved(config);
  const double window = std::min(resolved.planning_horizon, config.horizon - t_now);
  if (window <= 0.0) return 1.0;
  auto evaluate = [&](double u) {
    return window_cost(config, t_now, s_now, uncertainty, u, window);
  };

  if (resolved.search == ControlSearch::Binary) {
    const double cost_up = evaluate(1.0);
    const double cost_down = evaluate(-1.0);
    return cost_down < cost_up - kTieTol ? -1.0 : 1.0;
  }

  const int grid = resolved.grid_points;
  double best_cost = evaluate(1.0);
  double best_u = 1.0;
  const double spacing = 2.0 / (grid - 1);
  for (int k = 0; k < grid; ++k) {
    const double u = -1.0 + spacing * k;
    const double c = evaluate(u);
    if (c < best_cost - kTieTol || (c <= best_cost + kTieTol && u > best_u)) {
      if (c < best_cost) best_cost = c;
      best_u = u;
    }
  }
  // Golden-section refinement inside the best grid cell.
  double lo = std::max(-1.0, best_u - spacing);
  double hi = std::min(1.0, best_u + spacing);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = evaluate(x1);
  double f2 = evaluate(x2);
  double refined_u = f1 <= f2 ? x1 : x2;
  double refined_cost = std::min(f1, f2);
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = evaluate(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = evaluate(x2);
    }
    const double candidate = f1 <= f2 ? x1 : x2;
    const double candidate_cost = std::min(f1, f2);
    if (candidate_cost < refined_cost) {
      refined_cost = candidate_cost;
      refined_u = candidate;
    }
  }
  if (refined_cost < best_cost - kTieTol ||
      (refined_cost <= best_cost + kTieTol && refined_u > best_u))
    return refined_u;
  return best_u;
}

RhResult rh_run(const MissionConfig& config, const RhSettings& settings) {
  config.validate();
  const RhSettings resolved = settings.resolved(config);
  RhResult result;
  Trajectory& trajectory = result.trajectory;
  trajectory.config = config;
  SimState state = initial_state(config);
  const double time_tol = 1e-12 * std::max(1.0, config.horizon);
  double integral = 0.0;
  while (state.t < config.horizon - time_tol) {
    const double u =
        rh_step(config, state.t, state.s, state.uncertainty, resolved);
    result.control_times.push_back(state.t);
    result.controls.push_back(u);
    const double t_next =
        std::min(state.t + resolved.action_horizon, config.horizon);
    state.u = u;
    const bool last = t_next >= config.horizon - time_tol;
    integral += propagate_constant(config, state, t_next, last,
                                   SimOptions{true, true}, trajectory);
  }
  trajectory.cost = integral / config.horizon;
  trajectory.s_end = state.s;
  if (has_inflow_schedule(config))
    trajectory.warnings.push_back("time-varying inflow schedule applied");
  return result;
}

}  // namespace permon
