#include "permon/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "permon/ipa.hpp"
#include "permon/sim.hpp"

namespace permon {
namespace {

double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

SwitchingSchedule default_seed(const MissionConfig& config) {
  const int n = std::max(1, static_cast<int>(std::floor(
                                config.horizon / config.length + 1e-12)));
  SwitchingSchedule seed;
  seed.locations.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    seed.locations.push_back(j % 2 == 0 ? 0.9 * config.length : 0.1 * config.length);
  return seed;
}

}  // namespace

int OptimizerReport::iterations_total() const {
  int total = 0;
  for (const PhaseTrace& phase : phases)
    total += static_cast<int>(phase.cost_history.size()) - 1;
  return total;
}

std::vector<double> OptimizerReport::cost_history_flat() const {
  std::vector<double> flat;
  for (const PhaseTrace& phase : phases)
    flat.insert(flat.end(), phase.cost_history.begin(), phase.cost_history.end());
  return flat;
}

SwitchingSchedule clamp_feasible(SwitchingSchedule schedule, double length) {
  auto& locations = schedule.locations;
  for (std::size_t j = 1; j < locations.size(); ++j) {
    const bool lower_turn = (j % 2 == 1);
    locations[j] = lower_turn ? std::min(locations[j], locations[j - 1])
                              : std::max(locations[j], locations[j - 1]);
  }
  for (double& value : locations) value = std::clamp(value, 0.0, length);
  return schedule;
}

std::vector<double> project_direction(const std::vector<double>& gradient,
                                      const SwitchingSchedule& schedule,
                                      double length) {
  schedule.validate(length);
  if (gradient.size() != schedule.size())
    throw std::invalid_argument("gradient size does not match the schedule");
  const double active_tol = 1e-9 * std::max(1.0, length);
  std::vector<double> direction = gradient;
  const std::size_t n = direction.size();
  // Equal-location pairs: average the two components whenever the step would
  // re-order them; sweep until stable (handles runs of equal locations).
  for (std::size_t pass = 0; pass < 4 * n + 4; ++pass) {
    bool changed = false;
    for (std::size_t j = 1; j < n; ++j) {
      if (std::abs(schedule.locations[j] - schedule.locations[j - 1]) > active_tol)
        continue;
      const bool lower_turn = (j % 2 == 1);
      const double relative = direction[j - 1] - direction[j];
      const bool violates = lower_turn ? relative > 1e-15 : relative < -1e-15;
      if (violates) {
        const double average = 0.5 * (direction[j - 1] + direction[j]);
        direction[j - 1] = direction[j] = average;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (schedule.locations[j] <= active_tol && direction[j] > 0.0) direction[j] = 0.0;
    if (schedule.locations[j] >= length - active_tol && direction[j] < 0.0)
      direction[j] = 0.0;
  }
  return direction;
}

ArmijoResult armijo_step(const MissionConfig& config,
                         const SwitchingSchedule& theta,
                         const std::vector<double>& direction,
                         double current_cost, const ArmijoSettings& settings) {
  ArmijoResult result;
  result.theta = theta;
  result.new_cost = current_cost;
  double direction_sq = 0.0;
  for (double d : direction) direction_sq += d * d;
  if (direction_sq == 0.0) return result;

  double step = settings.initial_step;
  for (int m = 0; m <= settings.max_backtracks; ++m, step *= settings.backtrack) {
    SwitchingSchedule trial = theta;
    for (std::size_t j = 0; j < trial.size(); ++j)
      trial.locations[j] -= step * direction[j];
    trial = clamp_feasible(std::move(trial), config.length);
    const double trial_cost = simulate_cost(config, trial);
    if (trial_cost <= current_cost - settings.sufficient_decrease * step * direction_sq) {
      result.step = step;
      result.new_cost = trial_cost;
      result.stalled = false;
      result.theta = std::move(trial);
      return result;
    }
  }
  return result;
}

OptimizerReport optimize(const MissionConfig& config,
                         const std::optional<SwitchingSchedule>& seed,
                         const OptimizerSettings& settings) {
  config.validate();
  SwitchingSchedule theta = seed ? *seed : default_seed(config);
  theta.validate(config.length);

  OptimizerReport report;
  const SimOptions fast{false, false};
  const SimOptions recorded{true, true};

  for (int growth = 0;; ++growth) {
    PhaseTrace phase;
    phase.switch_count = static_cast<int>(theta.size());
    double current = simulate(config, theta, fast).cost;
    phase.cost_history.push_back(current);

    for (int iter = 0; iter < settings.max_iterations; ++iter) {
      const Trajectory trajectory = simulate(config, theta, recorded);
      const IpaResult ipa = ipa_gradient(config, theta, trajectory);
      for (const std::string& warning : ipa.warnings)
        if (report.warnings.empty() || report.warnings.back() != warning)
          report.warnings.push_back(warning);
      const std::vector<double> direction =
          project_direction(ipa.gradient, theta, config.length);
      phase.grad_norm = norm2(direction);
      if (phase.grad_norm < settings.grad_tolerance) {
        phase.converged = true;
        break;
      }
      const ArmijoResult step =
          armijo_step(config, theta, direction, current, settings.armijo);
      if (step.stalled) {
        phase.stalled = true;
        break;
      }
      theta = step.theta;
      current = step.new_cost;
      phase.cost_history.push_back(current);
    }
    report.phases.push_back(phase);

    const Trajectory final_run = simulate(config, theta, fast);
    report.theta = theta;
    report.cost = final_run.cost;
    report.converged = phase.converged;
    report.grad_norm = phase.grad_norm;
    report.boundary_free = final_run.interior();
    if (report.boundary_free || growth >= settings.max_growth) break;

    // Extend the schedule with a switch at the final position; it is consumed
    // at the horizon end, so the cost is unchanged at the moment of appending.
    SwitchingSchedule grown = theta;
    grown.locations.push_back(final_run.s_end);
    if (!grown.feasible(config.length)) {
      grown = clamp_feasible(std::move(grown), config.length);
      report.warnings.push_back(
          "appended switch projected to keep the schedule feasible");
    }
    const double grown_cost = simulate(config, grown, fast).cost;
    report.growth_cost_delta.push_back(std::abs(grown_cost - final_run.cost));
    theta = std::move(grown);
  }

  const double boundary_tol = 1e-9 * std::max(1.0, config.length);
  for (std::size_t j = 0; j < report.theta.size(); ++j) {
    const double value = report.theta.locations[j];
    if (value <= boundary_tol || value >= config.length - boundary_tol)
      report.warnings.push_back("switch " + std::to_string(j + 1) +
                                " converged onto a mission end point");
  }
  return report;
}

}  // namespace permon
