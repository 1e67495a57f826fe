#include "permon/ipa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "permon/sim.hpp"

namespace permon {
namespace {

// Per-segment slope of dR_i/dtheta_j is this factor times ds/dtheta_j; zero
// when the queue is pinned or out of range.
double row_slope_factor(ModeClass mc, const MissionConfig& config) {
  switch (mc) {
    case ModeClass::InRangeLeft:
      return -config.service_rate / config.sensing_range;
    case ModeClass::InRangeRight:
      return config.service_rate / config.sensing_range;
    default:
      return 0.0;
  }
}

// ds/dtheta_j after consumption: parity sign times 2u (0-based index).
double position_sensitivity(std::size_t j0, double u) {
  return (j0 % 2 == 0 ? -2.0 : 2.0) * u;
}

// Re-derives the gradient from the generic per-event jump equations: the
// event-time sensitivity follows from the active guard (s = theta_j, s at a
// sensing boundary or mission end point, or R_i = 0), and state
// sensitivities jump with the dynamics discontinuity. Also assembles the
// gradient with explicit event-time boundary terms, which telescope.
struct GeneralFormCheck {
  const MissionConfig& config;
  const Trajectory& traj;
  std::size_t m, n;
  std::vector<double> sprime;
  std::vector<double> dr;
  std::vector<double> grad;
  std::vector<double> grad_leibniz;
  std::vector<double> tau_prime;
  std::vector<double> f_minus, f_plus;
  std::string failure;

  GeneralFormCheck(const MissionConfig& c, const Trajectory& t)
      : config(c), traj(t), m(c.point_count()), n(t.schedule.size()) {
    sprime.assign(n, 0.0);
    dr.assign(m * n, 0.0);
    grad.assign(n, 0.0);
    grad_leibniz.assign(n, 0.0);
    tau_prime.assign(n, 0.0);
    f_minus.assign(m, 0.0);
    f_plus.assign(m, 0.0);
  }

  bool aligned() const {
    const double tol = 1e-9 * std::max(1.0, config.horizon);
    if (traj.events.size() != traj.segments.size()) return false;
    for (std::size_t k = 0; k < traj.events.size(); ++k) {
      if (std::abs(traj.events[k].time - traj.segments[k].t_end) > tol) return false;
      if (k > 0 && traj.events[k].time - traj.events[k - 1].time <= tol) return false;
    }
    return true;
  }

  void run() {
    if (!aligned()) {
      failure = "general-form check skipped: coincident or misaligned events";
      return;
    }
    const double inv_T = 1.0 / config.horizon;
    std::vector<double> tau_prev(n, 0.0);
    for (std::size_t k = 0; k < traj.segments.size(); ++k) {
      const Segment& seg = traj.segments[k];
      const double dt = seg.duration();
      for (std::size_t i = 0; i < m; ++i) {
        const PointSegment& p = seg.points[i];
        const double factor = row_slope_factor(mode_class(p.mode.region), config);
        for (std::size_t j = 0; j < n; ++j) {
          const double slope = factor * sprime[j];
          const double integral = dr[i * n + j] * dt + 0.5 * slope * dt * dt;
          grad[j] += inv_T * integral;
          grad_leibniz[j] += inv_T * (integral - p.value * tau_prev[j]);
          dr[i * n + j] += slope * dt;
        }
        f_minus[i] = p.rate + 2.0 * p.accel * dt;
        f_plus[i] = k + 1 < traj.segments.size()
                        ? traj.segments[k + 1].points[i].rate
                        : f_minus[i];
      }
      const Event& event = traj.events[k];
      if (!compute_tau_prime(event, seg.u)) return;
      for (std::size_t i = 0; i < m; ++i) {
        const PointSegment& p = seg.points[i];
        const double r_end = p.value + dt * (p.rate + dt * p.accel);
        for (std::size_t j = 0; j < n; ++j)
          grad_leibniz[j] += inv_T * r_end * tau_prime[j];
      }
      apply_jumps(event, seg.u);
      tau_prev = tau_prime;
    }
  }

  bool compute_tau_prime(const Event& event, double u_minus) {
    std::fill(tau_prime.begin(), tau_prime.end(), 0.0);
    switch (event.kind) {
      case EventKind::HorizonEnd:
        return true;  // exogenous
      case EventKind::QueueEmpty: {
        const auto i = static_cast<std::size_t>(event.index);
        const double f = f_minus[i];
        if (std::abs(f) < 1e-10 * std::max(1.0, config.points[i].inflow_rate)) {
          failure =
              "general-form check skipped: vanishing guard rate at a "
              "queue-empty event";
          return false;
        }
        for (std::size_t j = 0; j < n; ++j) tau_prime[j] = -dr[i * n + j] / f;
        return true;
      }
      case EventKind::RegionCross:
      case EventKind::BoundaryReflect:
        for (std::size_t j = 0; j < n; ++j) tau_prime[j] = -sprime[j] / u_minus;
        return true;
      case EventKind::SwitchingPoint: {
        const auto j0 = static_cast<std::size_t>(event.index);
        for (std::size_t j = 0; j < n; ++j)
          tau_prime[j] = ((j == j0 ? 1.0 : 0.0) - sprime[j]) / u_minus;
        return true;
      }
    }
    return true;
  }

  void apply_jumps(const Event& event, double u_minus) {
    for (std::size_t i = 0; i < m; ++i) {
      const double df = f_minus[i] - f_plus[i];
      if (df == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) dr[i * n + j] += df * tau_prime[j];
    }
    if (event.kind == EventKind::SwitchingPoint ||
        event.kind == EventKind::BoundaryReflect) {
      for (std::size_t j = 0; j < n; ++j) sprime[j] += 2.0 * u_minus * tau_prime[j];
    }
  }
};

// Structure signature for kink detection. Region crossings are excluded: the
// queue rates are continuous across sensing boundaries, so a crossing sliding
// in or out of the trajectory leaves the cost differentiable. Queue-empty,
// reflection and switch changes do create one-sided derivatives. Events
// sliding past the horizon end as theta moves are truncation effects, not
// kinks, so a short trailing window is ignored as well.
std::vector<std::tuple<int, int, int>> event_multiset(const Trajectory& traj,
                                                      double trailing_window) {
  const double cutoff = traj.config.horizon - trailing_window;
  std::vector<std::tuple<int, int, int>> out;
  out.reserve(traj.events.size());
  for (const Event& e : traj.events) {
    if (e.kind == EventKind::HorizonEnd || e.kind == EventKind::RegionCross ||
        e.time >= cutoff)
      continue;
    out.emplace_back(static_cast<int>(e.kind), e.index, e.detail);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double switch_position_sensitivity(int switch_index, double t, double u,
                                   double activation_time) {
  if (switch_index < 1) throw std::invalid_argument("switch index is 1-based");
  if (activation_time < 0.0 || t < activation_time) return 0.0;
  return position_sensitivity(static_cast<std::size_t>(switch_index - 1), u);
}

IpaResult ipa_gradient(const MissionConfig& config,
                       const SwitchingSchedule& schedule,
                       const Trajectory& trajectory,
                       const IpaOptions& options) {
  if (!(trajectory.config == config) || !(trajectory.schedule == schedule))
    throw std::invalid_argument(
        "trajectory was produced from a different config or schedule");
  if (!trajectory.recorded())
    throw std::invalid_argument("trajectory was simulated without recording");

  const std::size_t m = config.point_count();
  const std::size_t n = schedule.size();
  const double inv_T = 1.0 / config.horizon;
  const double time_tol = 1e-12 * std::max(1.0, config.horizon);

  IpaResult result;
  result.gradient.assign(n, 0.0);
  result.activation_time.assign(n, -1.0);
  result.warnings = trajectory.warnings;
  if (n == 0) return result;

  std::vector<char> active(n, 0);
  std::vector<double> dr(m * n, 0.0);
  std::vector<double> ds(n, 0.0);

  std::size_t e = 0;
  auto apply_event = [&](const Event& event) {
    if (event.kind == EventKind::QueueEmpty) {
      std::fill_n(dr.begin() + event.index * static_cast<long>(n), n, 0.0);
    } else if (event.kind == EventKind::SwitchingPoint) {
      active[event.index] = 1;
      result.activation_time[event.index] = event.time;
    }
  };

  for (const Segment& seg : trajectory.segments) {
    while (e < trajectory.events.size() &&
           trajectory.events[e].time <= seg.t_begin + time_tol)
      apply_event(trajectory.events[e++]);
    const double dt = seg.duration();
    if (dt <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j)
      ds[j] = active[j] ? position_sensitivity(j, seg.u) : 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double factor =
          row_slope_factor(mode_class(seg.points[i].mode.region), config);
      double* row = dr.data() + i * n;
      if (factor == 0.0) {
        for (std::size_t j = 0; j < n; ++j)
          if (row[j] != 0.0) result.gradient[j] += inv_T * row[j] * dt;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double slope = factor * ds[j];
        result.gradient[j] += inv_T * (row[j] * dt + 0.5 * slope * dt * dt);
        row[j] += slope * dt;
      }
    }
  }
  while (e < trajectory.events.size()) apply_event(trajectory.events[e++]);

  if (options.check_general_form || options.check_boundary_terms) {
    GeneralFormCheck check(config, trajectory);
    check.run();
    if (!check.failure.empty()) {
      result.warnings.push_back(check.failure);
    } else {
      result.checks_run = true;
      for (std::size_t j = 0; j < n; ++j) {
        result.general_form_deviation =
            std::max(result.general_form_deviation,
                     std::abs(check.grad[j] - result.gradient[j]));
        result.boundary_term_deviation =
            std::max(result.boundary_term_deviation,
                     std::abs(check.grad_leibniz[j] - result.gradient[j]));
      }
      // Final queue sensitivities must agree as well.
      for (std::size_t idx = 0; idx < dr.size(); ++idx)
        result.general_form_deviation = std::max(
            result.general_form_deviation, std::abs(check.dr[idx] - dr[idx]));
    }
  }
  return result;
}

double gradient_agreement_error(double exact_value, double fd_value,
                                const FdResult& fd) {
  const double noise =
      1e-12 * std::max(1.0, fd.cost_scale) / (2.0 * std::max(fd.step, 1e-300));
  const double gap = std::max(0.0, std::abs(exact_value - fd_value) - noise);
  return gap / std::max({1e-6, std::abs(exact_value), std::abs(fd_value)});
}

FdResult finite_difference_gradient(const MissionConfig& config,
                                    const SwitchingSchedule& schedule,
                                    double step) {
  config.validate();
  schedule.validate(config.length);
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  const std::size_t n = schedule.size();
  FdResult result;
  result.gradient.assign(n, 0.0);
  result.skipped.assign(n, false);
  result.step = step;
  const SimOptions events_only{false, true};
  for (std::size_t j = 0; j < n; ++j) {
    SwitchingSchedule plus = schedule, minus = schedule;
    plus.locations[j] += step;
    minus.locations[j] -= step;
    if (!plus.feasible(config.length) || !minus.feasible(config.length)) {
      result.skipped[j] = true;
      result.notes.push_back("component " + std::to_string(j + 1) +
                             ": perturbation leaves the feasible set");
      continue;
    }
    const Trajectory up = simulate(config, plus, events_only);
    const Trajectory down = simulate(config, minus, events_only);
    result.cost_scale =
        std::max({result.cost_scale, std::abs(up.cost), std::abs(down.cost)});
    if (event_multiset(up, 8.0 * step) != event_multiset(down, 8.0 * step)) {
      result.skipped[j] = true;
      result.notes.push_back("component " + std::to_string(j + 1) +
                             ": perturbation changes the event structure");
      continue;
    }
    result.gradient[j] = (up.cost - down.cost) / (2.0 * step);
  }
  return result;
}

}  // namespace permon
