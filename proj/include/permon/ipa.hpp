#pragma once

#include <string>
#include <vector>

#include "permon/model.hpp"
#include "permon/trajectory.hpp"

namespace permon {

struct IpaOptions {
  // Also propagate the generic per-event jump equations (event-time
  // sensitivities computed from guard functions) and record the largest
  // deviation from the closed-form propagation. Requires a trajectory
  // without coincident events.
  bool check_general_form = false;
  // Assemble the gradient a second time with explicit event-time boundary
  // terms (Leibniz rule); the terms telescope, so the deviation from the
  // plain form should be at round-off level.
  bool check_boundary_terms = false;
};

struct IpaResult {
  std::vector<double> gradient;        // dJ/dtheta_j
  std::vector<double> activation_time; // first consumption of theta_j; -1 if unreached
  std::vector<std::string> warnings;
  bool checks_run = false;
  double general_form_deviation = 0.0;
  double boundary_term_deviation = 0.0;
};

// ds/dtheta_j: zero before the j-th switch is consumed, afterwards +/-2 with
// the sign set by the parity of j (1-based) and the current control.
double switch_position_sensitivity(int switch_index, double t, double u,
                                   double activation_time);

// Exact gradient of the time-averaged cost with respect to the switching
// locations, propagated across the recorded trajectory. The queue
// sensitivities are affine per segment, reset to zero when a queue empties,
// and integrate in closed form.
IpaResult ipa_gradient(const MissionConfig& config,
                       const SwitchingSchedule& schedule,
                       const Trajectory& trajectory,
                       const IpaOptions& options = {});

struct FdResult {
  std::vector<double> gradient;
  std::vector<bool> skipped;
  std::vector<std::string> notes;
  double step = 0.0;
  double cost_scale = 0.0;  // largest |cost| seen across the perturbed runs
};

// Relative disagreement between an exact and a central-difference gradient
// component, with the difference quotient's round-off floor subtracted first
// (the oracle cannot resolve differences below cost * eps / step).
double gradient_agreement_error(double exact_value, double fd_value,
                                const FdResult& fd);

// Central-difference oracle. Component j is skipped when a perturbed schedule
// is infeasible or when the perturbation changes the trajectory's queue-empty,
// reflection or switch structure (a kink, where the two-sided derivative does
// not exist).
FdResult finite_difference_gradient(const MissionConfig& config,
                                    const SwitchingSchedule& schedule,
                                    double step);

}  // namespace permon
