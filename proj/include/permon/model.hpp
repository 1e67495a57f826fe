#pragma once

#include <span>
#include <vector>

namespace permon {

// Piecewise-constant inflow override: `rate` applies from `time` onward.
// Only the receding-horizon controller consults these; the optimizer and the
// exact gradient assume the base inflow.
struct InflowStep {
  double time = 0.0;
  double rate = 0.0;
};

// A monitored location with its own uncertainty queue.
struct SamplePoint {
  double position = 0.0;             // in [0, length]
  double inflow_rate = 0.0;          // uncertainty growth per unit time
  double initial_uncertainty = 0.0;  // queue content at t = 0
  std::vector<InflowStep> inflow_schedule;

  double inflow_at(double t) const;
};

// Static description of one mission: the patrolled interval [0, length],
// the sensing model, the horizon, and the monitored points.
struct MissionConfig {
  double length = 0.0;
  double sensing_range = 0.0;
  double service_rate = 0.0;  // max uncertainty removal rate (at zero distance)
  double horizon = 0.0;
  std::vector<SamplePoint> points;

  // Evenly spaced points over [0, length], both endpoints included.
  static MissionConfig uniform_grid(double length, double sensing_range,
                                    double service_rate, double horizon,
                                    int point_count, double inflow_rate,
                                    double initial_uncertainty);

  std::size_t point_count() const { return points.size(); }
  void validate() const;  // throws std::invalid_argument
};

// Ordered switching locations. The agent starts at s = 0 moving right and
// reverses direction at each location in turn, so odd entries (1-based) are
// upper turning points and even entries lower ones. Feasibility:
//   theta_j >= theta_{j-1} for odd j, theta_j <= theta_{j-1} for even j,
// all entries inside [0, length]. Equal adjacent entries are allowed and act
// as an instantaneous double flip.
struct SwitchingSchedule {
  std::vector<double> locations;

  std::size_t size() const { return locations.size(); }
  bool feasible(double length) const;
  void validate(double length) const;  // throws std::invalid_argument
};

bool operator==(const InflowStep&, const InflowStep&);
bool operator==(const SamplePoint&, const SamplePoint&);
bool operator==(const MissionConfig&, const MissionConfig&);
bool operator==(const SwitchingSchedule&, const SwitchingSchedule&);

// Linear-decay sensing model: 1 at zero distance, 0 at and beyond `range`.
double detection_probability(double x, double s, double range);

// Combined detection probability for several agents observing x:
// 1 - prod_i (1 - p(x, s_i)). Throws on an empty agent list.
double joint_detection_probability(double x, std::span<const double> agents,
                                   double range);

// Net uncertainty growth: inflow - service * probability, with the queue
// pinned at zero once empty and over-served. Throws on negative uncertainty
// or a probability outside [0, 1].
double uncertainty_rate(double uncertainty, double probability, double inflow,
                        double service);

}  // namespace permon
