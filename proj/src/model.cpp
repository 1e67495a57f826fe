#include "permon/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace permon {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

double SamplePoint::inflow_at(double t) const {
  double rate = inflow_rate;
  for (const InflowStep& step : inflow_schedule) {
    if (step.time > t) break;
    rate = step.rate;
  }
  return rate;
}

MissionConfig MissionConfig::uniform_grid(double length, double sensing_range,
                                          double service_rate, double horizon,
                                          int point_count, double inflow_rate,
                                          double initial_uncertainty) {
  require(point_count >= 1, "uniform grid needs at least one point");
  MissionConfig config;
  config.length = length;
  config.sensing_range = sensing_range;
  config.service_rate = service_rate;
  config.horizon = horizon;
  config.points.reserve(static_cast<std::size_t>(point_count));
  for (int i = 0; i < point_count; ++i) {
    SamplePoint point;
    point.position = point_count == 1
                         ? 0.5 * length
                         : length * static_cast<double>(i) / (point_count - 1);
    point.inflow_rate = inflow_rate;
    point.initial_uncertainty = initial_uncertainty;
    config.points.push_back(point);
  }
  config.validate();
  return config;
}

void MissionConfig::validate() const {
  require(std::isfinite(length) && length > 0.0, "mission length must be positive");
  require(std::isfinite(sensing_range) && sensing_range > 0.0,
          "sensing range must be positive");
  require(std::isfinite(service_rate) && service_rate > 0.0,
          "service rate must be positive");
  require(std::isfinite(horizon) && horizon > 0.0, "horizon must be positive");
  require(!points.empty(), "at least one sample point is required");
  double previous = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SamplePoint& point = points[i];
    const std::string at = "point " + std::to_string(i);
    require(std::isfinite(point.position) && point.position >= 0.0 &&
                point.position <= length,
            at + ": position outside the mission interval");
    if (i > 0) require(point.position >= previous, at + ": positions must be nondecreasing");
    previous = point.position;
    require(std::isfinite(point.initial_uncertainty) && point.initial_uncertainty >= 0.0,
            at + ": initial uncertainty must be nonnegative");
    require(std::isfinite(point.inflow_rate) && point.inflow_rate > 0.0,
            at + ": inflow rate must be positive");
    require(point.inflow_rate < service_rate,
            at + ": service rate must exceed the inflow rate");
    double t_prev = -1.0;
    for (const InflowStep& step : point.inflow_schedule) {
      require(std::isfinite(step.time) && step.time >= 0.0,
              at + ": inflow schedule times must be nonnegative");
      require(step.time > t_prev, at + ": inflow schedule times must increase");
      t_prev = step.time;
      require(std::isfinite(step.rate) && step.rate > 0.0 && step.rate < service_rate,
              at + ": scheduled inflow must stay in (0, service rate)");
    }
  }
}

bool SwitchingSchedule::feasible(double length) const {
  for (std::size_t j = 0; j < locations.size(); ++j) {
    const double value = locations[j];
    if (!std::isfinite(value) || value < 0.0 || value > length) return false;
    if (j == 0) continue;
    const bool lower_turn = (j % 2 == 1);  // even 1-based index
    if (lower_turn ? value > locations[j - 1] : value < locations[j - 1]) return false;
  }
  return true;
}

void SwitchingSchedule::validate(double length) const {
  for (std::size_t j = 0; j < locations.size(); ++j) {
    const double value = locations[j];
    require(std::isfinite(value), "switching location " + std::to_string(j + 1) + " is not finite");
    require(value >= 0.0 && value <= length,
            "switching location " + std::to_string(j + 1) + " outside the mission interval");
    if (j == 0) continue;
    const bool lower_turn = (j % 2 == 1);
    require(lower_turn ? value <= locations[j - 1] : value >= locations[j - 1],
            "switching locations must alternate: entry " + std::to_string(j + 1) +
                (lower_turn ? " must not exceed" : " must not precede") + " its predecessor");
  }
}

bool operator==(const InflowStep& a, const InflowStep& b) {
  return a.time == b.time && a.rate == b.rate;
}

bool operator==(const SamplePoint& a, const SamplePoint& b) {
  return a.position == b.position && a.inflow_rate == b.inflow_rate &&
         a.initial_uncertainty == b.initial_uncertainty &&
         a.inflow_schedule == b.inflow_schedule;
}

bool operator==(const MissionConfig& a, const MissionConfig& b) {
  return a.length == b.length && a.sensing_range == b.sensing_range &&
         a.service_rate == b.service_rate && a.horizon == b.horizon &&
         a.points == b.points;
}

bool operator==(const SwitchingSchedule& a, const SwitchingSchedule& b) {
  return a.locations == b.locations;
}

double detection_probability(double x, double s, double range) {
  if (!(range > 0.0)) return 0.0;
  const double distance = std::abs(x - s);
  return distance <= range ? 1.0 - distance / range : 0.0;
}

double joint_detection_probability(double x, std::span<const double> agents,
                                   double range) {
  require(!agents.empty(), "joint detection needs at least one agent");
  double miss = 1.0;
  for (double s : agents) miss *= 1.0 - detection_probability(x, s, range);
  return 1.0 - miss;
}

double uncertainty_rate(double uncertainty, double probability, double inflow,
                        double service) {
  require(uncertainty >= 0.0, "uncertainty must be nonnegative");
  require(probability >= 0.0 && probability <= 1.0,
          "probability must lie in [0, 1]");
  if (uncertainty == 0.0 && inflow < service * probability) return 0.0;
  return inflow - service * probability;
}

}  // namespace permon
