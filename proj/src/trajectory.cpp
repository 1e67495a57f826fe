#include "permon/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace permon {

ModeClass mode_class(ModeRegion region) {
  switch (region) {
    case ModeRegion::EmptyDwell:
      return ModeClass::Pinned;
    case ModeRegion::FarLeft:
    case ModeRegion::FarRight:
      return ModeClass::OutOfRange;
    case ModeRegion::NearLeftRising:
    case ModeRegion::NearLeftFalling:
      return ModeClass::InRangeLeft;
    default:
      return ModeClass::InRangeRight;
  }
}

const char* to_string(ModeRegion region) {
  switch (region) {
    case ModeRegion::FarLeft: return "far_left";
    case ModeRegion::NearLeftRising: return "near_left_rising";
    case ModeRegion::NearLeftFalling: return "near_left_falling";
    case ModeRegion::NearRightFalling: return "near_right_falling";
    case ModeRegion::NearRightRising: return "near_right_rising";
    case ModeRegion::FarRight: return "far_right";
    default: return "empty_dwell";
  }
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::QueueEmpty: return "queue_empty";
    case EventKind::RegionCross: return "region_cross";
    case EventKind::SwitchingPoint: return "switch";
    case EventKind::BoundaryReflect: return "boundary_reflect";
    default: return "horizon_end";
  }
}

bool operator==(PointMode a, PointMode b) {
  return a.direction == b.direction && a.region == b.region;
}

double Trajectory::state_at(double t, std::span<double> uncertainty) const {
  if (!recorded()) throw std::invalid_argument("trajectory holds no segments");
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double value, const Segment& seg) {
                               return value < seg.t_begin;
                             });
  if (it != segments.begin()) --it;
  const Segment& seg = *it;
  const double dt = std::clamp(t, seg.t_begin, seg.t_end) - seg.t_begin;
  if (!uncertainty.empty()) {
    for (std::size_t i = 0; i < seg.points.size() && i < uncertainty.size(); ++i) {
      const PointSegment& p = seg.points[i];
      uncertainty[i] = p.value + dt * (p.rate + dt * p.accel);
    }
  }
  return seg.s_begin + seg.u * dt;
}

double cost(const Trajectory& trajectory) {
  if (!trajectory.recorded())
    throw std::invalid_argument("trajectory holds no segments");
  double integral = 0.0;
  for (const Segment& seg : trajectory.segments) {
    const double dt = seg.duration();
    for (const PointSegment& p : seg.points)
      integral += dt * (p.value + dt * (p.rate / 2.0 + dt * p.accel / 3.0));
  }
  return integral / trajectory.config.horizon;
}

}  // namespace permon
