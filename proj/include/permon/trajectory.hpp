#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "permon/model.hpp"

namespace permon {

// Where the agent sits relative to one point's sensing geometry. The five
// boundaries are position -r, -w, 0, +w, +r (relative to the point) with
// w = r * (1 - inflow / service): inside (-w, +w) the queue drains, in the
// outer covered bands it still grows, outside the range it grows at the
// inflow rate. EmptyDwell marks a drained queue held at zero.
enum class ModeRegion : std::uint8_t {
  FarLeft,
  NearLeftRising,
  NearLeftFalling,
  NearRightFalling,
  NearRightRising,
  FarRight,
  EmptyDwell,
};

enum class ModeClass : std::uint8_t {
  Pinned,        // held at zero, rate 0
  OutOfRange,    // rate = inflow
  InRangeLeft,   // agent left of the point, dp/ds = +1/r
  InRangeRight,  // agent right of the point, dp/ds = -1/r
};

ModeClass mode_class(ModeRegion region);
const char* to_string(ModeRegion region);

struct PointMode {
  int direction = 1;  // sign of the control when classified
  ModeRegion region = ModeRegion::FarLeft;
};

bool operator==(PointMode a, PointMode b);

// Coincident events are processed in enumerator order; a switch is applied
// after same-time crossings so region bookkeeping uses the pre-switch
// direction, and a reflection last so it sees the post-switch one.
enum class EventKind : std::uint8_t {
  QueueEmpty,       // a queue reached zero
  RegionCross,      // the agent crossed one of a point's sensing boundaries
  SwitchingPoint,   // the agent reached the next switching location
  BoundaryReflect,  // the agent reached 0 or length with the schedule spent
  HorizonEnd,
};

const char* to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::HorizonEnd;
  // QueueEmpty / RegionCross: point index. SwitchingPoint: 0-based schedule
  // index. BoundaryReflect: 0 = lower end, 1 = upper end.
  int index = 0;
  // RegionCross: boundary id 0..4 (-r, -w, 0, +w, +r).
  int detail = 0;
};

// One queue over one segment: value + rate*dt + accel*dt^2.
struct PointSegment {
  double value = 0.0;
  double rate = 0.0;
  double accel = 0.0;
  PointMode mode;
};

// Between consecutive events: constant control, affine rates.
struct Segment {
  double t_begin = 0.0;
  double t_end = 0.0;
  double s_begin = 0.0;
  double u = 1.0;
  std::vector<PointSegment> points;

  double duration() const { return t_end - t_begin; }
  double s_end() const { return s_begin + u * duration(); }
};

struct Trajectory {
  MissionConfig config;
  SwitchingSchedule schedule;
  std::vector<Segment> segments;  // empty for cost-only runs
  std::vector<Event> events;      // empty for cost-only runs
  double cost = 0.0;              // time-averaged total uncertainty
  double s_end = 0.0;
  // Consumption record per switching location (-1 when unreached).
  std::vector<double> switch_time;
  std::vector<int> switch_direction;  // control sign just before the flip
  bool touched_lower = false;  // s at the lower end for some t > 0
  bool touched_upper = false;
  std::vector<std::string> warnings;

  bool recorded() const { return !segments.empty(); }
  bool interior() const { return !touched_lower && !touched_upper; }
  // s at time t; fills the queue values when `uncertainty` is non-empty.
  // Requires a recorded trajectory.
  double state_at(double t, std::span<double> uncertainty) const;
};

// Exact integral cost recomputed from the stored segments; equals the cost
// field of the producing run. Throws on a cost-only trajectory.
double cost(const Trajectory& trajectory);

}  // namespace permon
