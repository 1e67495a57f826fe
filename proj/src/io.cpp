#include "permon/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace permon {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

[[noreturn]] void fail(ConfigErrorCode code, const std::string& path,
                       const std::string& message) {
  throw ConfigError(code, path, message);
}

const json& field(const json& node, const char* key, const std::string& path) {
  auto it = node.find(key);
  if (it == node.end())
    fail(ConfigErrorCode::MissingField, path + "/" + key, "missing required field");
  return *it;
}

double number(const json& node, const std::string& path) {
  if (!node.is_number())
    fail(ConfigErrorCode::BadType, path, "expected a number");
  return node.get<double>();
}

double positive(const json& node, const std::string& path) {
  const double value = number(node, path);
  if (!(value > 0.0) || !std::isfinite(value)) {
    if (value < 0.0) fail(ConfigErrorCode::NegativeValue, path, "value must be positive");
    fail(ConfigErrorCode::BadValue, path, "value must be positive and finite");
  }
  return value;
}

int integer(const json& node, const std::string& path) {
  if (!node.is_number_integer())
    fail(ConfigErrorCode::BadType, path, "expected an integer");
  return node.get<int>();
}

SamplePoint parse_point(const json& node, const std::string& path) {
  if (!node.is_object()) fail(ConfigErrorCode::BadType, path, "expected an object");
  SamplePoint point;
  point.position = number(field(node, "alpha", path), path + "/alpha");
  point.inflow_rate = positive(field(node, "A", path), path + "/A");
  point.initial_uncertainty = number(field(node, "R0", path), path + "/R0");
  if (point.initial_uncertainty < 0.0)
    fail(ConfigErrorCode::NegativeValue, path + "/R0",
         "initial uncertainty must be nonnegative");
  if (auto it = node.find("inflow_schedule"); it != node.end()) {
    if (!it->is_array())
      fail(ConfigErrorCode::BadType, path + "/inflow_schedule", "expected an array");
    int k = 0;
    for (const json& entry : *it) {
      const std::string at = path + "/inflow_schedule/" + std::to_string(k++);
      InflowStep step;
      step.time = number(field(entry, "t", at), at + "/t");
      step.rate = positive(field(entry, "A", at), at + "/A");
      point.inflow_schedule.push_back(step);
    }
  }
  return point;
}

OptimizerSettings parse_optimizer(const json& node, const std::string& path) {
  OptimizerSettings settings;
  if (auto it = node.find("eps"); it != node.end())
    settings.grad_tolerance = positive(*it, path + "/eps");
  if (auto it = node.find("max_iters"); it != node.end())
    settings.max_iterations = integer(*it, path + "/max_iters");
  if (auto it = node.find("max_growth"); it != node.end())
    settings.max_growth = integer(*it, path + "/max_growth");
  if (auto it = node.find("armijo"); it != node.end()) {
    const std::string at = path + "/armijo";
    if (auto f = it->find("eta0"); f != it->end())
      settings.armijo.initial_step = positive(*f, at + "/eta0");
    if (auto f = it->find("beta"); f != it->end()) {
      settings.armijo.backtrack = number(*f, at + "/beta");
      if (settings.armijo.backtrack <= 0.0 || settings.armijo.backtrack >= 1.0)
        fail(ConfigErrorCode::BadValue, at + "/beta", "beta must lie in (0, 1)");
    }
    if (auto f = it->find("c"); f != it->end()) {
      settings.armijo.sufficient_decrease = number(*f, at + "/c");
      if (settings.armijo.sufficient_decrease <= 0.0 ||
          settings.armijo.sufficient_decrease >= 1.0)
        fail(ConfigErrorCode::BadValue, at + "/c", "c must lie in (0, 1)");
    }
    if (auto f = it->find("max_backtracks"); f != it->end())
      settings.armijo.max_backtracks = integer(*f, at + "/max_backtracks");
  }
  return settings;
}

RhSettings parse_rh(const json& node, const std::string& path) {
  RhSettings settings;
  if (auto it = node.find("H"); it != node.end())
    settings.planning_horizon = positive(*it, path + "/H");
  if (auto it = node.find("h"); it != node.end())
    settings.action_horizon = positive(*it, path + "/h");
  if (auto it = node.find("binary"); it != node.end()) {
    if (!it->is_boolean()) fail(ConfigErrorCode::BadType, path + "/binary", "expected a bool");
    settings.search = it->get<bool>() ? ControlSearch::Binary : ControlSearch::Continuous;
  }
  if (auto it = node.find("grid_points"); it != node.end())
    settings.grid_points = integer(*it, path + "/grid_points");
  return settings;
}

}  // namespace

const char* to_string(ConfigErrorCode code) {
  switch (code) {
    case ConfigErrorCode::Parse: return "parse_error";
    case ConfigErrorCode::MissingField: return "missing_field";
    case ConfigErrorCode::BadType: return "bad_type";
    case ConfigErrorCode::BadValue: return "bad_value";
    case ConfigErrorCode::NegativeValue: return "negative_value";
    case ConfigErrorCode::EmptyPoints: return "empty_points";
    case ConfigErrorCode::UnsortedPoints: return "unsorted_points";
    case ConfigErrorCode::ServiceRateBound: return "service_rate_bound";
    case ConfigErrorCode::BadSchedule: return "bad_schedule";
    default: return "io_error";
  }
}

ConfigError::ConfigError(ConfigErrorCode code_, std::string path_,
                         const std::string& message)
    : std::runtime_error(path_.empty() ? message : path_ + ": " + message),
      code(code_),
      path(std::move(path_)) {}

ParsedConfig parse_config(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& error) {
    fail(ConfigErrorCode::Parse, "byte " + std::to_string(error.byte), error.what());
  }
  if (!document.is_object())
    fail(ConfigErrorCode::BadType, "", "config must be a JSON object");
  if (auto it = document.find("schema"); it != document.end()) {
    if (!it->is_number_integer() || it->get<int>() != 1)
      fail(ConfigErrorCode::BadValue, "/schema", "unsupported schema version");
  }

  ParsedConfig parsed;
  MissionConfig& mission = parsed.mission;
  mission.length = positive(field(document, "L", ""), "/L");
  mission.sensing_range = positive(field(document, "r", ""), "/r");
  mission.service_rate = positive(field(document, "B", ""), "/B");
  mission.horizon = positive(field(document, "T", ""), "/T");

  const bool has_uniform = document.contains("uniform");
  const bool has_points = document.contains("points");
  if (has_uniform && has_points)
    fail(ConfigErrorCode::BadValue, "/points", "give either uniform or points, not both");
  if (!has_uniform && !has_points)
    fail(ConfigErrorCode::MissingField, "/points", "missing required field");
  if (has_uniform) {
    const json& u = document["uniform"];
    const int count = integer(field(u, "M", "/uniform"), "/uniform/M");
    if (count < 1) fail(ConfigErrorCode::EmptyPoints, "/uniform/M", "need at least one point");
    const double inflow = positive(field(u, "A", "/uniform"), "/uniform/A");
    const double r0 = number(field(u, "R0", "/uniform"), "/uniform/R0");
    if (r0 < 0.0)
      fail(ConfigErrorCode::NegativeValue, "/uniform/R0",
           "initial uncertainty must be nonnegative");
    for (int i = 0; i < count; ++i) {
      SamplePoint point;
      point.position = count == 1 ? 0.5 * mission.length
                                  : mission.length * static_cast<double>(i) / (count - 1);
      point.inflow_rate = inflow;
      point.initial_uncertainty = r0;
      mission.points.push_back(point);
    }
  } else {
    const json& points = document["points"];
    if (!points.is_array()) fail(ConfigErrorCode::BadType, "/points", "expected an array");
    if (points.empty()) fail(ConfigErrorCode::EmptyPoints, "/points", "points must be nonempty");
    int i = 0;
    for (const json& node : points)
      mission.points.push_back(parse_point(node, "/points/" + std::to_string(i++)));
  }

  for (std::size_t i = 0; i < mission.points.size(); ++i) {
    const std::string at = "/points/" + std::to_string(i);
    const SamplePoint& point = mission.points[i];
    if (point.position < 0.0 || point.position > mission.length)
      fail(ConfigErrorCode::BadValue, at + "/alpha", "position outside the mission interval");
    if (i > 0 && point.position < mission.points[i - 1].position)
      fail(ConfigErrorCode::UnsortedPoints, at + "/alpha", "positions must be nondecreasing");
    if (point.inflow_rate >= mission.service_rate)
      fail(ConfigErrorCode::ServiceRateBound, at + "/A",
           "service rate must exceed the inflow rate");
    for (const InflowStep& step : point.inflow_schedule)
      if (step.rate >= mission.service_rate)
        fail(ConfigErrorCode::ServiceRateBound, at + "/inflow_schedule",
             "service rate must exceed every scheduled inflow");
  }
  try {
    mission.validate();
  } catch (const std::invalid_argument& error) {
    fail(ConfigErrorCode::BadValue, "", error.what());
  }

  if (auto it = document.find("theta"); it != document.end()) {
    if (!it->is_array()) fail(ConfigErrorCode::BadType, "/theta", "expected an array");
    SwitchingSchedule schedule;
    int j = 0;
    for (const json& node : *it)
      schedule.locations.push_back(number(node, "/theta/" + std::to_string(j++)));
    try {
      schedule.validate(mission.length);
    } catch (const std::invalid_argument& error) {
      fail(ConfigErrorCode::BadSchedule, "/theta", error.what());
    }
    parsed.schedule = std::move(schedule);
  }
  if (auto it = document.find("optimizer"); it != document.end())
    parsed.optimizer = parse_optimizer(*it, "/optimizer");
  if (auto it = document.find("rh"); it != document.end())
    parsed.rh = parse_rh(*it, "/rh");
  return parsed;
}

ParsedConfig load_config(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input)
    fail(ConfigErrorCode::Io, path.string(), "cannot open config file");
  std::ostringstream buffer;
  buffer << input.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const MissionConfig& config) {
  ordered_json document;
  document["schema"] = 1;
  document["L"] = config.length;
  document["r"] = config.sensing_range;
  document["B"] = config.service_rate;
  document["T"] = config.horizon;
  ordered_json points = ordered_json::array();
  for (const SamplePoint& point : config.points) {
    ordered_json node;
    node["alpha"] = point.position;
    node["A"] = point.inflow_rate;
    node["R0"] = point.initial_uncertainty;
    if (!point.inflow_schedule.empty()) {
      ordered_json steps = ordered_json::array();
      for (const InflowStep& step : point.inflow_schedule)
        steps.push_back({{"t", step.time}, {"A", step.rate}});
      node["inflow_schedule"] = std::move(steps);
    }
    points.push_back(std::move(node));
  }
  document["points"] = std::move(points);
  return document.dump(2) + "\n";
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& trajectory, double sample_dt) {
  if (!trajectory.recorded())
    throw ConfigError(ConfigErrorCode::Io, path.string(),
                      "trajectory holds no segments to export");
  const double horizon = trajectory.config.horizon;
  if (!(sample_dt > 0.0)) sample_dt = horizon / 1000.0;
  std::vector<double> times;
  for (const Segment& seg : trajectory.segments) times.push_back(seg.t_begin);
  times.push_back(horizon);
  const long samples = std::lround(std::floor(horizon / sample_dt));
  for (long k = 0; k <= samples; ++k) times.push_back(std::min(horizon, k * sample_dt));
  std::sort(times.begin(), times.end());
  const double dedup_tol = 1e-12 * std::max(1.0, horizon);
  times.erase(std::unique(times.begin(), times.end(),
                          [&](double a, double b) { return std::abs(a - b) <= dedup_tol; }),
              times.end());

  std::ofstream out(path);
  if (!out) throw ConfigError(ConfigErrorCode::Io, path.string(), "cannot open for writing");
  out << "t,s";
  for (std::size_t i = 1; i <= trajectory.config.point_count(); ++i) out << ",R_" << i;
  out << "\n";
  std::vector<double> uncertainty(trajectory.config.point_count());
  for (double t : times) {
    const double s = trajectory.state_at(t, uncertainty);
    out << fmt(t) << ',' << fmt(s);
    for (double value : uncertainty) out << ',' << fmt(value);
    out << "\n";
  }
  if (!out) throw ConfigError(ConfigErrorCode::Io, path.string(), "write failed");
}

void write_events_csv(const std::filesystem::path& path,
                      const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw ConfigError(ConfigErrorCode::Io, path.string(), "cannot open for writing");
  out << "t,kind,detail\n";
  for (const Event& event : trajectory.events) {
    out << fmt(event.time) << ',' << to_string(event.kind) << ',';
    switch (event.kind) {
      case EventKind::QueueEmpty:
        out << "i=" << event.index + 1;
        break;
      case EventKind::RegionCross:
        out << "i=" << event.index + 1 << " boundary=" << event.detail;
        break;
      case EventKind::SwitchingPoint:
        out << "j=" << event.index + 1;
        break;
      case EventKind::BoundaryReflect:
        out << "at=" << (event.index == 1 ? "length" : "0");
        break;
      case EventKind::HorizonEnd:
        out << "-";
        break;
    }
    out << "\n";
  }
  if (!out) throw ConfigError(ConfigErrorCode::Io, path.string(), "write failed");
}

void write_summary_json(const std::filesystem::path& path,
                        const ordered_json& summary) {
  std::ofstream out(path);
  if (!out) throw ConfigError(ConfigErrorCode::Io, path.string(), "cannot open for writing");
  out << summary.dump(2) << "\n";
  if (!out) throw ConfigError(ConfigErrorCode::Io, path.string(), "write failed");
}

namespace {

ordered_json manifest_echo(const RunManifest& manifest) {
  ordered_json echo;
  echo["subcommand"] = manifest.subcommand;
  echo["config"] = manifest.config_path;
  if (manifest.sample_dt > 0.0) echo["sample_dt"] = manifest.sample_dt;
  return echo;
}

ordered_json theta_json(const SwitchingSchedule& schedule) {
  return ordered_json(schedule.locations);
}

}  // namespace

ordered_json summary_for_simulate(const Trajectory& trajectory,
                                  const RunManifest& manifest) {
  ordered_json summary;
  summary["J"] = trajectory.cost;
  summary["theta"] = theta_json(trajectory.schedule);
  summary["N"] = trajectory.schedule.size();
  summary["s_end"] = trajectory.s_end;
  summary["events"] = trajectory.events.size();
  summary["touched_boundary"] = !trajectory.interior();
  if (!trajectory.warnings.empty()) summary["warnings"] = trajectory.warnings;
  summary["settings"] = manifest_echo(manifest);
  return summary;
}

ordered_json summary_for_optimize(const OptimizerReport& report,
                                  const RunManifest& manifest) {
  ordered_json summary;
  summary["J"] = report.cost;
  summary["theta"] = theta_json(report.theta);
  summary["N"] = report.theta.size();
  ordered_json iterations = ordered_json::array();
  ordered_json n_history = ordered_json::array();
  for (const PhaseTrace& phase : report.phases) {
    iterations.push_back(phase.cost_history.size() - 1);
    n_history.push_back(phase.switch_count);
  }
  summary["iterations"] = std::move(iterations);
  summary["N_history"] = std::move(n_history);
  summary["grad_norm"] = report.grad_norm;
  summary["converged"] = report.converged;
  summary["interior"] = report.boundary_free;
  summary["J_history"] = report.cost_history_flat();
  if (!report.growth_cost_delta.empty())
    summary["growth_cost_delta"] = report.growth_cost_delta;
  if (!report.warnings.empty()) summary["warnings"] = report.warnings;
  summary["settings"] = manifest_echo(manifest);
  return summary;
}

ordered_json summary_for_rh(const RhResult& result, const RhSettings& settings,
                            const RunManifest& manifest) {
  ordered_json summary;
  summary["J"] = result.trajectory.cost;
  summary["H"] = settings.planning_horizon;
  summary["h"] = settings.action_horizon;
  summary["mode"] = settings.search == ControlSearch::Binary ? "binary" : "continuous";
  summary["steps"] = result.controls.size();
  summary["controls"] = result.controls;
  summary["control_times"] = result.control_times;
  if (!result.trajectory.warnings.empty())
    summary["warnings"] = result.trajectory.warnings;
  summary["settings"] = manifest_echo(manifest);
  return summary;
}

ordered_json summary_for_gradcheck(const SwitchingSchedule& schedule,
                                   const IpaResult& ipa, const FdResult& fd,
                                   const RunManifest& manifest) {
  ordered_json summary;
  summary["theta"] = theta_json(schedule);
  ordered_json components = ordered_json::array();
  double max_rel = 0.0;
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    ordered_json row;
    row["ipa"] = ipa.gradient[j];
    if (fd.skipped[j]) {
      row["skipped"] = true;
    } else {
      row["fd"] = fd.gradient[j];
      const double rel = gradient_agreement_error(ipa.gradient[j], fd.gradient[j], fd);
      row["rel_err"] = rel;
      max_rel = std::max(max_rel, rel);
    }
    components.push_back(std::move(row));
  }
  summary["components"] = std::move(components);
  summary["max_rel_err"] = max_rel;
  if (ipa.checks_run) {
    summary["general_form_deviation"] = ipa.general_form_deviation;
    summary["boundary_term_deviation"] = ipa.boundary_term_deviation;
  }
  if (!fd.notes.empty()) summary["notes"] = fd.notes;
  if (!ipa.warnings.empty()) summary["warnings"] = ipa.warnings;
  summary["settings"] = manifest_echo(manifest);
  return summary;
}

void export_run(const RunManifest& manifest, const Trajectory& trajectory,
                const ordered_json& summary) {
  std::error_code ec;
  std::filesystem::create_directories(manifest.output_dir, ec);
  if (ec)
    throw ConfigError(ConfigErrorCode::Io, manifest.output_dir.string(),
                      "cannot create output directory: " + ec.message());
  if (trajectory.recorded())
    write_trajectory_csv(manifest.output_dir / "trajectory.csv", trajectory,
                         manifest.sample_dt);
  write_events_csv(manifest.output_dir / "events.csv", trajectory);
  write_summary_json(manifest.output_dir / "summary.json", summary);
}

}  // namespace permon
