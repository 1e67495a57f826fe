#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "permon/io.hpp"
#include "permon/ipa.hpp"
#include "permon/optimize.hpp"
#include "permon/receding.hpp"
#include "permon/sim.hpp"

namespace {

using permon::ConfigError;
using permon::ConfigErrorCode;

permon::SwitchingSchedule parse_theta_flag(const std::string& text,
                                           double length) {
  permon::SwitchingSchedule schedule;
  std::string token;
  std::stringstream stream(text);
  while (std::getline(stream, token, ',')) {
    try {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      schedule.locations.push_back(value);
    } catch (const std::exception&) {
      throw ConfigError(ConfigErrorCode::BadValue, "--theta",
                        "cannot parse '" + token + "' as a number");
    }
  }
  try {
    schedule.validate(length);
  } catch (const std::invalid_argument& error) {
    throw ConfigError(ConfigErrorCode::BadSchedule, "--theta", error.what());
  }
  return schedule;
}

void print_rounded(const char* label, double value) {
  std::printf("%s %.4f\n", label, value);
}

std::string join_rounded(const std::vector<double>& values) {
  std::string out;
  char buffer[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.4f", values[i]);
    if (i) out += ", ";
    out += buffer;
  }
  return out;
}

// Feasible schedule drawn for gradient checking when none is supplied.
permon::SwitchingSchedule random_schedule(const permon::MissionConfig& config,
                                          unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 4);
  const int n = count(rng);
  permon::SwitchingSchedule schedule;
  double upper = std::uniform_real_distribution<double>(
      0.3 * config.length, 0.95 * config.length)(rng);
  schedule.locations.push_back(upper);
  for (int j = 1; j < n; ++j) {
    if (j % 2 == 1) {
      std::uniform_real_distribution<double> lower(0.02 * config.length,
                                                   schedule.locations.back());
      schedule.locations.push_back(lower(rng));
    } else {
      std::uniform_real_distribution<double> next(schedule.locations.back(),
                                                  0.98 * config.length);
      schedule.locations.push_back(next(rng));
    }
  }
  return schedule;
}

int run(int argc, char** argv) {
  CLI::App app{"Event-driven persistent-monitoring solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string theta_text;
  std::string out_dir = "out";
  double sample_dt = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "mission config (JSON)")->required();
    cmd->add_option("--theta", theta_text, "switching locations a,b,c");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--sample-dt", sample_dt, "trajectory export sampling step");
  };

  CLI::App* cmd_simulate = app.add_subcommand("simulate", "run one schedule");
  add_common(cmd_simulate);

  CLI::App* cmd_optimize =
      app.add_subcommand("optimize", "descend to a locally optimal schedule");
  add_common(cmd_optimize);
  double eps = -1.0;
  int max_iters = -1;
  cmd_optimize->add_option("--eps", eps, "projected-gradient stopping norm");
  cmd_optimize->add_option("--max-iters", max_iters, "iteration cap per phase");

  CLI::App* cmd_rh = app.add_subcommand("rh", "receding-horizon closed loop");
  add_common(cmd_rh);
  double horizon_flag = -1.0, action_flag = -1.0;
  bool binary_control = true;
  cmd_rh->add_option("--horizon", horizon_flag, "planning window length");
  cmd_rh->add_option("--action", action_flag, "control application interval");
  cmd_rh->add_flag("--binary-control,!--continuous-control", binary_control,
                   "restrict the window search to full-speed controls");

  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "compare exact and finite-difference gradients");
  add_common(cmd_gradcheck);
  unsigned seed = 1;
  double fd_step = -1.0;
  cmd_gradcheck->add_option("--seed", seed, "sampling seed when --theta is absent");
  cmd_gradcheck->add_option("--fd-step", fd_step, "central-difference step");

  CLI11_PARSE(app, argc, argv);

  permon::ParsedConfig parsed = permon::load_config(config_path);
  const permon::MissionConfig& mission = parsed.mission;
  std::optional<permon::SwitchingSchedule> theta = parsed.schedule;
  if (!theta_text.empty()) theta = parse_theta_flag(theta_text, mission.length);

  permon::RunManifest manifest;
  manifest.config_path = config_path;
  manifest.output_dir = out_dir;
  manifest.sample_dt = sample_dt;

  if (cmd_simulate->parsed()) {
    manifest.subcommand = "simulate";
    if (!theta)
      throw ConfigError(ConfigErrorCode::MissingField, "/theta",
                        "simulate needs a schedule (config theta or --theta)");
    const permon::Trajectory trajectory = permon::simulate(mission, *theta);
    permon::export_run(manifest, trajectory,
                       permon::summary_for_simulate(trajectory, manifest));
    print_rounded("J =", trajectory.cost);
    std::printf("theta = [%s]\n", join_rounded(theta->locations).c_str());
    return 0;
  }

  if (cmd_optimize->parsed()) {
    manifest.subcommand = "optimize";
    permon::OptimizerSettings settings =
        parsed.optimizer.value_or(permon::OptimizerSettings{});
    if (eps > 0.0) settings.grad_tolerance = eps;
    if (max_iters > 0) settings.max_iterations = max_iters;
    const permon::OptimizerReport report =
        permon::optimize(mission, theta, settings);
    const permon::Trajectory trajectory = permon::simulate(mission, report.theta);
    permon::export_run(manifest, trajectory,
                       permon::summary_for_optimize(report, manifest));
    print_rounded("J* =", report.cost);
    std::printf("theta* = [%s]  (N = %zu)\n",
                join_rounded(report.theta.locations).c_str(), report.theta.size());
    return 0;
  }

  if (cmd_rh->parsed()) {
    manifest.subcommand = "rh";
    permon::RhSettings settings = parsed.rh.value_or(permon::RhSettings{});
    if (horizon_flag > 0.0) settings.planning_horizon = horizon_flag;
    if (action_flag > 0.0) settings.action_horizon = action_flag;
    settings.search = binary_control ? permon::ControlSearch::Binary
                                     : permon::ControlSearch::Continuous;
    settings = settings.resolved(mission);
    const permon::RhResult result = permon::rh_run(mission, settings);
    permon::export_run(manifest, result.trajectory,
                       permon::summary_for_rh(result, settings, manifest));
    print_rounded("J_rh =", result.trajectory.cost);
    std::printf("H = %.4f, h = %.4f, steps = %zu\n", settings.planning_horizon,
                settings.action_horizon, result.controls.size());
    return 0;
  }

  manifest.subcommand = "gradcheck";
  permon::SwitchingSchedule schedule =
      theta ? *theta : random_schedule(mission, seed);
  if (fd_step <= 0.0) fd_step = 1e-6 * mission.length;
  const permon::Trajectory trajectory = permon::simulate(mission, schedule);
  permon::IpaOptions ipa_options;
  ipa_options.check_general_form = true;
  ipa_options.check_boundary_terms = true;
  const permon::IpaResult ipa =
      permon::ipa_gradient(mission, schedule, trajectory, ipa_options);
  const permon::FdResult fd =
      permon::finite_difference_gradient(mission, schedule, fd_step);
  const nlohmann::ordered_json summary =
      permon::summary_for_gradcheck(schedule, ipa, fd, manifest);
  permon::export_run(manifest, trajectory, summary);
  std::printf("theta = [%s]\n", join_rounded(schedule.locations).c_str());
  std::printf("%-4s %-22s %-22s %-12s\n", "j", "ipa", "fd", "rel_err");
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    if (fd.skipped[j]) {
      std::printf("%-4zu %-22.12g %-22s %-12s\n", j + 1, ipa.gradient[j],
                  "(skipped)", "-");
    } else {
      std::printf("%-4zu %-22.12g %-22.12g %-12.3g\n", j + 1, ipa.gradient[j],
                  fd.gradient[j],
                  permon::gradient_agreement_error(ipa.gradient[j],
                                                   fd.gradient[j], fd));
    }
  }
  std::printf("max rel_err = %.3g\n", summary["max_rel_err"].get<double>());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& error) {
    nlohmann::ordered_json out;
    out["error"] = {{"code", permon::to_string(error.code)},
                    {"path", error.path},
                    {"message", error.what()}};
    std::cerr << out.dump() << "\n";
    return 1;
  } catch (const std::exception& error) {
    nlohmann::ordered_json out;
    out["error"] = {{"code", "runtime"}, {"message", error.what()}};
    std::cerr << out.dump() << "\n";
    return 2;
  }
}
