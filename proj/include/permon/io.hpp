#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "permon/ipa.hpp"
#include "permon/model.hpp"
#include "permon/optimize.hpp"
#include "permon/receding.hpp"
#include "permon/trajectory.hpp"

namespace permon {

enum class ConfigErrorCode {
  Parse,
  MissingField,
  BadType,
  BadValue,
  NegativeValue,
  EmptyPoints,
  UnsortedPoints,
  ServiceRateBound,  // service rate must exceed every inflow rate
  BadSchedule,
  Io,
};

const char* to_string(ConfigErrorCode code);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorCode code, std::string path, const std::string& message);

  ConfigErrorCode code;
  std::string path;  // JSON pointer (or file path for Io)
};

struct ParsedConfig {
  MissionConfig mission;
  std::optional<SwitchingSchedule> schedule;
  std::optional<OptimizerSettings> optimizer;
  std::optional<RhSettings> rh;
};

ParsedConfig parse_config(const std::string& text);
ParsedConfig load_config(const std::filesystem::path& path);

// Explicit-points document; parse_config(serialize_config(c)).mission == c.
std::string serialize_config(const MissionConfig& config);

struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::filesystem::path output_dir;
  double sample_dt = 0.0;  // 0 picks horizon / 1000
};

// trajectory.csv: header t,s,R_1..R_M; one row per event time plus a uniform
// sample grid, sorted and de-duplicated. Deterministic byte-for-byte.
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& trajectory, double sample_dt);

// events.csv: t,kind,detail.
void write_events_csv(const std::filesystem::path& path,
                      const Trajectory& trajectory);

void write_summary_json(const std::filesystem::path& path,
                        const nlohmann::ordered_json& summary);

nlohmann::ordered_json summary_for_simulate(const Trajectory& trajectory,
                                            const RunManifest& manifest);
nlohmann::ordered_json summary_for_optimize(const OptimizerReport& report,
                                            const RunManifest& manifest);
nlohmann::ordered_json summary_for_rh(const RhResult& result,
                                      const RhSettings& settings,
                                      const RunManifest& manifest);
nlohmann::ordered_json summary_for_gradcheck(const SwitchingSchedule& schedule,
                                             const IpaResult& ipa,
                                             const FdResult& fd,
                                             const RunManifest& manifest);

// All files for one run into manifest.output_dir (created if missing).
void export_run(const RunManifest& manifest, const Trajectory& trajectory,
                const nlohmann::ordered_json& summary);

}  // namespace permon
