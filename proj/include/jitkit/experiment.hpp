#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jitkit/shopfloor_sim.hpp"

namespace jitkit {

/// Process exit codes shared by all subcommands.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,     // validate: scenario has violations
  kExitConfig = 2,      // unreadable or malformed input files
  kExitInfeasible = 3,  // no valid kit layout
  kExitRuntime = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::filesystem::path scenario_path;
  std::vector<Strategy> strategies{Strategy::whole_assembly, Strategy::single_task,
                                   Strategy::optimized};
  SimConfig sim;  // strategy and seed are set per run
  int replications = 1;
  std::filesystem::path output_dir = "out";
  std::optional<SweepGrid> sweep_grid;
  int threads = 0;
  int bootstrap_resamples = 10000;
};

/// Parses a JSON experiment document; relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Command-line overrides; unset fields leave the config untouched.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::string> strategy;
  std::optional<int> replications;
  std::optional<int> units;
  std::optional<int> threads;
  bool trace = false;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides);

/// CSV header shared by run and sweep output.
inline constexpr const char* kMetricsCsvHeader =
    "strategy,mat_leg_s,mat_foot_s,mttf_s,replication,unit,total_task_time_s,"
    "human_idle_time_s,kit_count";

std::string format_number(double value);

int cmd_validate(const std::filesystem::path& scenario_path, std::ostream& out,
                 std::ostream& err);
int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& config_path, const RunOverrides& overrides,
              std::ostream& out, std::ostream& err);

struct LayoutRequest {
  std::filesystem::path scenario_path;
  std::vector<TaskId> tasks;
  std::filesystem::path output_json = "layout.json";
  std::optional<std::filesystem::path> output_svg;
  std::optional<std::filesystem::path> config_path;  // planner block supplies CE/W6 settings
  std::optional<std::uint64_t> seed;
};

int cmd_layout(const LayoutRequest& request, std::ostream& out, std::ostream& err);

}  // namespace jitkit
