#include <CLI11.hpp>

#include <iostream>

#include "jitkit/experiment.hpp"

int main(int argc, char** argv) {
  using namespace jitkit;

  CLI::App app{"Just-in-time kitting planner and shop-floor simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario_path, "Scenario JSON")->required();

  std::string config_path;
  RunOverrides overrides;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Experiment config JSON")->required();
    sub->add_option("--seed", overrides.seed, "Base seed");
    sub->add_option("--out", overrides.output_dir, "Output directory");
    sub->add_option("--strategy", overrides.strategy,
                    "whole_assembly, single_task or optimized");
    sub->add_option("--reps", overrides.replications, "Replications");
    sub->add_option("--units", overrides.units, "Units per replication");
    sub->add_option("--threads", overrides.threads, "Worker threads (0 = all cores)");
  };
  auto* run = app.add_subcommand("run", "Simulate each strategy and write metrics.csv");
  add_run_flags(run);
  run->add_flag("--trace", overrides.trace, "Write event traces as JSON lines");
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the MAT x MTTF x strategy grid");
  add_run_flags(sweep_cmd);

  LayoutRequest layout;
  auto* layout_cmd = app.add_subcommand("layout", "Arrange the parts of the given tasks on the tray");
  layout_cmd->add_option("scenario", layout.scenario_path, "Scenario JSON")->required();
  layout_cmd->add_option("--tasks", layout.tasks, "Task ids")->required()->delimiter(',');
  layout_cmd->add_option("--out", layout.output_json, "Layout JSON output");
  layout_cmd->add_option("--svg", layout.output_svg, "Optional SVG output");
  layout_cmd->add_option("--config", layout.config_path, "Experiment config for planner settings");
  layout_cmd->add_option("--seed", layout.seed, "CE seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*validate) return cmd_validate(scenario_path, std::cout, std::cerr);
  if (*run) return cmd_run(config_path, overrides, std::cout, std::cerr);
  if (*sweep_cmd) return cmd_sweep(config_path, overrides, std::cout, std::cerr);
  if (*layout_cmd) return cmd_layout(layout, std::cout, std::cerr);
  return kExitConfig;
}
