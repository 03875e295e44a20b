#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "jitkit/task_model.hpp"

namespace jitkit::testing {

inline std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(JITKIT_SOURCE_DIR) / relative;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("jitkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct RandomScenarioOptions {
  int min_tasks = 1;
  int max_tasks = 8;
  double edge_probability = 0.35;
  int max_parts_per_task = 2;
  bool integer_durations = true;
  bool empirical = false;  // empirical duration lists instead of fixed values
};

/// Random DAG over t0..t{n-1} (edges only from lower to higher index), each task holding
/// up to max_parts_per_task fresh parts of three small part types on a roomy tray.
inline Scenario random_scenario(std::mt19937_64& rng, const RandomScenarioOptions& opt = {}) {
  std::uniform_int_distribution<int> task_count(opt.min_tasks, opt.max_tasks);
  std::uniform_int_distribution<int> part_count(0, opt.max_parts_per_task);
  std::uniform_int_distribution<int> type_pick(0, 2);
  std::uniform_int_distribution<int> secs(1, 30);
  std::bernoulli_distribution edge(opt.edge_probability);

  std::vector<PartType> types = {{"bolt", "Bolt", 10, 30}, {"plate", "Plate", 40, 25},
                                 {"rod", "Rod", 15, 60}};
  const int n = task_count(rng);
  std::vector<PartInstance> parts;
  std::vector<Task> tasks;
  auto duration = [&]() -> Duration {
    if (!opt.empirical) return static_cast<double>(secs(rng));
    EmpiricalDuration e;
    for (int k = 0; k < 5; ++k) e.samples.push_back(static_cast<double>(secs(rng)));
    return e;
  };
  for (int i = 0; i < n; ++i) {
    Task t;
    t.id = "t" + std::to_string(i);
    t.name = "task " + std::to_string(i);
    t.human_duration = duration();
    t.robot_duration = duration();
    for (int j = 0; j < i; ++j) {
      if (edge(rng)) t.predecessors.push_back("t" + std::to_string(j));
    }
    const int k = part_count(rng);
    for (int p = 0; p < k; ++p) {
      PartInstance inst{t.id + "_p" + std::to_string(p), types[type_pick(rng)].id};
      t.required_parts.push_back(inst.id);
      parts.push_back(inst);
    }
    tasks.push_back(std::move(t));
  }
  return make_scenario(types, parts, tasks, Tray{300, 300});
}

}  // namespace jitkit::testing
