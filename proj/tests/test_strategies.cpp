#include <doctest.h>

#include <algorithm>

#include "jitkit/strategies.hpp"
#include "support.hpp"

using namespace jitkit;
using jitkit::testing::source_path;

namespace {

Scenario balanced_stool() {
  Scenario s = load_scenario(source_path("scenarios/stool.json"));
  std::vector<Task> tasks = s.graph.tasks();
  for (auto& t : tasks) t.human_duration = t.robot_duration = 10.0;
  return make_scenario(s.part_types, s.parts, tasks, s.tray);
}

std::vector<std::vector<TaskId>> run_to_completion(Strategy strategy, const Scenario& s,
                                                   const PlannerConfig& c) {
  PlannerState st;
  LayoutCache cache;
  while (auto req = strategy_next_kit(strategy, st, s, c, &cache)) {
    st.completed_segments.push_back(req->segment);
    REQUIRE(st.completed_segments.size() <= s.graph.size());
  }
  return st.completed_segments;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (Strategy s : kAllStrategies) CHECK(parse_strategy(to_string(s)) == s);
  CHECK_THROWS_AS(parse_strategy("fastest"), std::invalid_argument);
}

TEST_CASE("whole_assembly is one kit in topological order") {
  const Scenario s = balanced_stool();
  const auto kits = run_to_completion(Strategy::whole_assembly, s, {});
  REQUIRE(kits.size() == 1);
  CHECK(kits[0] == std::vector<TaskId>{"a1", "a2", "a3"});
}

TEST_CASE("single_task kits one vertex at a time") {
  const Scenario s = balanced_stool();
  const auto kits = run_to_completion(Strategy::single_task, s, {});
  CHECK(kits == std::vector<std::vector<TaskId>>{{"a1"}, {"a2"}, {"a3"}});
}

TEST_CASE("optimized on the balanced stool starts with a1") {
  const Scenario s = balanced_stool();
  PlannerConfig c;
  c.abs_sync_terms = true;
  c.weights.w2_coverage = 1e-3;
  c.weights.w5_kit_fitness = 0.0;
  const auto kits = run_to_completion(Strategy::optimized, s, c);
  CHECK(kits.size() >= 2);
  CHECK(kits.front() == std::vector<TaskId>{"a1"});
}

TEST_CASE("kit requests carry parts and in-tray layouts") {
  const Scenario s = load_scenario(source_path("scenarios/table_12task.json"));
  LayoutCache cache;
  for (Strategy strategy : kAllStrategies) {
    const auto req = strategy_next_kit(strategy, {}, s, {}, &cache);
    REQUIRE(req);
    CHECK(req->parts == parts_of(req->segment, s.graph));
    REQUIRE(req->layout);
    CHECK(req->layout->placements.size() == req->parts.size());
    if (strategy != Strategy::whole_assembly) {
      CHECK(containment_violation(*req->layout, s.catalog) == 0.0);
      CHECK(overlap_area(*req->layout, s.catalog) <= kOverlapTolerance);
    }
  }
}

TEST_CASE("grid_layout groups by type without overlap") {
  const Scenario s = load_scenario(source_path("scenarios/table_12task.json"));
  std::vector<PartId> all;
  for (const auto& p : s.parts) all.push_back(p.id);
  const KitLayout l = grid_layout(all, s.catalog, s.tray);
  CHECK(l.placements.size() == all.size());
  CHECK(overlap_area(l, s.catalog) <= kOverlapTolerance);
  CHECK(containment_violation(l, s.catalog) == 0.0);
}
