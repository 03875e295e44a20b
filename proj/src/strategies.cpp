#include "jitkit/strategies.hpp"

#include <algorithm>
#include <stdexcept>

namespace jitkit {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::whole_assembly:
      return "whole_assembly";
    case Strategy::single_task:
      return "single_task";
    case Strategy::optimized:
      return "optimized";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown strategy \"" + std::string(name) +
                              "\" (expected whole_assembly, single_task or optimized)");
}

KitLayout grid_layout(const std::vector<PartId>& parts, const PartCatalog& catalog,
                      const Tray& tray) {
  std::vector<PartId> sorted = parts;
  std::stable_sort(sorted.begin(), sorted.end(), [&](const PartId& a, const PartId& b) {
    const auto& ea = catalog.at(a);
    const auto& eb = catalog.at(b);
    return ea.type != eb.type ? ea.type < eb.type : a < b;
  });

  KitLayout layout;
  layout.tray = tray;
  double x = 0.0, y = 0.0, row_height = 0.0;
  for (const auto& id : sorted) {
    const auto& e = catalog.at(id);
    if (x > 0.0 && x + e.width > tray.width) {
      x = 0.0;
      y += row_height;
      row_height = 0.0;
    }
    layout.placements.push_back(PartPlacement{id, x + e.width / 2, y + e.height / 2, 0.0});
    x += e.width;
    row_height = std::max(row_height, e.height);
  }
  return layout;
}

namespace {

KitRequest fixed_request(std::vector<TaskId> segment, const Scenario& scenario) {
  KitRequest req;
  req.parts = parts_of(segment, scenario.graph);
  req.layout = grid_layout(req.parts, scenario.catalog, scenario.tray);
  req.segment = std::move(segment);
  return req;
}

}  // namespace

std::optional<KitRequest> strategy_next_kit(Strategy strategy, const PlannerState& state,
                                            const Scenario& scenario,
                                            const PlannerConfig& config, LayoutCache* cache) {
  const TaskSet done = state.completed();
  std::vector<TaskId> remaining;
  for (const auto& id : topological_order(scenario.graph)) {
    if (!done.count(id)) remaining.push_back(id);
  }
  if (remaining.empty()) return std::nullopt;

  switch (strategy) {
    case Strategy::whole_assembly:
      return fixed_request(std::move(remaining), scenario);

    case Strategy::single_task: {
      // Lexicographically smallest allowed task.
      std::optional<TaskId> next;
      for (const auto& id : remaining) {
        if (allowed(id, done, scenario.graph) && (!next || id < *next)) next = id;
      }
      if (!next) throw std::logic_error("single_task: no allowed task remains");
      return fixed_request({*next}, scenario);
    }

    case Strategy::optimized: {
      SegmentDecision d = solve_segment(state, scenario, config, cache);
      KitRequest req;
      req.parts = parts_of(d.segment, scenario.graph);
      req.layout = std::move(d.layout);
      req.objective_value = d.objective_value;
      req.segment = std::move(d.segment);
      return req;
    }
  }
  return std::nullopt;
}

}  // namespace jitkit
