#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jitkit/jit_planner.hpp"

namespace jitkit {

enum class Strategy { whole_assembly, single_task, optimized };

std::string_view to_string(Strategy s);
/// Throws std::invalid_argument for unknown names.
Strategy parse_strategy(std::string_view name);
inline constexpr Strategy kAllStrategies[] = {Strategy::whole_assembly, Strategy::single_task,
                                              Strategy::optimized};

struct KitRequest {
  std::vector<TaskId> segment;  // execution order
  std::vector<PartId> parts;    // union of required parts over the segment
  std::optional<KitLayout> layout;
  double objective_value = 0.0;  // optimized only
};

/// Left-to-right shelf layout grouped by part type. Used by the fixed strategies;
/// rows may run past the tray edge for very large kits.
KitLayout grid_layout(const std::vector<PartId>& parts, const PartCatalog& catalog,
                      const Tray& tray);

/// Next kit for the given strategy, or nullopt once every task has been kitted.
std::optional<KitRequest> strategy_next_kit(Strategy strategy, const PlannerState& state,
                                            const Scenario& scenario,
                                            const PlannerConfig& config,
                                            LayoutCache* cache = nullptr);

}  // namespace jitkit
