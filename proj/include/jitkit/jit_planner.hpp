#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jitkit/kit_layout.hpp"
#include "jitkit/task_model.hpp"

namespace jitkit {

struct PlannerWeights {
  double w1_precedence = 1e6;
  double w2_coverage = 1.0;
  double w3_sync_now = 1.0;
  double w4_sync_next = 1.0;
  double w5_kit_fitness = 0.01;
  double w7_unavailable = 1e4;
};

struct PlannerConfig {
  int horizon_n = 5;
  double delivery_time_d = 0.0;  // s
  PlannerWeights weights;
  CEParams ce_params;
  FitnessWeights fitness_weights;
  /// Use |.| on the two synchronisation terms instead of the signed differences.
  bool abs_sync_terms = false;
};

struct PlannerState {
  /// T_1..T_t in kitting order; each segment lists its tasks in execution order.
  std::vector<std::vector<TaskId>> completed_segments;
  /// Human's remaining time on the segment currently being assembled (s).
  double current_segment_human_remaining = 0.0;
  /// Missing entries count as available.
  std::map<PartId, bool> part_availability;
  /// When non-empty, availability is counted per part type (interchangeable instances)
  /// and takes precedence over part_availability.
  std::map<PartTypeId, int> available_by_type;
  /// (human s, robot s); tasks without an entry use the expected scenario durations.
  std::map<TaskId, std::pair<double, double>> duration_estimates;

  TaskSet completed() const;
};

struct PlanCandidate {
  std::vector<TaskId> k_sequence;
  int partition_i = 1;
};

struct SegmentDecision {
  std::vector<TaskId> segment;  // K_{1:i} of the winning candidate
  KitLayout layout;
  double objective_value = 0.0;
  double estimated_robot_time = 0.0;  // sum of robot estimates over the segment (s)
  double layout_cost = 0.0;
  PlanCandidate candidate;
};

class PlannerInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Memoized lower-level results keyed by the sorted part-id list. The CE seed for a part
/// set is derived from the configured seed and the key, so a hit returns exactly what a
/// fresh arrange_kit call would. Thread-safe.
class LayoutCache {
 public:
  struct Entry {
    bool feasible = false;
    KitLayout layout;
    double cost = 0.0;
  };

  std::shared_ptr<const Entry> get(std::vector<PartId> parts, const PartCatalog& catalog,
                                   const Tray& tray, const FitnessWeights& weights,
                                   const CEParams& params);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const Entry>> entries_;
};

/// CE parameters used for one part set (seed specialised to the set).
CEParams ce_params_for(const std::vector<PartId>& sorted_parts, const CEParams& base);

double upper_objective(const PlanCandidate& candidate, double layout_cost,
                       const PlannerState& state, const Scenario& scenario,
                       const PlannerConfig& config);

/// Precedence-valid sequences of length min(N, #incomplete), each paired with every
/// partition whose kit passes the tray-area filter. Lexicographic order.
std::vector<PlanCandidate> enumerate_candidates(const PlannerState& state,
                                                const Scenario& scenario,
                                                const PlannerConfig& config);

/// Greedy step: best candidate under the upper objective, with its lower-level layout.
SegmentDecision solve_segment(const PlannerState& state, const Scenario& scenario,
                              const PlannerConfig& config, LayoutCache* cache = nullptr);

/// Reduces the current segment's remaining human time by observed progress (floor 0).
PlannerState replan_estimates(PlannerState state, const std::map<TaskId, double>& observed);

/// Parts required by the given tasks, in task order.
std::vector<PartId> parts_of(const std::vector<TaskId>& tasks, const TaskGraph& graph);

}  // namespace jitkit
