#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jitkit/strategies.hpp"

namespace jitkit {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct SimConfig {
  int num_units = 10;
  /// Mean inter-arrival time per governed part type (s). Types not listed are stocked at t=0.
  std::map<PartTypeId, double> mat_by_part_type;
  /// Mean time to failure of the feeder for a governed part type (s); kNever disables failures.
  std::map<PartTypeId, double> mttf_by_machine;
  double repair_time = 30.0;  // s
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::single_task;
  /// Planner settings for the optimized strategy. Its delivery_time_d is the simulated
  /// delivery time for every strategy.
  PlannerConfig planner;
  bool record_trace = false;
};

enum class EventKind {
  part_arrival,
  machine_failure,
  machine_repaired,
  kit_ready,
  kit_delivered,
  tray_retrieved,
  human_task_done,
};

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view name);

struct Event {
  double time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::part_arrival;
  int subject = -1;              // part type / machine index, or kit index
  std::uint64_t generation = 0;  // arrival stream generation; stale arrivals are dropped

  /// Dequeue order: earliest time first, then insertion order.
  friend bool operator>(const Event& a, const Event& b) {
    return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
  }
};

struct TraceRecord {
  double time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::part_arrival;
  int unit = 0;  // 1-based; 0 when not tied to a unit
  int kit = -1;
  std::string subject;  // task id or part type
  std::vector<TaskId> tasks;
};

/// Life cycle of one delivered kit.
struct KitRecord {
  int unit = 0;
  std::vector<TaskId> segment;
  double gather_start = 0.0;
  double ready = 0.0;
  double delivered = 0.0;
  double retrieved = 0.0;
  double human_done = 0.0;
  double robot_time = 0.0;  // sum of sampled robot durations
  double human_time = 0.0;  // sum of sampled human durations
};

struct UnitMetrics {
  int unit = 0;
  double total_task_time = 0.0;  // s, from the previous unit's completion to this one's
  double human_idle_time = 0.0;  // s
  int kit_count = 0;
};

struct SimMetrics {
  std::vector<UnitMetrics> units;
  double total_task_time = 0.0;  // sum over units (the makespan)
  double human_idle_time = 0.0;
  int kit_count = 0;
  std::vector<KitRecord> kits;
  std::vector<TraceRecord> trace;  // filled when record_trace is set

  double mean_unit_total_time() const;
  double mean_unit_idle_time() const;
};

class SimDeadlockError : public std::runtime_error {
 public:
  SimDeadlockError(const std::string& what, std::vector<TraceRecord> tail)
      : std::runtime_error(what), trace_tail(std::move(tail)) {}
  std::vector<TraceRecord> trace_tail;
};

/// (human s, robot s) for one unit of the task: fixed values as-is, empirical lists by
/// uniform draw. Throws std::invalid_argument on an empty list.
std::pair<double, double> sample_durations(const Task& task, std::mt19937_64& rng);

SimMetrics run_simulation(const Scenario& scenario, const SimConfig& config,
                          LayoutCache* cache = nullptr);

/// Recomputes per-unit metrics from tray_retrieved and human_task_done trace records.
SimMetrics metrics_from_trace(const std::vector<TraceRecord>& trace);

nlohmann::json trace_record_to_json(const TraceRecord& record);
TraceRecord trace_record_from_json(const nlohmann::json& j);

// ---- sweeps ----

struct SweepGrid {
  std::vector<PartTypeId> mat_part_types;  // MAT applied jointly to these types
  std::vector<double> mat_values;
  std::vector<PartTypeId> mttf_machines;  // MTTF applied jointly to these feeders
  std::vector<double> mttf_values;
  std::vector<Strategy> strategies;
};

struct SweepRow {
  Strategy strategy = Strategy::single_task;
  double mat = 0.0;
  double mttf = kNever;
  int replication = 0;
  SimMetrics metrics;  // aggregates and per-unit rows; no trace
};

struct CellSummary {
  Strategy strategy = Strategy::single_task;
  double mat = 0.0;
  double mttf = kNever;
  double mean_total = 0.0, sd_total = 0.0;  // per-unit means, across replications
  double mean_idle = 0.0, sd_idle = 0.0;
  double mean_kits = 0.0;
};

struct ConfidenceInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;

  bool excludes_zero() const { return low > 0.0 || high < 0.0; }
};

struct Improvement {
  double mat = 0.0;
  double mttf = kNever;
  Strategy baseline = Strategy::single_task;
  Strategy candidate = Strategy::optimized;
  std::string metric;         // "total_task_time" or "human_idle_time"
  double percent = 0.0;       // 100 * (baseline - candidate) / baseline, on means
  ConfidenceInterval diff;    // paired baseline - candidate, per-unit mean seconds
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grid order: mat, mttf, strategy, replication
  std::vector<CellSummary> cells;
  std::vector<Improvement> improvements;
};

double percent_improvement(double baseline, double candidate);

/// Percentile bootstrap CI of the mean (95% by default).
ConfidenceInterval bootstrap_mean_ci(const std::vector<double>& values, int resamples,
                                     std::uint64_t seed, double level = 0.95);

/// Runs every grid cell with seeds base.seed + 0 .. replications-1. Cells run in parallel
/// on `threads` workers (0 = hardware concurrency); results are in grid order.
SweepResult sweep(const Scenario& scenario, const SimConfig& base, const SweepGrid& grid,
                  int replications, int threads = 0, LayoutCache* cache = nullptr,
                  int bootstrap_resamples = 10000);

}  // namespace jitkit
