#include "jitkit/shopfloor_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include "jitkit/rng.hpp"

namespace jitkit {

namespace {

constexpr const char* kEventNames[] = {"part_arrival",  "machine_failure", "machine_repaired",
                                       "kit_ready",     "kit_delivered",   "tray_retrieved",
                                       "human_task_done"};

// RNG stream identifiers.
constexpr std::uint64_t kDurationStream = 1;
constexpr std::uint64_t kArrivalStream = 2;
constexpr std::uint64_t kFailureStream = 3;

double draw_exponential(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0.0;
  if (std::isinf(mean)) return kNever;
  return std::exponential_distribution<double>(1.0 / mean)(rng);
}

class Simulator {
 public:
  Simulator(const Scenario& scenario, const SimConfig& config, LayoutCache* cache)
      : scenario_(scenario), config_(config), cache_(cache ? cache : &own_cache_) {
    const auto& tasks = scenario_.graph.tasks();
    if (config_.num_units < 1) throw std::invalid_argument("num_units must be >= 1");
    if (!(config_.repair_time >= 0.0) || !(config_.planner.delivery_time_d >= 0.0)) {
      throw std::invalid_argument("simulation times must be non-negative");
    }

    for (const auto& t : scenario_.part_types) {
      type_index_.emplace(t.id, types_.size());
      types_.push_back(t.id);
    }
    demand_.assign(types_.size(), 0);
    for (const auto& p : scenario_.parts) demand_[type_index_.at(p.part_type)] += config_.num_units;

    streams_.resize(types_.size());
    inventory_.assign(types_.size(), 0);
    for (const auto& [type, mat] : config_.mat_by_part_type) {
      auto it = type_index_.find(type);
      if (it == type_index_.end()) throw std::invalid_argument("MAT given for unknown part type " + type);
      if (!(mat >= 0.0)) throw std::invalid_argument("MAT must be non-negative for " + type);
      streams_[it->second].governed = true;
      streams_[it->second].mat = mat;
    }
    for (const auto& [machine, mttf] : config_.mttf_by_machine) {
      auto it = type_index_.find(machine);
      if (it == type_index_.end()) throw std::invalid_argument("MTTF given for unknown machine " + machine);
      if (!(mttf > 0.0)) throw std::invalid_argument("MTTF must be positive for " + machine);
      streams_[it->second].mttf = mttf;
    }

    // Per (unit, task) duration draws are fixed up front so every strategy sees the same
    // sample path for a given seed.
    human_.assign(config_.num_units, std::vector<double>(tasks.size()));
    robot_.assign(config_.num_units, std::vector<double>(tasks.size()));
    for (int u = 0; u < config_.num_units; ++u) {
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        std::mt19937_64 rng(derive_seed(config_.seed, {kDurationStream,
                                                       static_cast<std::uint64_t>(u),
                                                       static_cast<std::uint64_t>(i)}));
        std::tie(human_[u][i], robot_[u][i]) = sample_durations(tasks[i], rng);
      }
    }
    for (const auto& t : tasks) {
      estimates_.emplace(t.id, std::make_pair(expected_seconds(t.human_duration),
                                              expected_seconds(t.robot_duration)));
    }
    unit_done_tasks_.assign(config_.num_units, 0);
    unit_end_.assign(config_.num_units, 0.0);
    unit_kits_.assign(config_.num_units, 0);
    unit_segments_.resize(config_.num_units);
  }

  SimMetrics run() {
    start_streams();
    robot_next_kit();
    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.time;
      dispatch(e);
    }
    if (units_finished_ < config_.num_units) {
      std::ostringstream msg;
      msg << "simulation deadlock at t=" << now_ << ": " << units_finished_ << " of "
          << config_.num_units << " units finished, robot waiting for parts";
      std::vector<TraceRecord> tail(trace_.end() - std::min<std::ptrdiff_t>(trace_.size(), 20),
                                    trace_.end());
      throw SimDeadlockError(msg.str(), std::move(tail));
    }
    return collect();
  }

 private:
  struct Stream {
    bool governed = false;
    double mat = 0.0;
    double mttf = kNever;
    int remaining = 0;
    bool up = true;
    std::uint64_t generation = 0;
    std::mt19937_64 arrivals;
    std::mt19937_64 failures;
  };

  enum class RobotPhase { idle, waiting_parts, gathering, delivering, blocked, finished };

  // ---- event plumbing ----

  void schedule(double time, EventKind kind, int subject = -1, std::uint64_t generation = 0) {
    queue_.push(Event{time, next_sequence_++, kind, subject, generation});
  }

  void record(EventKind kind, int unit, int kit, std::string subject,
              std::vector<TaskId> tasks = {}) {
    if (!config_.record_trace) return;
    trace_.push_back(TraceRecord{now_, trace_sequence_++, kind, unit, kit, std::move(subject),
                                 std::move(tasks)});
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::part_arrival:
        return on_arrival(e);
      case EventKind::machine_failure:
        return on_failure(e);
      case EventKind::machine_repaired:
        return on_repaired(e);
      case EventKind::kit_ready:
        return on_kit_ready(e);
      case EventKind::kit_delivered:
        return on_kit_delivered(e);
      case EventKind::tray_retrieved:
        return on_tray_retrieved(e);
      case EventKind::human_task_done:
        return on_human_task_done(e);
    }
  }

  // ---- part supply ----

  void start_streams() {
    for (std::size_t t = 0; t < types_.size(); ++t) {
      Stream& s = streams_[t];
      const std::uint64_t key = stable_hash(types_[t]);
      s.arrivals.seed(derive_seed(config_.seed, {kArrivalStream, key}));
      s.failures.seed(derive_seed(config_.seed, {kFailureStream, key}));
      if (!s.governed || s.mat <= 0.0) {
        inventory_[t] = demand_[t];
        s.remaining = 0;
        continue;
      }
      s.remaining = demand_[t];
      schedule_arrival(static_cast<int>(t));
      schedule_failure(static_cast<int>(t));
    }
  }

  void schedule_arrival(int t) {
    Stream& s = streams_[t];
    if (s.remaining > 0) schedule(now_ + draw_exponential(s.arrivals, s.mat), EventKind::part_arrival, t, s.generation);
  }

  void schedule_failure(int t) {
    Stream& s = streams_[t];
    if (s.remaining > 0 && !std::isinf(s.mttf)) {
      schedule(now_ + draw_exponential(s.failures, s.mttf), EventKind::machine_failure, t);
    }
  }

  void on_arrival(const Event& e) {
    Stream& s = streams_[e.subject];
    if (e.generation != s.generation || !s.up || s.remaining == 0) return;
    --s.remaining;
    ++inventory_[e.subject];
    record(EventKind::part_arrival, 0, -1, types_[e.subject]);
    schedule_arrival(e.subject);
    on_availability_change();
  }

  void on_failure(const Event& e) {
    Stream& s = streams_[e.subject];
    if (s.remaining == 0) return;
    s.up = false;
    ++s.generation;  // the pending arrival is lost; a fresh one is drawn after repair
    record(EventKind::machine_failure, 0, -1, types_[e.subject]);
    schedule(now_ + config_.repair_time, EventKind::machine_repaired, e.subject);
  }

  void on_repaired(const Event& e) {
    Stream& s = streams_[e.subject];
    s.up = true;
    ++s.generation;
    record(EventKind::machine_repaired, 0, -1, types_[e.subject]);
    schedule_arrival(e.subject);
    schedule_failure(e.subject);
  }

  // ---- robot ----

  PlannerState planner_state() const {
    PlannerState st;
    if (robot_unit_ < config_.num_units) st.completed_segments = unit_segments_[robot_unit_];
    for (std::size_t t = 0; t < types_.size(); ++t) st.available_by_type[types_[t]] = inventory_[t];
    st.duration_estimates = estimates_;
    if (human_kit_ >= 0) {
      const KitRecord& kit = kits_[human_kit_];
      PlannerState seg;
      std::map<TaskId, double> observed;
      for (std::size_t j = 0; j < kit.segment.size(); ++j) {
        const double est = estimates_.at(kit.segment[j]).first;
        seg.current_segment_human_remaining += est;
        if (static_cast<int>(j) < human_pos_) {
          observed[kit.segment[j]] = est;
        } else if (static_cast<int>(j) == human_pos_) {
          observed[kit.segment[j]] = std::min(est, now_ - human_task_start_);
        }
      }
      st.current_segment_human_remaining =
          replan_estimates(seg, observed).current_segment_human_remaining;
    }
    return st;
  }

  // Requests the next kit for the robot's current unit. A new unit is started only after the
  // previous one has been assembled.
  void robot_next_kit() {
    while (robot_unit_ < config_.num_units) {
      if (units_finished_ < robot_unit_) {
        robot_phase_ = RobotPhase::idle;  // resumes once the previous unit is assembled
        return;
      }
      auto req = strategy_next_kit(config_.strategy, planner_state(), scenario_, config_.planner,
                                   cache_);
      if (req) {
        pending_ = std::move(*req);
        robot_phase_ = RobotPhase::waiting_parts;
        try_start_gathering();
        return;
      }
      ++robot_unit_;
    }
    robot_phase_ = RobotPhase::finished;
  }

  std::vector<int> needed_by_type(const std::vector<PartId>& parts) const {
    std::vector<int> need(types_.size(), 0);
    for (const auto& p : parts) ++need[type_index_.at(scenario_.catalog.at(p).type)];
    return need;
  }

  void try_start_gathering() {
    const auto need = needed_by_type(pending_.parts);
    for (std::size_t t = 0; t < need.size(); ++t) {
      if (inventory_[t] < need[t]) return;  // keep waiting
    }
    for (std::size_t t = 0; t < need.size(); ++t) inventory_[t] -= need[t];

    KitRecord kit;
    kit.unit = robot_unit_ + 1;
    kit.segment = pending_.segment;
    kit.gather_start = now_;
    for (const auto& id : kit.segment) {
      const std::size_t i = scenario_.graph.index_of(id);
      kit.robot_time += robot_[robot_unit_][i];
      kit.human_time += human_[robot_unit_][i];
    }
    unit_segments_[robot_unit_].push_back(kit.segment);
    ++unit_kits_[robot_unit_];
    kits_.push_back(std::move(kit));
    robot_kit_ = static_cast<int>(kits_.size()) - 1;
    robot_phase_ = RobotPhase::gathering;
    schedule(now_ + kits_[robot_kit_].robot_time, EventKind::kit_ready, robot_kit_);
  }

  void on_availability_change() {
    if (robot_phase_ != RobotPhase::waiting_parts) return;
    if (config_.strategy == Strategy::optimized) {
      // Re-plan with the new availability before committing to a kit.
      auto req = strategy_next_kit(config_.strategy, planner_state(), scenario_, config_.planner,
                                   cache_);
      if (req) pending_ = std::move(*req);
    }
    try_start_gathering();
  }

  void on_kit_ready(const Event& e) {
    KitRecord& kit = kits_[e.subject];
    kit.ready = now_;
    record(EventKind::kit_ready, kit.unit, e.subject, "", kit.segment);
    robot_phase_ = RobotPhase::delivering;
    schedule(now_ + config_.planner.delivery_time_d, EventKind::kit_delivered, e.subject);
  }

  void on_kit_delivered(const Event& e) {
    KitRecord& kit = kits_[e.subject];
    kit.delivered = now_;
    record(EventKind::kit_delivered, kit.unit, e.subject, "", kit.segment);
    tray_kit_ = e.subject;
    robot_phase_ = RobotPhase::blocked;
    if (human_kit_ < 0) schedule(now_, EventKind::tray_retrieved, e.subject);
  }

  // ---- human ----

  void on_tray_retrieved(const Event& e) {
    if (tray_kit_ != e.subject || human_kit_ >= 0) return;
    KitRecord& kit = kits_[e.subject];
    kit.retrieved = now_;
    record(EventKind::tray_retrieved, kit.unit, e.subject, "", kit.segment);
    tray_kit_ = -1;
    human_kit_ = e.subject;
    human_pos_ = 0;
    start_human_task();
    robot_phase_ = RobotPhase::idle;
    robot_next_kit();
  }

  void start_human_task() {
    const KitRecord& kit = kits_[human_kit_];
    const std::size_t i = scenario_.graph.index_of(kit.segment[human_pos_]);
    human_task_start_ = now_;
    schedule(now_ + human_[kit.unit - 1][i], EventKind::human_task_done, human_kit_);
  }

  void on_human_task_done(const Event& e) {
    KitRecord& kit = kits_[e.subject];
    const int unit = kit.unit - 1;
    record(EventKind::human_task_done, kit.unit, e.subject, kit.segment[human_pos_]);
    bool unit_finished = false;
    if (++unit_done_tasks_[unit] == static_cast<int>(scenario_.graph.size())) {
      unit_end_[unit] = now_;
      ++units_finished_;
      unit_finished = true;
    }
    if (++human_pos_ < static_cast<int>(kit.segment.size())) {
      start_human_task();
      return;
    }
    kit.human_done = now_;
    human_kit_ = -1;
    human_pos_ = 0;
    if (tray_kit_ >= 0) schedule(now_, EventKind::tray_retrieved, tray_kit_);
    if (unit_finished && robot_phase_ == RobotPhase::idle) robot_next_kit();
  }

  SimMetrics collect() {
    SimMetrics m;
    double previous_end = 0.0;
    for (int u = 0; u < config_.num_units; ++u) {
      UnitMetrics um;
      um.unit = u + 1;
      um.total_task_time = unit_end_[u] - previous_end;
      const double active = std::accumulate(human_[u].begin(), human_[u].end(), 0.0);
      um.human_idle_time = std::max(0.0, um.total_task_time - active);
      um.kit_count = unit_kits_[u];
      previous_end = unit_end_[u];
      m.total_task_time += um.total_task_time;
      m.human_idle_time += um.human_idle_time;
      m.kit_count += um.kit_count;
      m.units.push_back(um);
    }
    m.kits = std::move(kits_);
    m.trace = std::move(trace_);
    return m;
  }

  const Scenario& scenario_;
  const SimConfig& config_;
  LayoutCache own_cache_;
  LayoutCache* cache_;

  std::vector<PartTypeId> types_;
  std::map<PartTypeId, std::size_t> type_index_;
  std::vector<int> demand_;
  std::vector<int> inventory_;
  std::vector<Stream> streams_;
  std::vector<std::vector<double>> human_;  // [unit][task]
  std::vector<std::vector<double>> robot_;
  std::map<TaskId, std::pair<double, double>> estimates_;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t trace_sequence_ = 0;
  double now_ = 0.0;

  RobotPhase robot_phase_ = RobotPhase::idle;
  int robot_unit_ = 0;  // 0-based
  int robot_kit_ = -1;
  KitRequest pending_;
  int tray_kit_ = -1;
  int human_kit_ = -1;
  int human_pos_ = 0;
  double human_task_start_ = 0.0;

  std::vector<KitRecord> kits_;
  std::vector<std::vector<std::vector<TaskId>>> unit_segments_;
  std::vector<int> unit_done_tasks_;
  std::vector<double> unit_end_;
  std::vector<int> unit_kits_;
  int units_finished_ = 0;
  std::vector<TraceRecord> trace_;
};

}  // namespace

std::string_view to_string(EventKind kind) { return kEventNames[static_cast<int>(kind)]; }

EventKind parse_event_kind(std::string_view name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kEventNames[i]) return static_cast<EventKind>(i);
  }
  throw std::invalid_argument("unknown event kind " + std::string(name));
}

double SimMetrics::mean_unit_total_time() const {
  return units.empty() ? 0.0 : total_task_time / static_cast<double>(units.size());
}

double SimMetrics::mean_unit_idle_time() const {
  return units.empty() ? 0.0 : human_idle_time / static_cast<double>(units.size());
}

std::pair<double, double> sample_durations(const Task& task, std::mt19937_64& rng) {
  auto draw = [&](const Duration& d, const char* who) {
    if (const auto* fixed = std::get_if<double>(&d)) return *fixed;
    const auto& samples = std::get<EmpiricalDuration>(d).samples;
    if (samples.empty()) {
      throw std::invalid_argument("task " + task.id + ": empty " + who + " duration distribution");
    }
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    return samples[pick(rng)];
  };
  const double human = draw(task.human_duration, "human");
  const double robot = draw(task.robot_duration, "robot");
  return {human, robot};
}

SimMetrics run_simulation(const Scenario& scenario, const SimConfig& config, LayoutCache* cache) {
  return Simulator(scenario, config, cache).run();
}

SimMetrics metrics_from_trace(const std::vector<TraceRecord>& trace) {
  struct UnitAcc {
    double end = 0.0;
    double active = 0.0;
    std::set<int> kits;
  };
  std::map<int, UnitAcc> units;
  double segment_cursor = 0.0;  // start of the human's current task
  for (const auto& r : trace) {
    if (r.kind == EventKind::tray_retrieved) {
      segment_cursor = r.time;
      units[r.unit].kits.insert(r.kit);
    } else if (r.kind == EventKind::human_task_done) {
      UnitAcc& acc = units[r.unit];
      acc.active += r.time - segment_cursor;
      acc.end = std::max(acc.end, r.time);
      segment_cursor = r.time;
    }
  }
  SimMetrics m;
  double previous_end = 0.0;
  for (const auto& [unit, acc] : units) {
    UnitMetrics um;
    um.unit = unit;
    um.total_task_time = acc.end - previous_end;
    um.human_idle_time = std::max(0.0, um.total_task_time - acc.active);
    um.kit_count = static_cast<int>(acc.kits.size());
    previous_end = acc.end;
    m.total_task_time += um.total_task_time;
    m.human_idle_time += um.human_idle_time;
    m.kit_count += um.kit_count;
    m.units.push_back(um);
  }
  return m;
}

nlohmann::json trace_record_to_json(const TraceRecord& r) {
  nlohmann::json j{{"t", r.time}, {"seq", r.sequence}, {"kind", std::string(to_string(r.kind))}};
  if (r.unit > 0) j["unit"] = r.unit;
  if (r.kit >= 0) j["kit"] = r.kit;
  if (!r.subject.empty()) j["subject"] = r.subject;
  if (!r.tasks.empty()) j["tasks"] = r.tasks;
  return j;
}

TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.time = j.at("t").get<double>();
  r.sequence = j.at("seq").get<std::uint64_t>();
  r.kind = parse_event_kind(j.at("kind").get<std::string>());
  r.unit = j.value("unit", 0);
  r.kit = j.value("kit", -1);
  r.subject = j.value("subject", std::string());
  if (j.contains("tasks")) r.tasks = j.at("tasks").get<std::vector<TaskId>>();
  return r;
}

double percent_improvement(double baseline, double candidate) {
  if (baseline == candidate) return 0.0;
  if (baseline == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (baseline - candidate) / baseline;
}

ConfidenceInterval bootstrap_mean_ci(const std::vector<double>& values, int resamples,
                                     std::uint64_t seed, double level) {
  ConfidenceInterval ci;
  if (values.empty()) return ci;
  const double n = static_cast<double>(values.size());
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1 || resamples < 1) {
    ci.low = ci.high = ci.mean;
    return ci;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) sum += values[pick(rng)];
    m = sum / n;
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  ci.low = quantile(alpha);
  ci.high = quantile(1.0 - alpha);
  return ci;
}

namespace {

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

SweepResult sweep(const Scenario& scenario, const SimConfig& base, const SweepGrid& grid,
                  int replications, int threads, LayoutCache* cache, int bootstrap_resamples) {
  if (grid.mat_values.empty() || grid.mttf_values.empty() || grid.strategies.empty()) {
    throw std::invalid_argument("sweep: grid must be non-empty on every axis");
  }
  if (replications < 1) throw std::invalid_argument("sweep: replications must be >= 1");

  LayoutCache own;
  LayoutCache& layouts = cache ? *cache : own;

  SweepResult result;
  for (double mat : grid.mat_values) {
    for (double mttf : grid.mttf_values) {
      for (Strategy s : grid.strategies) {
        for (int r = 0; r < replications; ++r) {
          SweepRow row;
          row.strategy = s;
          row.mat = mat;
          row.mttf = mttf;
          row.replication = r;
          result.rows.push_back(std::move(row));
        }
      }
    }
  }

  auto config_for = [&](const SweepRow& row) {
    SimConfig c = base;
    c.strategy = row.strategy;
    c.seed = base.seed + static_cast<std::uint64_t>(row.replication);
    c.record_trace = false;
    for (const auto& type : grid.mat_part_types) c.mat_by_part_type[type] = row.mat;
    for (const auto& machine : grid.mttf_machines) c.mttf_by_machine[machine] = row.mttf;
    return c;
  };

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(result.rows.size());
  std::vector<char> infeasible(result.rows.size(), 0);
  auto worker = [&] {
    for (std::size_t k = next++; k < result.rows.size(); k = next++) {
      SweepRow& row = result.rows[k];
      try {
        row.metrics = run_simulation(scenario, config_for(row), &layouts);
        row.metrics.kits.clear();
      } catch (const std::exception& e) {
        infeasible[k] = dynamic_cast<const PlannerInfeasibleError*>(&e) != nullptr;
        std::ostringstream msg;
        msg << "cell (strategy=" << to_string(row.strategy) << ", mat=" << row.mat
            << ", mttf=" << row.mttf << ", replication=" << row.replication << "): " << e.what();
        errors[k] = msg.str();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(threads > 0 ? static_cast<std::size_t>(threads) : hw,
                            result.rows.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k].empty()) continue;
    if (infeasible[k]) throw PlannerInfeasibleError("sweep failed in " + errors[k]);
    throw std::runtime_error("sweep failed in " + errors[k]);
  }

  // Per-cell summaries and paired comparisons.
  auto values = [&](double mat, double mttf, Strategy s, bool idle) {
    std::vector<double> v;
    for (const auto& row : result.rows) {
      if (row.mat == mat && row.mttf == mttf && row.strategy == s) {
        v.push_back(idle ? row.metrics.mean_unit_idle_time() : row.metrics.mean_unit_total_time());
      }
    }
    return v;
  };
  std::uint64_t ci_stream = 0;
  for (double mat : grid.mat_values) {
    for (double mttf : grid.mttf_values) {
      for (Strategy s : grid.strategies) {
        CellSummary cell;
        cell.strategy = s;
        cell.mat = mat;
        cell.mttf = mttf;
        const auto total = values(mat, mttf, s, false);
        const auto idle = values(mat, mttf, s, true);
        cell.mean_total = mean_of(total);
        cell.sd_total = sample_sd(total);
        cell.mean_idle = mean_of(idle);
        cell.sd_idle = sample_sd(idle);
        std::vector<double> kits;
        for (const auto& row : result.rows) {
          if (row.mat == mat && row.mttf == mttf && row.strategy == s) {
            kits.push_back(row.metrics.kit_count);
          }
        }
        cell.mean_kits = mean_of(kits);
        result.cells.push_back(cell);
      }
      const bool has_optimized = std::find(grid.strategies.begin(), grid.strategies.end(),
                                           Strategy::optimized) != grid.strategies.end();
      if (!has_optimized) continue;
      for (Strategy baseline : grid.strategies) {
        if (baseline == Strategy::optimized) continue;
        for (bool idle : {false, true}) {
          const auto b = values(mat, mttf, baseline, idle);
          const auto o = values(mat, mttf, Strategy::optimized, idle);
          std::vector<double> diffs(b.size());
          for (std::size_t k = 0; k < b.size(); ++k) diffs[k] = b[k] - o[k];
          Improvement imp;
          imp.mat = mat;
          imp.mttf = mttf;
          imp.baseline = baseline;
          imp.metric = idle ? "human_idle_time" : "total_task_time";
          imp.percent = percent_improvement(mean_of(b), mean_of(o));
          imp.diff = bootstrap_mean_ci(diffs, bootstrap_resamples,
                                       derive_seed(base.seed, {0xc1, ci_stream++}));
          result.improvements.push_back(imp);
        }
      }
    }
  }
  return result;
}

}  // namespace jitkit
