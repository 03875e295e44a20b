#include "jitkit/jit_planner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jitkit/rng.hpp"

namespace jitkit {

TaskSet PlannerState::completed() const {
  TaskSet done;
  for (const auto& seg : completed_segments) done.insert(seg.begin(), seg.end());
  return done;
}

std::vector<PartId> parts_of(const std::vector<TaskId>& tasks, const TaskGraph& graph) {
  std::vector<PartId> parts;
  for (const auto& id : tasks) {
    const auto& req = graph.task(id).required_parts;
    parts.insert(parts.end(), req.begin(), req.end());
  }
  return parts;
}

namespace {

std::string join_ids(const std::vector<PartId>& ids) {
  std::string key;
  for (const auto& id : ids) {
    key += id;
    key += '\x1f';
  }
  return key;
}

std::string params_fingerprint(const Tray& tray, const FitnessWeights& w, const CEParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << tray.width << ',' << tray.height << ',' << w.w6_overlap << ','
     << static_cast<int>(w.overlap_term) << ',' << p.sample_count << ',' << p.elite_count << ','
     << p.max_iterations << ',' << p.convergence_std_tol << ',' << p.cov_jitter << ','
     << p.containment_penalty_weight << ',' << p.retry_limit << ',' << p.seed << ','
     << p.smoothing << ',' << p.covariance_shrinkage << ',' << p.starts << ',' << p.covariance_smoothing << ','
     << p.covariance_decay_power;
  return os.str();
}

// Index-based view of the scenario for one planning call.
struct Context {
  const Scenario& scenario;
  const PlannerState& state;
  const PlannerConfig& config;
  std::vector<double> human;  // estimates, s
  std::vector<double> robot;
  std::vector<double> area;   // summed part area at theta = 0, mm^2
  std::vector<char> done;
  std::vector<std::vector<std::size_t>> preds;
  std::vector<std::size_t> incomplete;  // sorted by task id

  Context(const Scenario& s, const PlannerState& st, const PlannerConfig& c)
      : scenario(s), state(st), config(c) {
    const auto& tasks = s.graph.tasks();
    const std::size_t n = tasks.size();
    human.resize(n);
    robot.resize(n);
    area.assign(n, 0.0);
    done.assign(n, 0);
    preds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Task& t = tasks[i];
      auto est = st.duration_estimates.find(t.id);
      if (est != st.duration_estimates.end()) {
        human[i] = est->second.first;
        robot[i] = est->second.second;
      } else {
        human[i] = expected_seconds(t.human_duration);
        robot[i] = expected_seconds(t.robot_duration);
      }
      for (const auto& p : t.required_parts) {
        const auto& e = s.catalog.at(p);
        area[i] += e.width * e.height;
      }
      for (const auto& p : t.predecessors) preds[i].push_back(s.graph.index_of(p));
    }
    for (const auto& seg : st.completed_segments) {
      for (const auto& id : seg) done[s.graph.index_of(id)] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i]) incomplete.push_back(i);
    }
    std::sort(incomplete.begin(), incomplete.end(),
              [&](std::size_t a, std::size_t b) { return tasks[a].id < tasks[b].id; });
  }

  bool allowed_given(std::size_t task, const std::vector<char>& mark) const {
    return std::all_of(preds[task].begin(), preds[task].end(),
                       [&](std::size_t p) { return mark[p] != 0; });
  }

  int unavailable_count(const std::vector<std::size_t>& seq, int i) const {
    const auto& tasks = scenario.graph.tasks();
    if (!state.available_by_type.empty()) {
      std::map<PartTypeId, int> need;
      for (int j = 0; j < i; ++j) {
        for (const auto& p : tasks[seq[j]].required_parts) ++need[scenario.catalog.at(p).type];
      }
      int missing = 0;
      for (const auto& [type, count] : need) {
        auto it = state.available_by_type.find(type);
        const int have = it == state.available_by_type.end() ? 0 : it->second;
        missing += std::max(0, count - have);
      }
      return missing;
    }
    int missing = 0;
    for (int j = 0; j < i; ++j) {
      for (const auto& p : tasks[seq[j]].required_parts) {
        auto it = state.part_availability.find(p);
        if (it != state.part_availability.end() && !it->second) ++missing;
      }
    }
    return missing;
  }

  double objective(const std::vector<std::size_t>& seq, int i, double layout_cost) const {
    const PlannerWeights& w = config.weights;
    const double d = config.delivery_time_d;

    std::vector<char> mark = done;
    double violations = 0.0;
    for (std::size_t task : seq) {
      if (!allowed_given(task, mark)) violations += 1.0;
      mark[task] = 1;
    }

    double robot_now = 0.0, human_now = 0.0, robot_next = 0.0;
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (static_cast<int>(j) < i) {
        robot_now += robot[seq[j]];
        human_now += human[seq[j]];
      } else {
        robot_next += robot[seq[j]];
      }
    }
    double sync_now = d + robot_now - state.current_segment_human_remaining;
    double sync_next = d + robot_next - human_now;
    if (config.abs_sync_terms) {
      sync_now = std::abs(sync_now);
      sync_next = std::abs(sync_next);
    }
    const double kit_fitness = -layout_cost;
    return w.w1_precedence * violations - w.w2_coverage * i + w.w3_sync_now * sync_now +
           w.w4_sync_next * sync_next - w.w5_kit_fitness * kit_fitness +
           w.w7_unavailable * unavailable_count(seq, i);
  }

  // Calls visit(seq, i) for every candidate in lexicographic order of (K, i).
  template <typename Visit>
  void for_each_candidate(Visit&& visit) const {
    if (incomplete.empty()) return;
    const std::size_t length =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(config.horizon_n, 1)),
                              incomplete.size());
    const double tray_area = scenario.tray.area();
    std::vector<std::size_t> seq;
    std::vector<char> mark = done;
    auto recurse = [&](auto&& self) -> void {
      if (seq.size() == length) {
        double kit_area = 0.0;
        for (std::size_t i = 1; i <= length; ++i) {
          kit_area += area[seq[i - 1]];
          if (kit_area > tray_area) break;
          visit(seq, static_cast<int>(i));
        }
        return;
      }
      for (std::size_t task : incomplete) {
        if (mark[task] || !allowed_given(task, mark)) continue;
        mark[task] = 1;
        seq.push_back(task);
        self(self);
        seq.pop_back();
        mark[task] = 0;
      }
    };
    recurse(recurse);
  }

  std::vector<TaskId> ids(const std::vector<std::size_t>& seq, std::size_t count) const {
    std::vector<TaskId> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) out.push_back(scenario.graph.tasks()[seq[j]].id);
    return out;
  }
};

}  // namespace

CEParams ce_params_for(const std::vector<PartId>& sorted_parts, const CEParams& base) {
  CEParams p = base;
  p.seed = derive_seed(base.seed, stable_hash(join_ids(sorted_parts)));
  return p;
}

std::shared_ptr<const LayoutCache::Entry> LayoutCache::get(std::vector<PartId> parts,
                                                           const PartCatalog& catalog,
                                                           const Tray& tray,
                                                           const FitnessWeights& weights,
                                                           const CEParams& params) {
  std::sort(parts.begin(), parts.end());
  const std::string key = join_ids(parts) + '|' + params_fingerprint(tray, weights, params);
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  // Computed outside the lock; concurrent misses on one key produce identical entries.
  auto entry = std::make_shared<Entry>();
  entry->layout.tray = tray;
  if (!parts.empty()) {
    try {
      ArrangeResult r = arrange_kit(parts, catalog, tray, weights, ce_params_for(parts, params));
      entry->feasible = true;
      entry->layout = std::move(r.layout);
      entry->cost = r.cost;
    } catch (const KitPreconditionError&) {
      entry->feasible = false;
    } catch (const KitInfeasibleError& e) {
      entry->feasible = false;
      entry->layout = e.best_layout;
    }
  } else {
    entry->feasible = true;
  }
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, std::move(entry));
  return it->second;
}

std::size_t LayoutCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

double upper_objective(const PlanCandidate& candidate, double layout_cost,
                       const PlannerState& state, const Scenario& scenario,
                       const PlannerConfig& config) {
  const Context ctx(scenario, state, config);
  std::vector<std::size_t> seq;
  seq.reserve(candidate.k_sequence.size());
  for (const auto& id : candidate.k_sequence) seq.push_back(scenario.graph.index_of(id));
  if (candidate.partition_i < 1 || candidate.partition_i > static_cast<int>(seq.size())) {
    throw std::invalid_argument("upper_objective: partition index out of range");
  }
  return ctx.objective(seq, candidate.partition_i, layout_cost);
}

std::vector<PlanCandidate> enumerate_candidates(const PlannerState& state,
                                                const Scenario& scenario,
                                                const PlannerConfig& config) {
  const Context ctx(scenario, state, config);
  std::vector<PlanCandidate> out;
  ctx.for_each_candidate([&](const std::vector<std::size_t>& seq, int i) {
    out.push_back(PlanCandidate{ctx.ids(seq, seq.size()), i});
  });
  return out;
}

SegmentDecision solve_segment(const PlannerState& state, const Scenario& scenario,
                              const PlannerConfig& config, LayoutCache* cache) {
  LayoutCache local;
  LayoutCache& layouts = cache ? *cache : local;
  const Context ctx(scenario, state, config);
  if (ctx.incomplete.empty()) throw std::invalid_argument("solve_segment: all tasks complete");

  const auto& tasks = scenario.graph.tasks();
  bool found = false;
  double best_value = 0.0;
  int best_i = 0;
  std::vector<std::size_t> best_seq;
  std::shared_ptr<const LayoutCache::Entry> best_layout;

  // Part sets repeat across (K, i); resolve each prefix once per call.
  std::map<std::vector<std::size_t>, std::shared_ptr<const LayoutCache::Entry>> prefix_layouts;
  std::vector<std::size_t> prefix;

  ctx.for_each_candidate([&](const std::vector<std::size_t>& seq, int i) {
    prefix.assign(seq.begin(), seq.begin() + i);
    std::sort(prefix.begin(), prefix.end());
    auto& slot = prefix_layouts[prefix];
    if (!slot) {
      std::vector<PartId> parts;
      for (std::size_t t : prefix) {
        parts.insert(parts.end(), tasks[t].required_parts.begin(), tasks[t].required_parts.end());
      }
      slot = layouts.get(std::move(parts), scenario.catalog, scenario.tray,
                         config.fitness_weights, config.ce_params);
    }
    if (!slot->feasible) return;

    const double value = ctx.objective(seq, i, slot->cost);
    bool better = !found;
    if (found) {
      const double scale = std::max({1.0, std::abs(value), std::abs(best_value)});
      if (value < best_value - 1e-9 * scale) {
        better = true;
      } else if (std::abs(value - best_value) <= 1e-9 * scale) {
        // Ties: more coverage first, then lexicographic K (the enumeration order).
        better = i > best_i;
      }
    }
    if (better) {
      found = true;
      best_value = value;
      best_i = i;
      best_seq = seq;
      best_layout = slot;
    }
  });

  if (!found) {
    throw PlannerInfeasibleError("solve_segment: no candidate segment admits a valid kit layout");
  }

  SegmentDecision decision;
  decision.candidate = PlanCandidate{ctx.ids(best_seq, best_seq.size()), best_i};
  decision.segment = ctx.ids(best_seq, static_cast<std::size_t>(best_i));
  decision.layout = best_layout->layout;
  decision.layout_cost = best_layout->cost;
  decision.objective_value = best_value;
  for (int j = 0; j < best_i; ++j) decision.estimated_robot_time += ctx.robot[best_seq[j]];
  return decision;
}

PlannerState replan_estimates(PlannerState state, const std::map<TaskId, double>& observed) {
  double progress = 0.0;
  for (const auto& [task, seconds] : observed) progress += seconds;
  state.current_segment_human_remaining =
      std::max(0.0, state.current_segment_human_remaining - progress);
  return state;
}

}  // namespace jitkit
