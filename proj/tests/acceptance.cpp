// Acceptance suite: prints one PASS/FAIL line per criterion.
// Usage: jitkit_acceptance [criterion ...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jitkit/experiment.hpp"
#include "jitkit/shopfloor_sim.hpp"
#include "support.hpp"

using namespace jitkit;
using jitkit::testing::random_scenario;
using jitkit::testing::RandomScenarioOptions;
using jitkit::testing::scratch_dir;
using jitkit::testing::source_path;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CEParams quick_ce() {
  CEParams p;
  p.sample_count = 60;
  p.elite_count = 10;
  p.max_iterations = 40;
  return p;
}

// Fixed-duration variant of a scenario (expected values).
Scenario deterministic(const Scenario& s) {
  std::vector<Task> tasks = s.graph.tasks();
  for (auto& t : tasks) {
    t.human_duration = expected_seconds(t.human_duration);
    t.robot_duration = expected_seconds(t.robot_duration);
  }
  return make_scenario(s.part_types, s.parts, tasks, s.tray);
}

// ---- 1: precedence safety ----

Outcome precedence_safety() {
  std::mt19937_64 rng(1001);
  int violations = 0, duplicate_parts = 0, missing = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RandomScenarioOptions opt;
    opt.max_tasks = 8;
    const Scenario s = random_scenario(rng, opt);
    for (Strategy strategy : kAllStrategies) {
      SimConfig cfg;
      cfg.strategy = strategy;
      cfg.num_units = 2;
      cfg.seed = static_cast<std::uint64_t>(trial);
      cfg.planner.ce_params = quick_ce();
      cfg.planner.delivery_time_d = 5;
      cfg.planner.abs_sync_terms = trial % 2 == 1;
      LayoutCache cache;
      const SimMetrics m = run_simulation(s, cfg, &cache);
      for (int unit = 1; unit <= cfg.num_units; ++unit) {
        TaskSet done;
        std::multiset<PartId> kitted;
        for (const auto& kit : m.kits) {
          if (kit.unit != unit) continue;
          for (const auto& id : kit.segment) {
            if (!allowed(id, done, s.graph)) ++violations;
            if (!done.insert(id).second) ++violations;
            for (const auto& p : s.graph.task(id).required_parts) kitted.insert(p);
          }
        }
        if (done.size() != s.graph.size()) ++missing;
        for (const auto& p : s.parts) {
          const auto c = kitted.count(p.id);
          if (c > 1) ++duplicate_parts;
          if (c == 0 && std::any_of(s.graph.tasks().begin(), s.graph.tasks().end(),
                                    [&](const Task& t) {
                                      return std::find(t.required_parts.begin(),
                                                       t.required_parts.end(),
                                                       p.id) != t.required_parts.end();
                                    })) {
            ++missing;
          }
        }
      }
    }
  }
  return {violations == 0 && duplicate_parts == 0 && missing == 0,
          fmt("600 runs: %d precedence violations, %d parts kitted twice, %d incomplete",
              violations, duplicate_parts, missing)};
}

// ---- 2: lower-level oracle ----

struct Shape {
  double w, h;
};

struct Placed {
  double x0, y0, x1, y1, cx, cy;
};

// Exhaustive optimum over 1 mm corner positions and theta in {0, pi/2}.
double grid_optimum(const std::vector<Shape>& shapes, const std::vector<int>& types,
                    double tray) {
  const std::size_t n = shapes.size();
  std::vector<std::vector<Placed>> options(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::set<std::pair<double, double>> dims{{shapes[k].w, shapes[k].h},
                                             {shapes[k].h, shapes[k].w}};
    for (auto [w, h] : dims) {
      for (int i = 0; i + w <= tray; ++i) {
        for (int j = 0; j + h <= tray; ++j) {
          options[k].push_back({double(i), double(j), i + w, j + h, i + w / 2, j + h / 2});
        }
      }
    }
  }
  auto disjoint = [](const Placed& a, const Placed& b) {
    return a.x1 <= b.x0 || b.x1 <= a.x0 || a.y1 <= b.y0 || b.y1 <= a.y0;
  };
  double best = std::numeric_limits<double>::infinity();
  std::vector<const Placed*> chosen(n);
  std::function<void(std::size_t)> recurse = [&](std::size_t k) {
    if (k == n) {
      double cost = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          const double d = std::hypot(chosen[a]->cx - chosen[b]->cx, chosen[a]->cy - chosen[b]->cy);
          cost += types[a] == types[b] ? d : -d;
        }
      }
      best = std::min(best, cost);
      return;
    }
    for (const auto& p : options[k]) {
      bool ok = true;
      for (std::size_t a = 0; a < k && ok; ++a) ok = disjoint(*chosen[a], p);
      if (!ok) continue;
      chosen[k] = &p;
      recurse(k + 1);
    }
  };
  recurse(0);
  return best;
}

Outcome lower_level_oracle() {
  const std::vector<Shape> shapes{{1, 1}, {2, 1}, {2, 2}, {3, 2}};
  // Instances as (type label, shape) per part; parts of one type share a shape.
  std::vector<std::vector<std::pair<int, int>>> instances;
  for (int a = 0; a < 4; ++a) {
    instances.push_back({{0, a}, {0, a}});
    instances.push_back({{0, a}, {0, a}, {0, a}});
    for (int b = 0; b < 4; ++b) {
      if (b >= a) instances.push_back({{0, a}, {1, b}});
      instances.push_back({{0, a}, {0, a}, {1, b}});
      for (int c = b; c < 4; ++c) {
        if (b >= a) instances.push_back({{0, a}, {1, b}, {2, c}});
      }
    }
  }
  // Precision settings for millimetre-scale instances.
  CEParams params;
  params.convergence_std_tol = 0.001;
  params.max_iterations = 300;
  params.covariance_decay_power = 20;
  params.covariance_shrinkage = 0.2;
  const Tray tray{10, 10};
  int passing_instances = 0;
  std::string misses;
  for (const auto& inst : instances) {
    std::vector<PartType> part_types;
    std::vector<PartInstance> parts;
    std::vector<Shape> inst_shapes;
    std::vector<int> labels;
    std::vector<PartId> ids;
    std::set<int> seen;
    for (std::size_t k = 0; k < inst.size(); ++k) {
      const auto [label, shape] = inst[k];
      const std::string type = "T" + std::to_string(label);
      if (seen.insert(label).second) {
        part_types.push_back({type, type, shapes[shape].w, shapes[shape].h});
      }
      inst_shapes.push_back(shapes[shape]);
      labels.push_back(label);
      ids.push_back("p" + std::to_string(k));
      parts.push_back({ids.back(), type});
    }
    const PartCatalog catalog(part_types, parts);
    const double opt = grid_optimum(inst_shapes, labels, tray.width);
    int ok = 0;
    for (int seed = 0; seed < 20; ++seed) {
      CEParams p = params;
      p.seed = static_cast<std::uint64_t>(seed);
      try {
        const ArrangeResult r = arrange_kit(ids, catalog, tray, {}, p);
        if (r.cost <= opt + 0.05 * std::abs(opt)) ++ok;
      } catch (const KitInfeasibleError&) {
      }
    }
    const double rate = ok / 20.0;
    if (rate >= 0.95) {
      ++passing_instances;
    } else {
      std::ostringstream os;
      os << "; ";
      for (const auto& [label, shape] : inst) {
        os << "T" << label << ":" << shapes[shape].w << "x" << shapes[shape].h << " ";
      }
      os << "opt " << opt << " rate " << rate;
      misses += os.str();
    }
  }
  const int total = static_cast<int>(instances.size());
  return {passing_instances == total,
          fmt("%d/%d instances within 5%% of the grid optimum in >= 95%% of 20 seeds",
              passing_instances, total) +
              misses};
}

// ---- 3: upper-level oracle ----

struct OracleChoice {
  std::vector<TaskId> segment;
  double value = 0.0;
};

// Independent exhaustive search over every permutation of the incomplete tasks and every
// partition, with the objective written out directly.
OracleChoice exhaustive_first_segment(const Scenario& s, const PlannerConfig& c,
                                      const PlannerState& st, LayoutCache& cache) {
  std::vector<TaskId> ids;
  for (const auto& t : s.graph.tasks()) ids.push_back(t.id);
  std::sort(ids.begin(), ids.end());
  const auto& w = c.weights;
  bool found = false;
  OracleChoice best;
  int best_i = 0;
  do {
    for (std::size_t i = 1; i <= ids.size(); ++i) {
      const std::vector<TaskId> head(ids.begin(), ids.begin() + i);
      const auto layout = cache.get(parts_of(head, s.graph), s.catalog, s.tray,
                                    c.fitness_weights, c.ce_params);
      if (!layout->feasible) continue;
      TaskSet seen;
      int violations = 0;
      for (const auto& id : ids) {
        if (!allowed(id, seen, s.graph)) ++violations;
        seen.insert(id);
      }
      double r_now = 0, h_now = 0, r_next = 0;
      for (std::size_t j = 0; j < ids.size(); ++j) {
        const Task& t = s.graph.task(ids[j]);
        (j < i ? r_now : r_next) += expected_seconds(t.robot_duration);
        if (j < i) h_now += expected_seconds(t.human_duration);
      }
      double a = c.delivery_time_d + r_now - st.current_segment_human_remaining;
      double b = c.delivery_time_d + r_next - h_now;
      if (c.abs_sync_terms) {
        a = std::abs(a);
        b = std::abs(b);
      }
      int unavailable = 0;
      for (const auto& p : parts_of(head, s.graph)) {
        auto it = st.part_availability.find(p);
        if (it != st.part_availability.end() && !it->second) ++unavailable;
      }
      const double v = w.w1_precedence * violations - w.w2_coverage * double(i) +
                       w.w3_sync_now * a + w.w4_sync_next * b + w.w5_kit_fitness * layout->cost +
                       w.w7_unavailable * unavailable;
      const double scale = std::max({1.0, std::abs(v), std::abs(best.value)});
      bool better = !found || v < best.value - 1e-9 * scale ||
                    (std::abs(v - best.value) <= 1e-9 * scale && int(i) > best_i);
      if (better) {
        found = true;
        best = {head, v};
        best_i = static_cast<int>(i);
      }
    }
  } while (std::next_permutation(ids.begin(), ids.end()));
  if (!found) throw std::runtime_error("oracle: no feasible candidate");
  return best;
}

Outcome upper_level_oracle() {
  std::vector<Scenario> scenarios{deterministic(load_scenario(source_path("scenarios/stool.json")))};
  std::mt19937_64 rng(3003);
  for (int k = 0; k < 20; ++k) {
    RandomScenarioOptions opt;
    opt.max_tasks = 5;
    scenarios.push_back(random_scenario(rng, opt));
  }
  std::vector<PlannerConfig> settings(3);
  settings[0].delivery_time_d = 20;  // defaults, signed sync terms
  settings[1].abs_sync_terms = true;
  settings[1].delivery_time_d = 5;
  settings[1].weights.w2_coverage = 1e-3;
  settings[1].weights.w5_kit_fitness = 0.0;
  settings[2].delivery_time_d = 10;
  settings[2].weights = PlannerWeights{1e6, 5.0, 2.0, 0.5, 0.1, 50.0};
  int agree = 0, total = 0;
  std::string first_miss;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const Scenario& s = scenarios[si];
    for (std::size_t w = 0; w < settings.size(); ++w) {
      PlannerConfig c = settings[w];
      c.horizon_n = static_cast<int>(s.graph.size());
      c.ce_params = quick_ce();
      PlannerState st;
      if (w == 2) {
        st.current_segment_human_remaining = 15;
        if (!s.parts.empty()) st.part_availability[s.parts.front().id] = false;
      }
      LayoutCache cache;
      const auto greedy = solve_segment(st, s, c, &cache);
      const auto oracle = exhaustive_first_segment(s, c, st, cache);
      ++total;
      if (greedy.segment == oracle.segment) {
        ++agree;
      } else if (first_miss.empty()) {
        first_miss = fmt(" (first mismatch: scenario %zu, setting %zu)", si, w);
      }
    }
  }
  return {agree == total,
          fmt("%d/%d first segments match the exhaustive optimum%s", agree, total,
              first_miss.c_str())};
}

// ---- 4: pipeline recurrence ----

Outcome pipeline_recurrence() {
  std::mt19937_64 rng(4004);
  double worst = 0.0;
  int runs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Scenario s = random_scenario(rng);
    const Strategy strategy = kAllStrategies[trial % 3];
    SimConfig cfg;
    cfg.strategy = strategy;
    cfg.num_units = 3;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.planner.delivery_time_d = 7.5;
    cfg.planner.ce_params = quick_ce();
    const SimMetrics m = run_simulation(s, cfg);
    // Closed form over the simulated kit sequence.
    double unit_start = 0.0, makespan = 0.0;
    for (int unit = 1; unit <= cfg.num_units; ++unit) {
      double prev_start_h = 0.0, prev_finish_h = 0.0;
      bool first = true;
      for (const auto& kit : m.kits) {
        if (kit.unit != unit) continue;
        double r = 0.0, h = 0.0;
        for (const auto& id : kit.segment) {
          r += expected_seconds(s.graph.task(id).robot_duration);
          h += expected_seconds(s.graph.task(id).human_duration);
        }
        const double finish_r = (first ? unit_start : prev_start_h) + r;
        const double start_h = first ? finish_r + cfg.planner.delivery_time_d
                                     : std::max(prev_finish_h, finish_r + cfg.planner.delivery_time_d);
        prev_start_h = start_h;
        prev_finish_h = start_h + h;
        first = false;
      }
      unit_start = prev_finish_h;
      makespan = prev_finish_h;
    }
    worst = std::max(worst, std::abs(makespan - m.total_task_time));
    ++runs;
  }
  return {worst <= 1e-6, fmt("%d scenarios, max |sim - recurrence| = %.3g s", runs, worst)};
}

// ---- 5, 6: directional reproduction ----

SimConfig table_config() {
  const ExperimentConfig e = load_experiment_config(source_path("scenarios/example_experiment.json"));
  SimConfig c = e.sim;
  c.planner.delivery_time_d = 20;
  return c;
}

// Paired per-replication differences (baseline - candidate) of per-unit means.
ConfidenceInterval paired_ci(const SweepResult& r, double mat, double mttf, Strategy baseline,
                             Strategy candidate, bool idle) {
  std::map<int, double> base, cand;
  for (const auto& row : r.rows) {
    if (row.mat != mat || !(row.mttf == mttf)) continue;
    const double v = idle ? row.metrics.mean_unit_idle_time() : row.metrics.mean_unit_total_time();
    if (row.strategy == baseline) base[row.replication] = v;
    if (row.strategy == candidate) cand[row.replication] = v;
  }
  std::vector<double> diffs;
  for (const auto& [rep, v] : base) diffs.push_back(v - cand.at(rep));
  return bootstrap_mean_ci(diffs, 10000, 77);
}

Outcome no_delay_direction() {
  const Scenario s = load_scenario(source_path("scenarios/table_12task.json"));
  SimConfig base = table_config();
  SweepGrid grid;
  grid.mat_values = {0.0};
  grid.mttf_values = {kNever};
  grid.strategies = {std::begin(kAllStrategies), std::end(kAllStrategies)};
  LayoutCache cache;
  const SweepResult r = sweep(s, base, grid, 100, 0, &cache);
  bool ok = true;
  std::ostringstream os;
  for (Strategy cand : {Strategy::single_task, Strategy::optimized}) {
    for (bool idle : {false, true}) {
      const auto ci = paired_ci(r, 0.0, kNever, Strategy::whole_assembly, cand, idle);
      ok = ok && ci.low > 0.0;
      os << to_string(cand) << (idle ? " idle " : " total ")
         << fmt("%+.1f s [%.1f, %.1f]; ", ci.mean, ci.low, ci.high);
    }
  }
  return {ok, "whole - x: " + os.str()};
}

Outcome delay_direction() {
  const Scenario s = load_scenario(source_path("scenarios/table_12task.json"));
  SimConfig base = table_config();
  SweepGrid grid;
  grid.mat_part_types = {"leg", "foot"};
  grid.mttf_machines = {"leg", "foot"};
  grid.mat_values = {0.0, 30.0, 120.0, 300.0};
  grid.mttf_values = {kNever, 600.0, 120.0};
  grid.strategies = {std::begin(kAllStrategies), std::end(kAllStrategies)};
  LayoutCache cache;
  const SweepResult r = sweep(s, base, grid, 100, 0, &cache);
  bool ok = true;
  std::ostringstream os;
  for (bool idle : {false, true}) {
    for (double mttf : grid.mttf_values) {
      const auto a = paired_ci(r, 300.0, mttf, Strategy::whole_assembly, Strategy::optimized, idle);
      const auto b = paired_ci(r, 0.0, mttf, Strategy::single_task, Strategy::optimized, idle);
      ok = ok && a.low > 0.0 && b.low > 0.0;
      os << (idle ? "idle" : "total") << " mttf " << format_number(mttf)
         << fmt(": MAT300 whole-opt [%.1f, %.1f], MAT0 single-opt [%.1f, %.1f]; ", a.low, a.high,
                b.low, b.high);
    }
  }
  return {ok, os.str()};
}

// ---- 7: determinism ----

Outcome determinism() {
  const auto dir = scratch_dir("acceptance_determinism");
  nlohmann::json cfg = nlohmann::json::parse(slurp(source_path("scenarios/example_experiment.json")));
  cfg["scenario"] = source_path("scenarios/table_12task.json").string();
  cfg["replications"] = 3;
  cfg["num_units"] = 3;
  const auto path = dir / "experiment.json";
  std::ofstream(path) << cfg.dump(2);
  std::ostringstream out, err;
  bool ok = true;
  std::vector<std::string> files;
  for (int k = 0; k < 2; ++k) {
    RunOverrides o;
    o.seed = 11;
    o.output_dir = dir / ("run" + std::to_string(k));
    ok = ok && cmd_run(path, o, out, err) == kExitOk;
    o.output_dir = dir / ("sweep" + std::to_string(k));
    o.threads = k == 0 ? 1 : 4;
    ok = ok && cmd_sweep(path, o, out, err) == kExitOk;
  }
  const bool run_same = slurp(dir / "run0/metrics.csv") == slurp(dir / "run1/metrics.csv");
  const bool sweep_same = slurp(dir / "sweep0/sweep.csv") == slurp(dir / "sweep1/sweep.csv") &&
                          slurp(dir / "sweep0/improvements.csv") ==
                              slurp(dir / "sweep1/improvements.csv");
  const bool nonempty = !slurp(dir / "run0/metrics.csv").empty() &&
                        !slurp(dir / "sweep0/sweep.csv").empty();
  return {ok && run_same && sweep_same && nonempty,
          fmt("run CSV identical: %s, sweep CSVs identical (1 vs 4 threads): %s",
              run_same ? "yes" : "no", sweep_same ? "yes" : "no")};
}

// ---- 8: CE conformance ----

Outcome ce_conformance() {
  const Scenario s = load_scenario(source_path("scenarios/table_12task.json"));
  std::vector<PartId> ids;
  for (const auto& p : s.parts) {
    const auto& type = s.catalog.at(p.id).type;
    if (type == "leg" || type == "foot" || type == "connector") ids.push_back(p.id);
  }
  int good = 0;
  for (int seed = 0; seed < 50; ++seed) {
    CEParams p;  // 200 samples, 30 elites, 100 iterations
    p.seed = static_cast<std::uint64_t>(seed);
    try {
      const ArrangeResult r = arrange_kit(ids, s.catalog, s.tray, {}, p);
      const auto d = pair_distance_sums(r.layout, s.catalog);
      int same = 0, diff = 0;
      for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
          (s.catalog.at(ids[a]).type == s.catalog.at(ids[b]).type ? same : diff) += 1;
        }
      }
      const bool clean = containment_violation(r.layout, s.catalog) == 0.0 &&
                         overlap_area(r.layout, s.catalog) <= kOverlapTolerance;
      if (clean && d.same / same < d.diff / diff) ++good;
    } catch (const KitInfeasibleError&) {
    }
  }
  return {good >= 48, fmt("%zu-part kit: %d/50 seeds clean and clustered", ids.size(), good)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::string name;
    std::function<Outcome()> check;
    double limit_s;
  };
  const std::vector<Criterion> criteria{
      {"precedence safety", precedence_safety, 60},
      {"lower-level oracle", lower_level_oracle, 300},
      {"upper-level oracle", upper_level_oracle, 120},
      {"pipeline recurrence", pipeline_recurrence, 600},
      {"no-delay direction", no_delay_direction, 600},
      {"delay-regime direction", delay_direction, 1800},
      {"determinism", determinism, 600},
      {"CE conformance", ce_conformance, 120},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int number = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > criteria[k].limit_s) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s limit]", criteria[k].limit_s);
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << number << " ("
              << criteria[k].name << ", " << fmt("%.1f s", secs) << "): " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
