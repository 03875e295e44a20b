#include "jitkit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "jitkit/rng.hpp"

namespace jitkit {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) config_error(where, "expected object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      config_error(where, "unknown key \"" + key + "\"");
    }
  }
}

double as_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return kNever;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return kNever;
  }
  config_error(where, "expected number (or \"inf\")");
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) config_error(where, "expected integer");
  return j.get<int>();
}

std::map<PartTypeId, double> as_number_map(const json& j, const std::string& where) {
  if (!j.is_object()) config_error(where, "expected object of numbers");
  std::map<PartTypeId, double> out;
  for (const auto& [key, value] : j.items()) out[key] = as_number(value, where + "." + key);
  return out;
}

std::vector<double> as_number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error(where, "expected non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::string> as_string_list(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where, "expected array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) config_error(where + "[" + std::to_string(i) + "]", "expected string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

Strategy strategy_of(const std::string& name, const std::string& where) {
  try {
    return parse_strategy(name);
  } catch (const std::invalid_argument& e) {
    config_error(where, e.what());
  }
}

void parse_planner(const json& j, PlannerConfig& p) {
  check_keys(j, "planner", {"horizon_n", "delivery_time_s", "abs_sync_terms", "weights", "ce"});
  if (j.contains("horizon_n")) p.horizon_n = as_int(j["horizon_n"], "planner.horizon_n");
  if (j.contains("delivery_time_s")) {
    p.delivery_time_d = as_number(j["delivery_time_s"], "planner.delivery_time_s");
  }
  if (j.contains("abs_sync_terms")) {
    if (!j["abs_sync_terms"].is_boolean()) config_error("planner.abs_sync_terms", "expected boolean");
    p.abs_sync_terms = j["abs_sync_terms"].get<bool>();
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    check_keys(w, "planner.weights", {"w1", "w2", "w3", "w4", "w5", "w6", "w7", "overlap_term"});
    auto set = [&](const char* key, double& field) {
      if (w.contains(key)) field = as_number(w[key], std::string("planner.weights.") + key);
    };
    set("w1", p.weights.w1_precedence);
    set("w2", p.weights.w2_coverage);
    set("w3", p.weights.w3_sync_now);
    set("w4", p.weights.w4_sync_next);
    set("w5", p.weights.w5_kit_fitness);
    set("w6", p.fitness_weights.w6_overlap);
    set("w7", p.weights.w7_unavailable);
    if (w.contains("overlap_term")) {
      const auto term = w["overlap_term"].is_string() ? w["overlap_term"].get<std::string>() : "";
      if (term == "penalize") {
        p.fitness_weights.overlap_term = OverlapTerm::penalize;
      } else if (term == "as_written") {
        p.fitness_weights.overlap_term = OverlapTerm::as_written;
      } else {
        config_error("planner.weights.overlap_term", "expected \"penalize\" or \"as_written\"");
      }
    }
  }
  if (j.contains("ce")) {
    const json& c = j["ce"];
    check_keys(c, "planner.ce",
               {"samples", "elite", "max_iters", "seed", "convergence_std_tol_mm",
                "cov_jitter_mm2", "containment_penalty", "retry_limit", "starts", "smoothing",
                "covariance_shrinkage", "covariance_smoothing", "covariance_decay_power"});
    CEParams& ce = p.ce_params;
    if (c.contains("samples")) ce.sample_count = as_int(c["samples"], "planner.ce.samples");
    if (c.contains("elite")) ce.elite_count = as_int(c["elite"], "planner.ce.elite");
    if (c.contains("max_iters")) ce.max_iterations = as_int(c["max_iters"], "planner.ce.max_iters");
    if (c.contains("seed")) {
      if (!(c["seed"].is_number_integer() && c["seed"].get<std::int64_t>() >= 0)) {
        config_error("planner.ce.seed", "expected a non-negative integer");
      }
      ce.seed = c["seed"].get<std::uint64_t>();
    }
    if (c.contains("convergence_std_tol_mm")) {
      ce.convergence_std_tol = as_number(c["convergence_std_tol_mm"], "planner.ce.convergence_std_tol_mm");
    }
    if (c.contains("cov_jitter_mm2")) ce.cov_jitter = as_number(c["cov_jitter_mm2"], "planner.ce.cov_jitter_mm2");
    if (c.contains("containment_penalty")) {
      ce.containment_penalty_weight = as_number(c["containment_penalty"], "planner.ce.containment_penalty");
    }
    if (c.contains("retry_limit")) ce.retry_limit = as_int(c["retry_limit"], "planner.ce.retry_limit");
    if (c.contains("starts")) ce.starts = as_int(c["starts"], "planner.ce.starts");
    if (c.contains("smoothing")) ce.smoothing = as_number(c["smoothing"], "planner.ce.smoothing");
    if (c.contains("covariance_smoothing")) {
      ce.covariance_smoothing = as_number(c["covariance_smoothing"], "planner.ce.covariance_smoothing");
    }
    if (c.contains("covariance_decay_power")) {
      ce.covariance_decay_power =
          as_number(c["covariance_decay_power"], "planner.ce.covariance_decay_power");
    }
    if (c.contains("covariance_shrinkage")) {
      ce.covariance_shrinkage = as_number(c["covariance_shrinkage"], "planner.ce.covariance_shrinkage");
    }
  }
  const auto& ce = p.ce_params;
  if (ce.elite_count <= 0 || ce.elite_count > ce.sample_count || ce.max_iterations < 1) {
    config_error("planner.ce", "need 0 < elite <= samples and max_iters >= 1");
  }
  if (!(ce.covariance_shrinkage >= 0.0 && ce.covariance_shrinkage <= 1.0)) {
    config_error("planner.ce.covariance_shrinkage", "must be in [0, 1]");
  }
  if (!(ce.covariance_smoothing > 0.0 && ce.covariance_smoothing <= 1.0)) {
    config_error("planner.ce.covariance_smoothing", "must be in (0, 1]");
  }
  if (!(ce.covariance_decay_power >= 0.0)) {
    config_error("planner.ce.covariance_decay_power", "must be >= 0");
  }
  if (ce.starts < 1) config_error("planner.ce.starts", "must be >= 1");
  if (ce.retry_limit < 0) config_error("planner.ce.retry_limit", "must be >= 0");
  if (!(ce.smoothing > 0.0 && ce.smoothing <= 1.0)) config_error("planner.ce.smoothing", "must be in (0, 1]");
  if (p.horizon_n < 1) config_error("planner.horizon_n", "must be >= 1");
  if (!(p.delivery_time_d >= 0.0) || std::isinf(p.delivery_time_d)) {
    config_error("planner.delivery_time_s", "must be a finite non-negative number");
  }
}

double lookup_or_zero(const std::map<PartTypeId, double>& m, const char* key) {
  auto it = m.find(key);
  return it == m.end() ? 0.0 : it->second;
}

// MTTF column: the feeder MTTF shared by the swept machines (leg, then foot, then any).
double mttf_column(const SimConfig& sim) {
  for (const char* key : {"leg", "foot"}) {
    auto it = sim.mttf_by_machine.find(key);
    if (it != sim.mttf_by_machine.end()) return it->second;
  }
  return sim.mttf_by_machine.empty() ? kNever : sim.mttf_by_machine.begin()->second;
}

std::string csv_row(Strategy s, const SimConfig& sim, int replication, const std::string& unit,
                    double total, double idle, int kits) {
  std::ostringstream row;
  row << to_string(s) << ',' << format_number(lookup_or_zero(sim.mat_by_part_type, "leg")) << ','
      << format_number(lookup_or_zero(sim.mat_by_part_type, "foot")) << ','
      << format_number(mttf_column(sim)) << ',' << replication << ',' << unit << ','
      << format_number(total) << ',' << format_number(idle) << ',' << kits;
  return row.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

struct Loaded {
  ExperimentConfig config;
  Scenario scenario;
};

// Shared front half of run/sweep: config + scenario, with input errors mapped to exit 2.
std::optional<Loaded> load_inputs(const std::filesystem::path& config_path,
                                  const RunOverrides& overrides, std::ostream& err) {
  try {
    Loaded l;
    l.config = load_experiment_config(config_path);
    apply_overrides(l.config, overrides);
    l.scenario = load_scenario(l.config.scenario_path);
    return l;
  } catch (const ScenarioValidationError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const ScenarioParseError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const ScenarioIoError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
  }
  return std::nullopt;
}

void print_comparisons(std::ostream& out, const std::string& label,
                       const std::vector<Improvement>& improvements) {
  for (const auto& imp : improvements) {
    out << "  " << label << "optimized vs " << to_string(imp.baseline) << ' ' << imp.metric
        << ": " << std::showpos << std::fixed << std::setprecision(1) << imp.percent << "% "
        << std::noshowpos << "(diff " << std::setprecision(2) << imp.diff.mean << " s, 95% CI ["
        << imp.diff.low << ", " << imp.diff.high << "])\n";
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

ExperimentConfig parse_experiment_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "config",
             {"scenario", "strategies", "num_units", "repair_time_s", "seed", "replications",
              "output_dir", "mat_s", "mttf_s", "planner", "sweep", "threads",
              "bootstrap_resamples"});
  ExperimentConfig c;
  if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
    config_error("config.scenario", "required string");
  }
  c.scenario_path = base_dir / doc["scenario"].get<std::string>();
  if (doc.contains("strategies")) {
    c.strategies.clear();
    const auto names = as_string_list(doc["strategies"], "config.strategies");
    for (const auto& n : names) c.strategies.push_back(strategy_of(n, "config.strategies"));
    if (c.strategies.empty()) config_error("config.strategies", "must not be empty");
  }
  if (doc.contains("num_units")) c.sim.num_units = as_int(doc["num_units"], "config.num_units");
  if (c.sim.num_units < 1) config_error("config.num_units", "must be >= 1");
  if (doc.contains("repair_time_s")) c.sim.repair_time = as_number(doc["repair_time_s"], "config.repair_time_s");
  if (!(c.sim.repair_time >= 0.0)) config_error("config.repair_time_s", "must be non-negative");
  if (doc.contains("seed")) {
    if (!(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0)) {
      config_error("config.seed", "expected a non-negative integer");
    }
    c.sim.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("replications")) c.replications = as_int(doc["replications"], "config.replications");
  if (c.replications < 1) config_error("config.replications", "must be >= 1");
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) config_error("config.output_dir", "expected string");
    c.output_dir = base_dir / doc["output_dir"].get<std::string>();
  } else {
    c.output_dir = base_dir / "out";
  }
  if (doc.contains("mat_s")) c.sim.mat_by_part_type = as_number_map(doc["mat_s"], "config.mat_s");
  if (doc.contains("mttf_s")) c.sim.mttf_by_machine = as_number_map(doc["mttf_s"], "config.mttf_s");
  if (doc.contains("planner")) parse_planner(doc["planner"], c.sim.planner);
  if (doc.contains("threads")) c.threads = as_int(doc["threads"], "config.threads");
  if (doc.contains("bootstrap_resamples")) {
    c.bootstrap_resamples = as_int(doc["bootstrap_resamples"], "config.bootstrap_resamples");
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    check_keys(s, "config.sweep", {"part_types", "mat_s", "machines", "mttf_s"});
    SweepGrid g;
    if (!s.contains("part_types")) config_error("config.sweep.part_types", "required");
    g.mat_part_types = as_string_list(s["part_types"], "config.sweep.part_types");
    g.mttf_machines = s.contains("machines") ? as_string_list(s["machines"], "config.sweep.machines")
                                             : g.mat_part_types;
    if (!s.contains("mat_s")) config_error("config.sweep.mat_s", "required");
    if (!s.contains("mttf_s")) config_error("config.sweep.mttf_s", "required");
    g.mat_values = as_number_list(s["mat_s"], "config.sweep.mat_s");
    g.mttf_values = as_number_list(s["mttf_s"], "config.sweep.mttf_s");
    g.strategies = c.strategies;
    c.sweep_grid = std::move(g);
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment_config(doc, path.parent_path());
}

void apply_overrides(ExperimentConfig& config, const RunOverrides& o) {
  if (o.seed) config.sim.seed = *o.seed;
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.strategy) {
    config.strategies = {strategy_of(*o.strategy, "--strategy")};
    if (config.sweep_grid) config.sweep_grid->strategies = config.strategies;
  }
  if (o.replications) {
    if (*o.replications < 1) config_error("--reps", "must be >= 1");
    config.replications = *o.replications;
  }
  if (o.units) {
    if (*o.units < 1) config_error("--units", "must be >= 1");
    config.sim.num_units = *o.units;
  }
  if (o.threads) config.threads = *o.threads;
}

int cmd_validate(const std::filesystem::path& scenario_path, std::ostream& out,
                 std::ostream& err) {
  try {
    const Scenario s = load_scenario(scenario_path);
    out << scenario_path.string() << ": ok (" << s.graph.size() << " tasks, " << s.parts.size()
        << " parts, " << s.part_types.size() << " part types)\n";
    return kExitOk;
  } catch (const ScenarioValidationError& e) {
    err << scenario_path.string() << ": invalid\n";
    for (const auto& v : e.violations()) err << "  " << v << '\n';
    return kExitInvalid;
  } catch (const ScenarioIoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ScenarioParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err) {
  auto loaded = load_inputs(config_path, overrides, err);
  if (!loaded) return kExitConfig;
  const ExperimentConfig& cfg = loaded->config;
  const Scenario& scenario = loaded->scenario;

  try {
    LayoutCache cache;
    std::ostringstream csv;
    csv << kMetricsCsvHeader << '\n';
    std::map<Strategy, std::vector<double>> totals, idles;

    for (Strategy s : cfg.strategies) {
      for (int r = 0; r < cfg.replications; ++r) {
        SimConfig sim = cfg.sim;
        sim.strategy = s;
        sim.seed = cfg.sim.seed + static_cast<std::uint64_t>(r);
        sim.record_trace = overrides.trace;
        const SimMetrics m = run_simulation(scenario, sim, &cache);
        for (const auto& u : m.units) {
          csv << csv_row(s, sim, r, std::to_string(u.unit), u.total_task_time, u.human_idle_time,
                         u.kit_count)
              << '\n';
        }
        totals[s].push_back(m.mean_unit_total_time());
        idles[s].push_back(m.mean_unit_idle_time());
        if (overrides.trace) {
          std::ostringstream lines;
          for (const auto& rec : m.trace) lines << trace_record_to_json(rec).dump() << '\n';
          write_file(cfg.output_dir / ("trace_" + std::string(to_string(s)) + "_rep" +
                                       std::to_string(r) + ".jsonl"),
                     lines.str());
        }
      }
    }
    write_file(cfg.output_dir / "metrics.csv", csv.str());

    out << "scenario " << cfg.scenario_path.filename().string() << ", " << cfg.sim.num_units
        << " units x " << cfg.replications << " replications, seed " << cfg.sim.seed << '\n';
    out << std::left << std::setw(16) << "strategy" << std::right << std::setw(22)
        << "mean total/unit (s)" << std::setw(22) << "mean idle/unit (s)" << '\n';
    for (Strategy s : cfg.strategies) {
      const auto& t = totals[s];
      const auto& i = idles[s];
      const double mt = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
      const double mi = std::accumulate(i.begin(), i.end(), 0.0) / static_cast<double>(i.size());
      out << std::left << std::setw(16) << to_string(s) << std::right << std::fixed
          << std::setprecision(2) << std::setw(22) << mt << std::setw(22) << mi << '\n';
    }
    out.unsetf(std::ios::floatfield);

    if (totals.count(Strategy::optimized) && cfg.replications >= 1) {
      std::vector<Improvement> imps;
      std::uint64_t stream = 0;
      for (Strategy b : cfg.strategies) {
        if (b == Strategy::optimized) continue;
        for (bool idle : {false, true}) {
          const auto& bv = idle ? idles[b] : totals[b];
          const auto& ov = idle ? idles[Strategy::optimized] : totals[Strategy::optimized];
          std::vector<double> diffs(bv.size());
          for (std::size_t k = 0; k < bv.size(); ++k) diffs[k] = bv[k] - ov[k];
          Improvement imp;
          imp.baseline = b;
          imp.metric = idle ? "human_idle_time" : "total_task_time";
          const double mb = std::accumulate(bv.begin(), bv.end(), 0.0) / static_cast<double>(bv.size());
          const double mo = std::accumulate(ov.begin(), ov.end(), 0.0) / static_cast<double>(ov.size());
          imp.percent = percent_improvement(mb, mo);
          imp.diff = bootstrap_mean_ci(diffs, cfg.bootstrap_resamples,
                                       derive_seed(cfg.sim.seed, {0xc1, stream++}));
          imps.push_back(imp);
        }
      }
      print_comparisons(out, "", imps);
    }
    out << "wrote " << (cfg.output_dir / "metrics.csv").string() << '\n';
    return kExitOk;
  } catch (const PlannerInfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_sweep(const std::filesystem::path& config_path, const RunOverrides& overrides,
              std::ostream& out, std::ostream& err) {
  auto loaded = load_inputs(config_path, overrides, err);
  if (!loaded) return kExitConfig;
  const ExperimentConfig& cfg = loaded->config;
  if (!cfg.sweep_grid) {
    err << "error: " << config_path.string() << ": config has no \"sweep\" block\n";
    return kExitConfig;
  }

  try {
    LayoutCache cache;
    const SweepResult res = sweep(loaded->scenario, cfg.sim, *cfg.sweep_grid, cfg.replications,
                                  cfg.threads, &cache, cfg.bootstrap_resamples);

    std::ostringstream csv;
    csv << kMetricsCsvHeader << '\n';
    for (const auto& row : res.rows) {
      SimConfig sim = cfg.sim;
      for (const auto& t : cfg.sweep_grid->mat_part_types) sim.mat_by_part_type[t] = row.mat;
      for (const auto& m : cfg.sweep_grid->mttf_machines) sim.mttf_by_machine[m] = row.mttf;
      csv << csv_row(row.strategy, sim, row.replication, "all",
                     row.metrics.mean_unit_total_time(), row.metrics.mean_unit_idle_time(),
                     row.metrics.kit_count)
          << '\n';
    }
    write_file(cfg.output_dir / "sweep.csv", csv.str());

    std::ostringstream imp_csv;
    imp_csv << "mat_s,mttf_s,baseline,candidate,metric,percent_improvement,mean_diff_s,"
               "ci_low_s,ci_high_s\n";
    for (const auto& imp : res.improvements) {
      imp_csv << format_number(imp.mat) << ',' << format_number(imp.mttf) << ','
              << to_string(imp.baseline) << ',' << to_string(imp.candidate) << ',' << imp.metric
              << ',' << format_number(imp.percent) << ',' << format_number(imp.diff.mean) << ','
              << format_number(imp.diff.low) << ',' << format_number(imp.diff.high) << '\n';
    }
    write_file(cfg.output_dir / "improvements.csv", imp_csv.str());

    out << "sweep: " << cfg.sweep_grid->mat_values.size() << " MAT x "
        << cfg.sweep_grid->mttf_values.size() << " MTTF x " << cfg.sweep_grid->strategies.size()
        << " strategies x " << cfg.replications << " replications = " << res.rows.size()
        << " rows\n";
    for (const auto& cell : res.cells) {
      out << "  mat=" << format_number(cell.mat) << " mttf=" << format_number(cell.mttf) << ' '
          << std::left << std::setw(15) << to_string(cell.strategy) << std::right << std::fixed
          << std::setprecision(2) << " total " << cell.mean_total << " (sd " << cell.sd_total
          << ")  idle " << cell.mean_idle << " (sd " << cell.sd_idle << ")  kits "
          << cell.mean_kits << '\n';
      out.unsetf(std::ios::floatfield);
    }
    for (const auto& imp : res.improvements) {
      std::ostringstream label;
      label << "mat=" << format_number(imp.mat) << " mttf=" << format_number(imp.mttf) << ": ";
      print_comparisons(out, label.str(), {imp});
    }
    out << "wrote " << (cfg.output_dir / "sweep.csv").string() << " and "
        << (cfg.output_dir / "improvements.csv").string() << '\n';
    return kExitOk;
  } catch (const PlannerInfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_layout(const LayoutRequest& request, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  PlannerConfig planner;
  try {
    scenario = load_scenario(request.scenario_path);
    if (request.config_path) planner = load_experiment_config(*request.config_path).sim.planner;
  } catch (const ScenarioValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ScenarioParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ScenarioIoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (request.seed) planner.ce_params.seed = *request.seed;

  std::vector<PartId> parts;
  try {
    parts = parts_of(request.tasks, scenario.graph);
  } catch (const LookupError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (parts.empty()) {
    err << "error: the selected tasks require no parts\n";
    return kExitConfig;
  }

  auto report = [&](const KitLayout& layout) {
    const CostBreakdown b = evaluate_layout(layout, scenario.catalog, planner.fitness_weights);
    out << std::fixed << std::setprecision(3) << "D_same " << b.d_same << " mm\nD_diff "
        << b.d_diff << " mm\noverlap Z " << b.overlap << " mm^2\ncontainment violation "
        << b.containment << " mm^2\ncost " << b.cost << '\n';
    out.unsetf(std::ios::floatfield);
    write_file(request.output_json, layout_to_json(layout).dump(2) + "\n");
    if (request.output_svg) write_file(*request.output_svg, layout_to_svg(layout, scenario.catalog));
  };

  try {
    const ArrangeResult r = arrange_kit(parts, scenario.catalog, scenario.tray,
                                        planner.fitness_weights, planner.ce_params);
    out << parts.size() << " parts, " << r.iterations << " CE iterations"
        << (r.converged ? " (converged)" : "") << ", from run " << r.best_start + 1 << "\n";
    report(r.layout);
    out << "wrote " << request.output_json.string() << '\n';
    return kExitOk;
  } catch (const KitPreconditionError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const KitInfeasibleError& e) {
    err << "infeasible: " << e.what() << "; best-found layout dumped\n";
    report(e.best_layout);
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace jitkit
