#include "jitkit/task_model.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <queue>
#include <sstream>

namespace jitkit {

double expected_seconds(const Duration& d) {
  if (const auto* fixed = std::get_if<double>(&d)) return *fixed;
  const auto& samples = std::get<EmpiricalDuration>(d).samples;
  if (samples.empty()) return 0.0;
  return std::accumulate(samples.begin(), samples.end(), 0.0) /
         static_cast<double>(samples.size());
}

TaskGraph::TaskGraph(std::vector<Task> tasks) : tasks_(std::move(tasks)) {
  index_.reserve(tasks_.size());
  for (std::size_t i = 0; i < tasks_.size(); ++i) index_.emplace(tasks_[i].id, i);
}

bool TaskGraph::contains(std::string_view id) const {
  return index_.find(std::string(id)) != index_.end();
}

std::size_t TaskGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw LookupError("unknown task id " + std::string(id));
  return it->second;
}

bool allowed(std::string_view task, const TaskSet& completed, const TaskGraph& graph) {
  const Task& t = graph.task(task);
  return std::all_of(t.predecessors.begin(), t.predecessors.end(),
                     [&](const TaskId& p) { return completed.count(p) > 0; });
}

namespace {

void check_duration(const Duration& d, const std::string& where,
                    std::vector<std::string>& out) {
  if (const auto* fixed = std::get_if<double>(&d)) {
    if (!(*fixed >= 0.0)) out.push_back("negative duration in " + where);
    return;
  }
  const auto& samples = std::get<EmpiricalDuration>(d).samples;
  if (samples.empty()) out.push_back("empty duration distribution in " + where);
  for (double s : samples) {
    if (!(s >= 0.0)) {
      out.push_back("negative duration sample in " + where);
      break;
    }
  }
}

// Every elementary cycle reachable by DFS, each reported once starting at its smallest id.
std::vector<std::vector<TaskId>> find_cycles(const TaskGraph& graph) {
  const auto& tasks = graph.tasks();
  const std::size_t n = tasks.size();
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : tasks[i].predecessors) {
      if (graph.contains(p)) succ[graph.index_of(p)].push_back(i);
    }
  }
  for (auto& s : succ) {
    std::sort(s.begin(), s.end(),
              [&](std::size_t a, std::size_t b) { return tasks[a].id < tasks[b].id; });
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return tasks[a].id < tasks[b].id; });

  enum class Color { white, gray, black };
  std::vector<Color> color(n, Color::white);
  std::vector<std::size_t> stack;
  std::set<std::vector<TaskId>> seen;
  std::vector<std::vector<TaskId>> cycles;

  std::function<void(std::size_t)> visit = [&](std::size_t u) {
    color[u] = Color::gray;
    stack.push_back(u);
    for (std::size_t v : succ[u]) {
      if (color[v] == Color::gray) {
        auto from = std::find(stack.begin(), stack.end(), v);
        std::vector<TaskId> cyc;
        for (auto it = from; it != stack.end(); ++it) cyc.push_back(tasks[*it].id);
        std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
        if (seen.insert(cyc).second) cycles.push_back(std::move(cyc));
      } else if (color[v] == Color::white) {
        visit(v);
      }
    }
    stack.pop_back();
    color[u] = Color::black;
  };
  for (std::size_t u : order) {
    if (color[u] == Color::white) visit(u);
  }
  return cycles;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> validate_graph(const TaskGraph& graph,
                                        const std::vector<PartInstance>* parts) {
  std::vector<std::string> violations;
  if (graph.empty()) {
    violations.emplace_back("graph has no tasks");
    return violations;
  }

  std::set<TaskId> ids;
  for (const auto& t : graph.tasks()) {
    if (!ids.insert(t.id).second) violations.push_back("duplicate task id " + t.id);
  }

  std::map<PartId, TaskId> part_owner;
  std::set<PartId> known_parts;
  if (parts) {
    for (const auto& p : *parts) known_parts.insert(p.id);
  }

  for (const auto& t : graph.tasks()) {
    for (const auto& p : t.predecessors) {
      if (!graph.contains(p)) violations.push_back("unknown predecessor " + p + " in task " + t.id);
    }
    check_duration(t.human_duration, "task " + t.id + " (human)", violations);
    check_duration(t.robot_duration, "task " + t.id + " (robot)", violations);
    for (const auto& part : t.required_parts) {
      if (parts && !known_parts.count(part)) {
        violations.push_back("unknown part " + part + " in task " + t.id);
      }
      auto [it, inserted] = part_owner.emplace(part, t.id);
      if (!inserted) {
        violations.push_back("duplicate part " + part + " required by " + it->second + " and " +
                             t.id);
      }
    }
  }

  for (const auto& cyc : find_cycles(graph)) violations.push_back("cycle: " + join(cyc, ","));
  return violations;
}

std::vector<TaskId> topological_order(const TaskGraph& graph) {
  const auto& tasks = graph.tasks();
  std::vector<std::size_t> indegree(tasks.size(), 0);
  std::vector<std::vector<std::size_t>> succ(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (const auto& p : tasks[i].predecessors) {
      succ[graph.index_of(p)].push_back(i);
      ++indegree[i];
    }
  }
  auto later = [&](std::size_t a, std::size_t b) { return tasks[a].id > tasks[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<TaskId> order;
  order.reserve(tasks.size());
  while (!ready.empty()) {
    std::size_t u = ready.top();
    ready.pop();
    order.push_back(tasks[u].id);
    for (std::size_t v : succ[u]) {
      if (--indegree[v] == 0) ready.push(v);
    }
  }
  if (order.size() != tasks.size()) throw std::invalid_argument("task graph has a cycle");
  return order;
}

PartCatalog::PartCatalog(const std::vector<PartType>& types,
                         const std::vector<PartInstance>& parts)
    : types_(types) {
  for (std::size_t i = 0; i < types_.size(); ++i) type_index_.emplace(types_[i].id, i);
  entries_.reserve(parts.size());
  for (const auto& p : parts) {
    const PartType& t = type(p.part_type);
    part_index_.emplace(p.id, entries_.size());
    entries_.push_back(Entry{p.id, t.id, t.bbox_width, t.bbox_height});
  }
}

const PartCatalog::Entry& PartCatalog::at(std::string_view part) const {
  auto it = part_index_.find(std::string(part));
  if (it == part_index_.end()) throw LookupError("unknown part id " + std::string(part));
  return entries_[it->second];
}

bool PartCatalog::contains(std::string_view part) const {
  return part_index_.count(std::string(part)) > 0;
}

const PartType& PartCatalog::type(std::string_view type_id) const {
  auto it = type_index_.find(std::string(type_id));
  if (it == type_index_.end()) throw LookupError("unknown part type " + std::string(type_id));
  return types_[it->second];
}

ScenarioValidationError::ScenarioValidationError(std::vector<std::string> violations)
    : std::runtime_error("invalid scenario: " + join(violations, "; ")),
      violations_(std::move(violations)) {}

Scenario make_scenario(std::vector<PartType> types, std::vector<PartInstance> parts,
                       std::vector<Task> tasks, Tray tray) {
  std::vector<std::string> violations;
  std::set<PartTypeId> type_ids;
  for (const auto& t : types) {
    if (!type_ids.insert(t.id).second) violations.push_back("duplicate part type id " + t.id);
    if (!(t.bbox_width > 0.0) || !(t.bbox_height > 0.0)) {
      violations.push_back("part type " + t.id + " has non-positive bounding box");
    }
  }
  std::set<PartId> part_ids;
  for (const auto& p : parts) {
    if (!part_ids.insert(p.id).second) violations.push_back("duplicate part id " + p.id);
    if (!type_ids.count(p.part_type)) {
      violations.push_back("part " + p.id + " references unknown part type " + p.part_type);
    }
  }
  if (!(tray.width > 0.0) || !(tray.height > 0.0)) {
    violations.emplace_back("tray dimensions must be positive");
  }

  TaskGraph graph(std::move(tasks));
  auto graph_violations = validate_graph(graph, &parts);
  violations.insert(violations.end(), graph_violations.begin(), graph_violations.end());
  if (!violations.empty()) throw ScenarioValidationError(std::move(violations));

  Scenario s;
  s.catalog = PartCatalog(types, parts);
  s.part_types = std::move(types);
  s.parts = std::move(parts);
  s.graph = std::move(graph);
  s.tray = tray;
  return s;
}

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& where, const std::string& what) {
  throw ScenarioParseError(where + ": " + what);
}

void require_object(const json& j, const std::string& where,
                    std::initializer_list<std::string_view> allowed_keys) {
  if (!j.is_object()) field_error(where, "expected object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed_keys.begin(), allowed_keys.end(), key) == allowed_keys.end()) {
      field_error(where, "unknown key \"" + key + "\"");
    }
  }
}

const json& member(const json& j, const std::string& where, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) field_error(where, std::string("missing key \"") + key + "\"");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) field_error(where, "expected number");
  return j.get<double>();
}

std::string string_of(const json& j, const std::string& where) {
  if (!j.is_string()) field_error(where, "expected string");
  return j.get<std::string>();
}

std::vector<std::string> string_list(const json& j, const std::string& where) {
  if (!j.is_array()) field_error(where, "expected array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(string_of(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Duration parse_duration(const json& task, const std::string& where, const char* who) {
  const std::string fixed_key = std::string(who) + "_duration_s";
  const std::string dist_key = std::string(who) + "_duration_dist";
  const bool has_fixed = task.contains(fixed_key);
  const bool has_dist = task.contains(dist_key);
  if (has_fixed == has_dist) {
    field_error(where, "exactly one of \"" + fixed_key + "\" or \"" + dist_key + "\" required");
  }
  if (has_fixed) return number(task.at(fixed_key), where + "." + fixed_key);
  const json& arr = task.at(dist_key);
  if (!arr.is_array()) field_error(where + "." + dist_key, "expected array of numbers");
  EmpiricalDuration dist;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    dist.samples.push_back(number(arr[i], where + "." + dist_key + "[" + std::to_string(i) + "]"));
  }
  return dist;
}

json duration_json(const Duration& d) {
  if (const auto* fixed = std::get_if<double>(&d)) return *fixed;
  return std::get<EmpiricalDuration>(d).samples;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  require_object(doc, "scenario", {"part_types", "parts", "tasks", "tray"});

  std::vector<PartType> types;
  const json& jtypes = member(doc, "scenario", "part_types");
  if (!jtypes.is_array()) field_error("part_types", "expected array");
  for (std::size_t i = 0; i < jtypes.size(); ++i) {
    const std::string where = "part_types[" + std::to_string(i) + "]";
    const json& jt = jtypes[i];
    require_object(jt, where, {"id", "name", "bbox_width_mm", "bbox_height_mm"});
    PartType t;
    t.id = string_of(member(jt, where, "id"), where + ".id");
    t.name = jt.contains("name") ? string_of(jt.at("name"), where + ".name") : t.id;
    t.bbox_width = number(member(jt, where, "bbox_width_mm"), where + ".bbox_width_mm");
    t.bbox_height = number(member(jt, where, "bbox_height_mm"), where + ".bbox_height_mm");
    types.push_back(std::move(t));
  }

  std::vector<PartInstance> parts;
  const json& jparts = member(doc, "scenario", "parts");
  if (!jparts.is_array()) field_error("parts", "expected array");
  for (std::size_t i = 0; i < jparts.size(); ++i) {
    const std::string where = "parts[" + std::to_string(i) + "]";
    require_object(jparts[i], where, {"id", "part_type"});
    parts.push_back(PartInstance{string_of(member(jparts[i], where, "id"), where + ".id"),
                                 string_of(member(jparts[i], where, "part_type"),
                                           where + ".part_type")});
  }

  std::vector<Task> tasks;
  const json& jtasks = member(doc, "scenario", "tasks");
  if (!jtasks.is_array()) field_error("tasks", "expected array");
  for (std::size_t i = 0; i < jtasks.size(); ++i) {
    const std::string where = "tasks[" + std::to_string(i) + "]";
    const json& jt = jtasks[i];
    require_object(jt, where,
                   {"id", "name", "human_duration_s", "human_duration_dist", "robot_duration_s",
                    "robot_duration_dist", "required_parts", "predecessors"});
    Task t;
    t.id = string_of(member(jt, where, "id"), where + ".id");
    t.name = jt.contains("name") ? string_of(jt.at("name"), where + ".name") : t.id;
    t.human_duration = parse_duration(jt, where, "human");
    t.robot_duration = parse_duration(jt, where, "robot");
    if (jt.contains("required_parts")) {
      t.required_parts = string_list(jt.at("required_parts"), where + ".required_parts");
    }
    if (jt.contains("predecessors")) {
      t.predecessors = string_list(jt.at("predecessors"), where + ".predecessors");
    }
    tasks.push_back(std::move(t));
  }

  const json& jtray = member(doc, "scenario", "tray");
  require_object(jtray, "tray", {"width_mm", "height_mm"});
  Tray tray{number(member(jtray, "tray", "width_mm"), "tray.width_mm"),
            number(member(jtray, "tray", "height_mm"), "tray.height_mm")};

  return make_scenario(std::move(types), std::move(parts), std::move(tasks), tray);
}

Scenario parse_scenario_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "line " << line << ", column " << col << ": " << e.what();
    throw ScenarioParseError(msg.str());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioIoError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario_text(buf.str());
  } catch (const ScenarioParseError& e) {
    throw ScenarioParseError(path.string() + ": " + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["part_types"] = json::array();
  for (const auto& t : s.part_types) {
    doc["part_types"].push_back(
        {{"id", t.id}, {"name", t.name}, {"bbox_width_mm", t.bbox_width},
         {"bbox_height_mm", t.bbox_height}});
  }
  doc["parts"] = json::array();
  for (const auto& p : s.parts) doc["parts"].push_back({{"id", p.id}, {"part_type", p.part_type}});
  doc["tasks"] = json::array();
  for (const auto& t : s.graph.tasks()) {
    json jt{{"id", t.id}, {"name", t.name}};
    const bool human_fixed = std::holds_alternative<double>(t.human_duration);
    const bool robot_fixed = std::holds_alternative<double>(t.robot_duration);
    jt[human_fixed ? "human_duration_s" : "human_duration_dist"] = duration_json(t.human_duration);
    jt[robot_fixed ? "robot_duration_s" : "robot_duration_dist"] = duration_json(t.robot_duration);
    jt["required_parts"] = t.required_parts;
    jt["predecessors"] = t.predecessors;
    doc["tasks"].push_back(std::move(jt));
  }
  doc["tray"] = {{"width_mm", s.tray.width}, {"height_mm", s.tray.height}};
  return doc;
}

}  // namespace jitkit
