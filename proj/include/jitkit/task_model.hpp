#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

namespace jitkit {

using TaskId = std::string;
using PartId = std::string;
using PartTypeId = std::string;
using TaskSet = std::set<TaskId>;

struct PartType {
  PartTypeId id;
  std::string name;
  double bbox_width = 0.0;   // mm
  double bbox_height = 0.0;  // mm
};

struct PartInstance {
  PartId id;
  PartTypeId part_type;
};

/// Empirical duration distribution: a list of observed samples, drawn uniformly.
struct EmpiricalDuration {
  std::vector<double> samples;
};

/// Either a fixed duration in seconds or an empirical distribution.
using Duration = std::variant<double, EmpiricalDuration>;

/// Point estimate of a duration (the value itself, or the sample mean).
double expected_seconds(const Duration& d);

struct Task {
  TaskId id;
  std::string name;
  Duration human_duration = 0.0;
  Duration robot_duration = 0.0;
  std::vector<PartId> required_parts;
  std::vector<TaskId> predecessors;
};

struct Tray {
  double width = 0.0;   // mm
  double height = 0.0;  // mm

  double area() const { return width * height; }
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Precedence graph over assembly tasks. Edges are stored as predecessor lists.
class TaskGraph {
 public:
  TaskGraph() = default;
  explicit TaskGraph(std::vector<Task> tasks);

  const std::vector<Task>& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }
  bool empty() const { return tasks_.empty(); }

  bool contains(std::string_view id) const;
  /// Throws LookupError naming the id when absent.
  std::size_t index_of(std::string_view id) const;
  const Task& task(std::string_view id) const { return tasks_[index_of(id)]; }

 private:
  std::vector<Task> tasks_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// True iff every predecessor of `task` is in `completed`.
bool allowed(std::string_view task, const TaskSet& completed, const TaskGraph& graph);

/// Cycle, dangling-reference and duplicate violations; empty means the graph is valid.
/// Part references are checked only when a part list is supplied.
std::vector<std::string> validate_graph(const TaskGraph& graph,
                                        const std::vector<PartInstance>* parts = nullptr);

/// Topological order; ties resolved lexicographically by task id.
/// Throws std::invalid_argument on a cyclic graph.
std::vector<TaskId> topological_order(const TaskGraph& graph);

/// Part-instance lookup with resolved bounding-box dimensions.
class PartCatalog {
 public:
  struct Entry {
    PartId id;
    PartTypeId type;
    double width = 0.0;
    double height = 0.0;
  };

  PartCatalog() = default;
  PartCatalog(const std::vector<PartType>& types, const std::vector<PartInstance>& parts);

  const Entry& at(std::string_view part) const;
  bool contains(std::string_view part) const;
  const std::vector<Entry>& entries() const { return entries_; }
  const PartType& type(std::string_view type_id) const;
  const std::vector<PartType>& types() const { return types_; }

 private:
  std::vector<PartType> types_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> part_index_;
  std::unordered_map<std::string, std::size_t> type_index_;
};

struct Scenario {
  std::vector<PartType> part_types;
  std::vector<PartInstance> parts;
  TaskGraph graph;
  Tray tray;
  PartCatalog catalog;
};

/// Malformed scenario document; the message carries line or field context.
class ScenarioParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid document describing an invalid scenario.
class ScenarioValidationError : public std::runtime_error {
 public:
  explicit ScenarioValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Could not read the scenario file at all.
class ScenarioIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(std::string_view text);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Validates and assembles a scenario from in-memory parts (used by generators and tests).
Scenario make_scenario(std::vector<PartType> types, std::vector<PartInstance> parts,
                       std::vector<Task> tasks, Tray tray);

}  // namespace jitkit
