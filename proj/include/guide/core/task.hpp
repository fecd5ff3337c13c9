#ifndef GUIDE_CORE_TASK_HPP_
#define GUIDE_CORE_TASK_HPP_

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "guide/core/vocab.hpp"

namespace guide {

inline constexpr double kDefaultAvoidDistance = 3.0;

struct GoalWaypoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const GoalWaypoint&) const = default;
};
struct GoalLandmark {
  std::string name;
  bool operator==(const GoalLandmark&) const = default;
};
struct Perimeter {
  std::string target;
  bool operator==(const Perimeter&) const = default;
};
struct Explore {
  std::string region;
  bool operator==(const Explore&) const = default;
};
struct ReturnTo {
  std::string name;
  bool operator==(const ReturnTo&) const = default;
};

using Subtask =
    std::variant<GoalWaypoint, GoalLandmark, Perimeter, Explore, ReturnTo>;

struct AvoidLandmark {
  std::string name;
  double min_dist = kDefaultAvoidDistance;
  bool operator==(const AvoidLandmark&) const = default;
};
struct AvoidRegion {
  std::string region;
  double min_dist = kDefaultAvoidDistance;
  bool operator==(const AvoidRegion&) const = default;
};
struct AvoidPoint {
  double x = 0.0;
  double y = 0.0;
  double min_dist = kDefaultAvoidDistance;
  bool operator==(const AvoidPoint&) const = default;
};
struct StayWithin {
  std::string region;
  bool operator==(const StayWithin&) const = default;
};

using Constraint = std::variant<AvoidLandmark, AvoidRegion, AvoidPoint, StayWithin>;

struct TaskSpec {
  std::string raw_text;
  std::vector<Subtask> primaries;
  std::vector<Constraint> auxiliaries;
  // Set when a stand-alone avoidance instruction received the implicit
  // "explore the whole area" objective.
  bool implicit_primary = false;

  bool operator==(const TaskSpec&) const = default;
};

// Deterministic template grammar over the task categories the lake
// environment supports. Throws Error{kEmptyTask, kUnknownSymbol, kNoObjective}.
TaskSpec ParseTask(std::string_view text, const Vocabulary& vocab);

// Stable lowercase phrase used as the embedding lookup key.
std::string CanonicalText(const Subtask& s);
std::string CanonicalText(const Constraint& c);

nlohmann::json ToJson(const TaskSpec& spec);

// Geometry helpers resolving names against the vocabulary.
bool IsGoalSubtask(const Subtask& s);
Vec2 GoalPoint(const Subtask& s, const Vocabulary& vocab);
Shape ConstraintShape(const Constraint& c, const Vocabulary& vocab);
double ConstraintMinDistance(const Constraint& c);

// Names referenced by the spec that the vocabulary cannot resolve.
std::vector<std::string> UnknownReferences(const TaskSpec& spec,
                                           const Vocabulary& vocab);

}  // namespace guide

#endif  // GUIDE_CORE_TASK_HPP_
