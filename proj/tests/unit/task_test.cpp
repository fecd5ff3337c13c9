#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "guide/core/error.hpp"
#include "guide/core/task.hpp"

using namespace guide;

namespace {

const Vocabulary& Lake() {
  static const Vocabulary v = Vocabulary::Default();
  return v;
}

ErrorCode ParseError(const std::string& text) {
  try {
    ParseTask(text, Lake());
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for: " << text);
  return ErrorCode::kRuntime;
}

}  // namespace

TEST_SUITE("task") {

TEST_CASE("restricted landmark goal") {
  const TaskSpec t = ParseTask("visit dock while avoiding top-right quadrant", Lake());
  REQUIRE(t.primaries.size() == 1);
  CHECK(t.primaries[0] == Subtask{GoalLandmark{"dock"}});
  REQUIRE(t.auxiliaries.size() == 1);
  CHECK(t.auxiliaries[0] == Constraint{AvoidRegion{"top-right quadrant", 3.0}});
}

TEST_CASE("bracketed waypoint") {
  const TaskSpec t = ParseTask("Go to [40,60].", Lake());
  REQUIRE(t.primaries.size() == 1);
  CHECK(t.primaries[0] == Subtask{GoalWaypoint{40.0, 60.0}});
  CHECK(t.auxiliaries.empty());
}

TEST_CASE("three perimeter clauses with elided verb") {
  const TaskSpec t = ParseTask(
      "Start at the dock, navigate around the central fountain, then around the left "
      "fountain, and finally around the right fountain.",
      Lake());
  REQUIRE(t.primaries.size() == 3);
  CHECK(t.primaries[0] == Subtask{Perimeter{"central fountain"}});
  CHECK(t.primaries[1] == Subtask{Perimeter{"left fountain"}});
  CHECK(t.primaries[2] == Subtask{Perimeter{"right fountain"}});
  CHECK(t.auxiliaries.empty());
}

TEST_CASE("errors") {
  CHECK(ParseError("") == ErrorCode::kEmptyTask);
  CHECK(ParseError("   \t ") == ErrorCode::kEmptyTask);
  CHECK(ParseError("go to the lighthouse") == ErrorCode::kUnknownSymbol);
  CHECK(ParseError("visit dock while avoiding the volcano") == ErrorCode::kUnknownSymbol);
  CHECK(ParseError("go to the dock @ noon") == ErrorCode::kUnknownSymbol);
}

TEST_CASE("canonical text templates") {
  CHECK(CanonicalText(Subtask{GoalLandmark{"dock"}}) == "navigate to dock");
  CHECK(CanonicalText(Subtask{GoalWaypoint{40, 60}}) == "visit waypoint 40.0 60.0");
  CHECK(CanonicalText(Constraint{AvoidRegion{"top-right quadrant"}}) ==
        "avoid the top-right quadrant");
}

TEST_CASE("example corpus parses") {
  struct Case {
    const char* text;
    size_t m;
    size_t c;
  };
  const std::vector<Case> corpus = {
      {"Navigate to waypoint (12.0, -7.5).", 1, 0},
      {"Proceed to the coordinates (8.5, 15.0).", 1, 0},
      {"Go to the location at (5.0, -10.0).", 1, 0},
      {"Go to the dock.", 1, 0},
      {"Proceed to the central fountain.", 1, 0},
      {"Navigate to the area in front of the left fountain.", 1, 0},
      {"Avoid the coordinates (10.0, -5.0).", 1, 1},
      {"Steer clear of the submerged rock at (3.5, 4.0).", 1, 1},
      {"Navigate around the perimeter of the bottom-right quadrant.", 1, 0},
      {"Circumnavigate the central fountain.", 1, 0},
      {"Traverse the boundary of the entire lake.", 1, 0},
      {"Explore the top-half of the lake.", 1, 0},
      {"Conduct an exploration of the top-right quadrant.", 1, 0},
      {"Go to waypoint (6.0, -3.0) while avoiding the right half of the lake.", 1, 1},
      {"Navigate to the right fountain, avoiding the exclusion zone.", 1, 1},
      {"Proceed to the dock without passing through the left half of the lake.", 1, 1},
      {"visit (40, 60)", 1, 0},
      {"navigate to dock", 1, 0},
      {"avoid the central fountain", 1, 1},
      {"go around the left fountain", 1, 0},
      {"explore top-right quadrant", 1, 0},
      {"visit dock while avoiding top-right quadrant", 1, 1},
      {"Start and end at the dock, go around the central fountain.", 2, 0},
  };
  for (const auto& c : corpus) {
    const std::string text = c.text;
    CAPTURE(text);
    TaskSpec t;
    REQUIRE_NOTHROW(t = ParseTask(c.text, Lake()));
    CHECK(t.primaries.size() == c.m);
    CHECK(t.auxiliaries.size() == c.c);
    CHECK(t == ParseTask(c.text, Lake()));
  }
}

TEST_CASE("synonyms map to the same subtask") {
  const auto a = ParseTask("proceed to the dock", Lake());
  const auto b = ParseTask("navigate to the dock", Lake());
  const auto c = ParseTask("go to the dock", Lake());
  CHECK(a.primaries == b.primaries);
  CHECK(b.primaries == c.primaries);
}

TEST_CASE("avoid-only sentence gets the whole-area objective") {
  const auto t = ParseTask("Avoid the coordinates (10.0, -5.0).", Lake());
  CHECK(t.implicit_primary);
  CHECK(t.primaries[0] == Subtask{Explore{"whole area"}});
  CHECK(t.auxiliaries[0] == Constraint{AvoidPoint{10.0, -5.0, 3.0}});
}

TEST_CASE("constraints alone in a trailing clause are rejected") {
  CHECK(ParseError("while avoiding the left fountain") == ErrorCode::kNoObjective);
}

TEST_CASE("start and end appends the return last") {
  const auto t = ParseTask("Start and end at the dock, go around the central fountain.", Lake());
  REQUIRE(t.primaries.size() == 2);
  CHECK(t.primaries[0] == Subtask{Perimeter{"central fountain"}});
  CHECK(t.primaries[1] == Subtask{ReturnTo{"dock"}});
}

TEST_CASE("then-separated clauses keep their order") {
  const std::vector<std::string> names = {"dock", "left fountain", "right fountain",
                                          "central fountain"};
  for (size_t k = 1; k <= names.size(); ++k) {
    std::string text = "go to the " + names[0];
    for (size_t i = 1; i < k; ++i) text += " then go to the " + names[i];
    const auto t = ParseTask(text, Lake());
    REQUIRE(t.primaries.size() == k);
    for (size_t i = 0; i < k; ++i) CHECK(t.primaries[i] == Subtask{GoalLandmark{names[i]}});
  }
}

TEST_CASE("canonical phrases parse back to the same item") {
  std::vector<Subtask> subtasks = {GoalWaypoint{40, 60}, GoalWaypoint{12.5, -7.25},
                                   GoalLandmark{"dock"}, GoalLandmark{"central fountain"}};
  for (const auto& f : Lake().features()) {
    subtasks.push_back(Perimeter{f.name});
    if (f.kind == FeatureKind::kRegion) {
      subtasks.push_back(Explore{f.name});
    } else {
      subtasks.push_back(ReturnTo{f.name});
    }
  }
  for (const auto& s : subtasks) {
    const std::string text = CanonicalText(s);
    CAPTURE(text);
    const auto t = ParseTask(text, Lake());
    REQUIRE(t.primaries.size() == 1);
    CHECK(t.primaries[0] == s);
    CHECK(CanonicalText(t.primaries[0]) == text);
  }
  std::vector<Constraint> constraints = {AvoidRegion{"top-right quadrant"},
                                         AvoidLandmark{"left fountain"},
                                         AvoidRegion{"left half", 5.0},
                                         AvoidPoint{10, -5, 3.0},
                                         StayWithin{"bottom half"}};
  for (const auto& c : constraints) {
    const std::string canon = CanonicalText(c);
    CAPTURE(canon);
    const auto t = ParseTask("go to the dock. " + canon, Lake());
    REQUIRE(t.auxiliaries.size() == 1);
    CHECK(t.auxiliaries[0] == c);
    CHECK(CanonicalText(t.auxiliaries[0]) == canon);
  }
}

TEST_CASE("canonical text is injective over the vocabulary") {
  std::vector<std::string> seen;
  for (const auto& f : Lake().features()) {
    seen.push_back(CanonicalText(Subtask{GoalLandmark{f.name}}));
    seen.push_back(CanonicalText(Subtask{Perimeter{f.name}}));
    seen.push_back(CanonicalText(Subtask{Explore{f.name}}));
    seen.push_back(CanonicalText(Subtask{ReturnTo{f.name}}));
    seen.push_back(CanonicalText(Constraint{AvoidLandmark{f.name}}));
    seen.push_back(CanonicalText(Constraint{StayWithin{f.name}}));
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

}  // TEST_SUITE
