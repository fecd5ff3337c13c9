#include "guide/core/task.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <optional>

#include "guide/core/error.hpp"

namespace guide {
namespace {

enum class TokType { kWord, kNumber, kPunct };

struct Token {
  TokType type;
  std::string text;
  double number = 0.0;
};

bool IsWordChar(char c) {
  return (c >= 'a' && c <= 'z') || c == '-' || c == '\'';
}

std::vector<Token> Tokenize(std::string_view raw) {
  std::string s(raw);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"') {
      ++i;
      continue;
    }
    const bool digit_start =
        std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+' || c == '.') && i + 1 < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
         // A '.' directly after a number is a sentence stop, not a decimal.
         !(c == '.' && !out.empty() && out.back().type == TokType::kNumber));
    if (digit_start) {
      size_t j = i + 1;
      bool seen_dot = c == '.';
      while (j < s.size()) {
        const char d = s[j];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          ++j;
        } else if (d == '.' && !seen_dot && j + 1 < s.size() &&
                   std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
          seen_dot = true;
          ++j;
        } else {
          break;
        }
      }
      std::string text = s.substr(i, j - i);
      const char* first = text.data() + (text[0] == '+' ? 1 : 0);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
      if (ec != std::errc() || !std::isfinite(value)) {
        throw Error(ErrorCode::kUnknownSymbol, "bad number '" + text + "'");
      }
      out.push_back({TokType::kNumber, text, value});
      i = j;
      continue;
    }
    if (c >= 'a' && c <= 'z') {
      size_t j = i;
      while (j < s.size() && IsWordChar(s[j])) ++j;
      std::string w = s.substr(i, j - i);
      while (!w.empty() && (w.back() == '-' || w.back() == '\'')) w.pop_back();
      out.push_back({TokType::kWord, w});
      i = j;
      continue;
    }
    if (std::string_view("()[],.;:!").find(c) != std::string_view::npos) {
      out.push_back({TokType::kPunct, std::string(1, c)});
      ++i;
      continue;
    }
    throw Error(ErrorCode::kUnknownSymbol,
                fmt::format("unexpected character '{}' at offset {}", c, i));
  }
  return out;
}

std::vector<std::string> SplitWords(std::string_view phrase) {
  std::vector<std::string> words;
  size_t i = 0;
  while (i < phrase.size()) {
    while (i < phrase.size() && phrase[i] == ' ') ++i;
    size_t j = i;
    while (j < phrase.size() && phrase[j] != ' ') ++j;
    if (j > i) words.emplace_back(phrase.substr(i, j - i));
    i = j;
  }
  return words;
}

enum class Clause {
  kGoto,
  kPerimeter,
  kExplore,
  kReturn,
  kAvoid,
  kAvoidImperative,
  kStay,
  kStart,
  kStartEnd,
  kElidedAround,
  kElidedTo,
};

struct Phrase {
  std::vector<std::string> words;
  Clause clause;
};

const std::vector<Phrase>& VerbPhrases() {
  static const std::vector<Phrase> phrases = [] {
    const std::vector<std::pair<std::string_view, Clause>> raw = {
        {"go to", Clause::kGoto},
        {"navigate to", Clause::kGoto},
        {"proceed to", Clause::kGoto},
        {"head to", Clause::kGoto},
        {"move to", Clause::kGoto},
        {"travel to", Clause::kGoto},
        {"visit", Clause::kGoto},
        {"reach", Clause::kGoto},
        {"go around", Clause::kPerimeter},
        {"navigate around", Clause::kPerimeter},
        {"circumnavigate", Clause::kPerimeter},
        {"circle", Clause::kPerimeter},
        {"navigate the perimeter of", Clause::kPerimeter},
        {"traverse", Clause::kPerimeter},
        {"patrol", Clause::kPerimeter},
        {"explore", Clause::kExplore},
        {"survey", Clause::kExplore},
        {"conduct an exploration of", Clause::kExplore},
        {"return to", Clause::kReturn},
        {"come back to", Clause::kReturn},
        {"end at", Clause::kReturn},
        {"avoid", Clause::kAvoidImperative},
        {"steer clear of", Clause::kAvoidImperative},
        {"stay away from", Clause::kAvoidImperative},
        {"keep away from", Clause::kAvoidImperative},
        {"avoiding", Clause::kAvoid},
        {"while avoiding", Clause::kAvoid},
        {"by avoiding", Clause::kAvoid},
        {"without passing through", Clause::kAvoid},
        {"without entering", Clause::kAvoid},
        {"while staying away from", Clause::kAvoid},
        {"this task has to be completed by avoiding", Clause::kAvoid},
        {"stay within", Clause::kStay},
        {"remain within", Clause::kStay},
        {"staying within", Clause::kStay},
        {"while staying within", Clause::kStay},
        {"while remaining within", Clause::kStay},
        {"start at", Clause::kStart},
        {"starting at", Clause::kStart},
        {"start from", Clause::kStart},
        {"start and end at", Clause::kStartEnd},
        {"around", Clause::kElidedAround},
        {"to", Clause::kElidedTo},
    };
    std::vector<Phrase> out;
    for (const auto& [text, clause] : raw) out.push_back({SplitWords(text), clause});
    // Longest match first.
    std::stable_sort(out.begin(), out.end(), [](const Phrase& a, const Phrase& b) {
      return a.words.size() > b.words.size();
    });
    return out;
  }();
  return phrases;
}

struct Alias {
  std::vector<std::string> words;
  std::string name;
};

std::string ReplaceAll(std::string s, char from, char to) {
  std::replace(s.begin(), s.end(), from, to);
  return s;
}

std::vector<Alias> BuildAliases(const Vocabulary& vocab) {
  std::vector<Alias> aliases;
  auto add = [&](const std::string& phrase, const std::string& name) {
    aliases.push_back({SplitWords(phrase), name});
  };
  for (const auto& f : vocab.features()) {
    add(f.name, f.name);
    add(ReplaceAll(f.name, '-', ' '), f.name);
    add(ReplaceAll(f.name, ' ', '-'), f.name);
  }
  if (auto whole = vocab.WholeAreaName()) {
    for (const char* a :
         {"entire lake", "whole lake", "lake", "entire area", "whole area",
          "area", "environment", "entire environment", "whole environment",
          "arena", "entire arena"}) {
      add(a, *whole);
    }
  }
  std::stable_sort(aliases.begin(), aliases.end(),
                   [](const Alias& a, const Alias& b) {
                     return a.words.size() > b.words.size();
                   });
  return aliases;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const Vocabulary& vocab)
      : toks_(std::move(tokens)), vocab_(vocab), aliases_(BuildAliases(vocab)) {}

  TaskSpec Run(std::string_view raw) {
    TaskSpec spec;
    spec.raw_text = std::string(raw);
    bool any_imperative_avoid = false;
    std::optional<std::string> deferred_return;
    std::optional<Clause> last_primary;
    while (pos_ < toks_.size()) {
      if (SkipSeparators()) continue;
      bool sentence_start = pos_ == 0 || IsPunct(pos_ - 1, ".");
      const Clause clause = MatchVerb();
      switch (clause) {
        case Clause::kElidedTo:
          if (last_primary != Clause::kGoto && last_primary != Clause::kReturn) {
            Fail("'to' without a preceding movement verb");
          }
          spec.primaries.push_back(ParseGotoTarget());
          break;
        case Clause::kGoto:
          spec.primaries.push_back(ParseGotoTarget());
          last_primary = Clause::kGoto;
          break;
        case Clause::kElidedAround:
          if (last_primary != Clause::kPerimeter) {
            Fail("'around' without a preceding perimeter verb");
          }
          [[fallthrough]];
        case Clause::kPerimeter:
          SkipWords({"the perimeter of", "the boundary of", "perimeter of",
                     "boundary of", "around the perimeter of"});
          spec.primaries.push_back(Perimeter{ParseName(std::nullopt)});
          last_primary = Clause::kPerimeter;
          break;
        case Clause::kExplore:
          spec.primaries.push_back(Explore{ParseName(FeatureKind::kRegion)});
          last_primary = Clause::kExplore;
          break;
        case Clause::kReturn:
          spec.primaries.push_back(ReturnTo{ParseName(FeatureKind::kLandmark)});
          last_primary = Clause::kReturn;
          break;
        case Clause::kAvoidImperative:
          if (sentence_start) any_imperative_avoid = true;
          [[fallthrough]];
        case Clause::kAvoid:
          spec.auxiliaries.push_back(ParseAvoidTarget());
          break;
        case Clause::kStay:
          spec.auxiliaries.push_back(StayWithin{ParseName(FeatureKind::kRegion)});
          break;
        case Clause::kStart:
          ParseName(std::nullopt);
          break;
        case Clause::kStartEnd:
          deferred_return = ParseName(FeatureKind::kLandmark);
          break;
      }
      ExpectClauseEnd();
    }
    if (deferred_return) spec.primaries.push_back(ReturnTo{*deferred_return});
    if (spec.primaries.empty()) {
      auto whole = vocab_.WholeAreaName();
      if (spec.auxiliaries.empty() || !any_imperative_avoid || !whole) {
        throw Error(ErrorCode::kNoObjective,
                    "task has no primary objective: '" + spec.raw_text + "'");
      }
      spec.primaries.push_back(Explore{*whole});
      spec.implicit_primary = true;
    }
    return spec;
  }

 private:
  bool IsPunct(size_t i, std::string_view p) const {
    return i < toks_.size() && toks_[i].type == TokType::kPunct &&
           toks_[i].text == p;
  }
  bool IsWord(size_t i, std::string_view w) const {
    return i < toks_.size() && toks_[i].type == TokType::kWord &&
           toks_[i].text == w;
  }

  [[noreturn]] void Fail(const std::string& what) const {
    std::string near = pos_ < toks_.size() ? toks_[pos_].text : "<end>";
    throw Error(ErrorCode::kUnknownSymbol,
                fmt::format("{} (at token {} '{}')", what, pos_, near));
  }

  bool SkipSeparators() {
    bool skipped = false;
    while (pos_ < toks_.size()) {
      const auto& t = toks_[pos_];
      const bool sep =
          (t.type == TokType::kPunct &&
           (t.text == "," || t.text == "." || t.text == ";" || t.text == "!")) ||
          IsWord(pos_, "then") || IsWord(pos_, "and") || IsWord(pos_, "finally") ||
          IsWord(pos_, "also") || IsWord(pos_, "afterwards") ||
          IsWord(pos_, "please");
      if (!sep) break;
      ++pos_;
      skipped = true;
    }
    return skipped;
  }

  bool MatchWords(const std::vector<std::string>& words) const {
    for (size_t k = 0; k < words.size(); ++k) {
      if (!IsWord(pos_ + k, words[k])) return false;
    }
    return true;
  }

  Clause MatchVerb() {
    for (const auto& p : VerbPhrases()) {
      if (MatchWords(p.words)) {
        pos_ += p.words.size();
        return p.clause;
      }
    }
    Fail("expected an instruction verb");
  }

  void SkipWords(std::initializer_list<std::string_view> phrases) {
    std::vector<std::vector<std::string>> sorted;
    for (auto p : phrases) sorted.push_back(SplitWords(p));
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& words : sorted) {
      if (MatchWords(words)) {
        pos_ += words.size();
        return;
      }
    }
  }

  void ExpectClauseEnd() {
    if (pos_ >= toks_.size()) return;
    const auto& t = toks_[pos_];
    if (t.type == TokType::kPunct &&
        (t.text == "," || t.text == "." || t.text == ";" || t.text == "!")) {
      return;
    }
    if (IsWord(pos_, "then") || IsWord(pos_, "and") || IsWord(pos_, "finally")) {
      return;
    }
    // A trailing constraint may follow without a separator.
    for (const auto& p : VerbPhrases()) {
      if ((p.clause == Clause::kAvoid || p.clause == Clause::kStay) &&
          MatchWords(p.words)) {
        return;
      }
    }
    Fail("unexpected token after clause");
  }

  std::optional<std::pair<double, double>> TryCoordinate() {
    const size_t start = pos_;
    std::string close;
    if (IsPunct(pos_, "(")) close = ")";
    if (IsPunct(pos_, "[")) close = "]";
    if (!close.empty()) ++pos_;
    if (pos_ < toks_.size() && toks_[pos_].type == TokType::kNumber) {
      const double x = toks_[pos_++].number;
      if (IsPunct(pos_, ",")) ++pos_;
      if (pos_ < toks_.size() && toks_[pos_].type == TokType::kNumber) {
        const double y = toks_[pos_++].number;
        if (close.empty() || IsPunct(pos_, close)) {
          if (!close.empty()) ++pos_;
          return std::make_pair(x, y);
        }
      }
    }
    pos_ = start;
    return std::nullopt;
  }

  std::optional<std::string> TryName() {
    SkipWords({"the area in front of the", "the area in front of",
               "the area near the", "the area near", "the"});
    for (const auto& a : aliases_) {
      if (MatchWords(a.words)) {
        pos_ += a.words.size();
        const Feature& f = vocab_.Get(a.name);
        if (f.kind == FeatureKind::kRegion) {
          SkipWords({"of the lake", "of the environment", "of the area",
                     "of the arena"});
        }
        return a.name;
      }
    }
    return std::nullopt;
  }

  std::string ParseName(std::optional<FeatureKind> kind) {
    auto name = TryName();
    if (!name) Fail("unknown landmark or region");
    const Feature& f = vocab_.Get(*name);
    if (kind && f.kind != *kind) {
      Fail(fmt::format("'{}' is a {}, expected a {}", *name,
                       f.kind == FeatureKind::kRegion ? "region" : "landmark",
                       *kind == FeatureKind::kRegion ? "region" : "landmark"));
    }
    return *name;
  }

  Subtask ParseGotoTarget() {
    const size_t start = pos_;
    SkipWords({"the"});
    SkipWords({"waypoint at", "waypoint", "point at", "point", "coordinates",
               "coordinate", "location at", "location", "position"});
    SkipWords({"at"});
    if (auto xy = TryCoordinate()) return GoalWaypoint{xy->first, xy->second};
    pos_ = start;
    return GoalLandmark{ParseName(FeatureKind::kLandmark)};
  }

  double ParseOptionalDistance() {
    if (IsWord(pos_, "by") && pos_ + 1 < toks_.size() &&
        toks_[pos_ + 1].type == TokType::kNumber) {
      const double d = toks_[pos_ + 1].number;
      pos_ += 2;
      SkipWords({"meters", "meter", "m"});
      if (!(d > 0.0)) Fail("avoid distance must be positive");
      return d;
    }
    return kDefaultAvoidDistance;
  }

  Constraint ParseAvoidTarget() {
    const size_t start = pos_;
    SkipWords({"the"});
    SkipWords({"submerged rock at", "rock at", "buoy at", "obstacle at",
               "hazard at", "point at", "point", "coordinates", "coordinate",
               "location at", "location", "position"});
    if (auto xy = TryCoordinate()) {
      return AvoidPoint{xy->first, xy->second, ParseOptionalDistance()};
    }
    pos_ = start;
    const std::string name = ParseName(std::nullopt);
    const double d = ParseOptionalDistance();
    if (vocab_.Get(name).kind == FeatureKind::kRegion) return AvoidRegion{name, d};
    return AvoidLandmark{name, d};
  }

  std::vector<Token> toks_;
  const Vocabulary& vocab_;
  std::vector<Alias> aliases_;
  size_t pos_ = 0;
};

std::string FormatNumber(double v) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  if (std::abs(v * 10.0 - std::round(v * 10.0)) < 1e-9 && std::abs(v) < 1e12) {
    return fmt::format("{:.1f}", v);
  }
  return fmt::format("{}", v);
}

std::string DistanceSuffix(double d) {
  if (d == kDefaultAvoidDistance) return "";
  return " by " + FormatNumber(d) + " meters";
}

}  // namespace

TaskSpec ParseTask(std::string_view text, const Vocabulary& vocab) {
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
  if (blank) throw Error(ErrorCode::kEmptyTask, "task text is empty");
  Parser parser(Tokenize(text), vocab);
  return parser.Run(text);
}

std::string CanonicalText(const Subtask& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GoalWaypoint>) {
          return "visit waypoint " + FormatNumber(v.x) + " " + FormatNumber(v.y);
        } else if constexpr (std::is_same_v<T, GoalLandmark>) {
          return "navigate to " + v.name;
        } else if constexpr (std::is_same_v<T, Perimeter>) {
          return "navigate around the perimeter of " + v.target;
        } else if constexpr (std::is_same_v<T, Explore>) {
          return "explore " + v.region;
        } else {
          return "return to " + v.name;
        }
      },
      s);
}

std::string CanonicalText(const Constraint& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AvoidLandmark>) {
          return "avoid the " + v.name + DistanceSuffix(v.min_dist);
        } else if constexpr (std::is_same_v<T, AvoidRegion>) {
          return "avoid the " + v.region + DistanceSuffix(v.min_dist);
        } else if constexpr (std::is_same_v<T, AvoidPoint>) {
          return "avoid the point " + FormatNumber(v.x) + " " + FormatNumber(v.y) +
                 DistanceSuffix(v.min_dist);
        } else {
          return "stay within the " + v.region;
        }
      },
      c);
}

nlohmann::json ToJson(const TaskSpec& spec) {
  using nlohmann::json;
  json primaries = json::array();
  for (const auto& s : spec.primaries) {
    json item = std::visit(
        [](const auto& v) -> json {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, GoalWaypoint>) {
            return {{"type", "goal_waypoint"}, {"x", v.x}, {"y", v.y}};
          } else if constexpr (std::is_same_v<T, GoalLandmark>) {
            return {{"type", "goal_landmark"}, {"name", v.name}};
          } else if constexpr (std::is_same_v<T, Perimeter>) {
            return {{"type", "perimeter"}, {"target", v.target}};
          } else if constexpr (std::is_same_v<T, Explore>) {
            return {{"type", "explore"}, {"region", v.region}};
          } else {
            return {{"type", "return_to"}, {"name", v.name}};
          }
        },
        s);
    item["canonical"] = CanonicalText(s);
    primaries.push_back(std::move(item));
  }
  json aux = json::array();
  for (const auto& c : spec.auxiliaries) {
    json item = std::visit(
        [](const auto& v) -> json {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, AvoidLandmark>) {
            return {{"type", "avoid_landmark"}, {"name", v.name},
                    {"min_dist", v.min_dist}};
          } else if constexpr (std::is_same_v<T, AvoidRegion>) {
            return {{"type", "avoid_region"}, {"region", v.region},
                    {"min_dist", v.min_dist}};
          } else if constexpr (std::is_same_v<T, AvoidPoint>) {
            return {{"type", "avoid_point"}, {"x", v.x}, {"y", v.y},
                    {"min_dist", v.min_dist}};
          } else {
            return {{"type", "stay_within"}, {"region", v.region}};
          }
        },
        c);
    item["canonical"] = CanonicalText(c);
    aux.push_back(std::move(item));
  }
  return {{"raw_text", spec.raw_text},
          {"primaries", std::move(primaries)},
          {"auxiliaries", std::move(aux)},
          {"implicit_primary", spec.implicit_primary}};
}

bool IsGoalSubtask(const Subtask& s) {
  return std::holds_alternative<GoalWaypoint>(s) ||
         std::holds_alternative<GoalLandmark>(s) ||
         std::holds_alternative<ReturnTo>(s);
}

namespace {

// Obstacle landmarks are approached from the side facing the bottom shore,
// just outside their hull clearance.
Vec2 LandmarkPoint(const Feature& f) {
  if (const auto* d = std::get_if<Disc>(&f.geometry); d != nullptr && f.obstacle) {
    return {d->cx, d->cy - d->r - 2.5};
  }
  return Center(f.geometry);
}

}  // namespace

Vec2 GoalPoint(const Subtask& s, const Vocabulary& vocab) {
  return std::visit(
      [&](const auto& v) -> Vec2 {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GoalWaypoint>) {
          return {v.x, v.y};
        } else if constexpr (std::is_same_v<T, GoalLandmark>) {
          return LandmarkPoint(vocab.Get(v.name));
        } else if constexpr (std::is_same_v<T, ReturnTo>) {
          return LandmarkPoint(vocab.Get(v.name));
        } else if constexpr (std::is_same_v<T, Perimeter>) {
          return Center(vocab.Get(v.target).geometry);
        } else {
          return Center(vocab.Get(v.region).geometry);
        }
      },
      s);
}

Shape ConstraintShape(const Constraint& c, const Vocabulary& vocab) {
  return std::visit(
      [&](const auto& v) -> Shape {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AvoidLandmark>) {
          return vocab.Get(v.name).geometry;
        } else if constexpr (std::is_same_v<T, AvoidRegion>) {
          return vocab.Get(v.region).geometry;
        } else if constexpr (std::is_same_v<T, AvoidPoint>) {
          return Disc{v.x, v.y, 1e-9};
        } else {
          return vocab.Get(v.region).geometry;
        }
      },
      c);
}

double ConstraintMinDistance(const Constraint& c) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StayWithin>) {
          return 0.0;
        } else {
          return v.min_dist;
        }
      },
      c);
}

std::vector<std::string> UnknownReferences(const TaskSpec& spec,
                                           const Vocabulary& vocab) {
  std::vector<std::string> missing;
  auto check = [&](const std::string& name) {
    if (vocab.Find(name) == nullptr) missing.push_back(name);
  };
  for (const auto& s : spec.primaries) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, GoalLandmark> ||
                        std::is_same_v<T, ReturnTo>) {
            check(v.name);
          } else if constexpr (std::is_same_v<T, Perimeter>) {
            check(v.target);
          } else if constexpr (std::is_same_v<T, Explore>) {
            check(v.region);
          }
        },
        s);
  }
  for (const auto& c : spec.auxiliaries) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, AvoidLandmark>) {
            check(v.name);
          } else if constexpr (std::is_same_v<T, AvoidRegion> ||
                               std::is_same_v<T, StayWithin>) {
            check(v.region);
          }
        },
        c);
  }
  return missing;
}

}  // namespace guide
