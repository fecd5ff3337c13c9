#include "guide/core/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "guide/core/error.hpp"

namespace guide {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOffsetScale = 50.0;
constexpr double kOffsetClip = 2.0;

double Clip(double v) { return std::clamp(v / kOffsetScale, -kOffsetClip, kOffsetClip); }

bool Inside(const Rect& r, Vec2 p) {
  return p.x >= r.x0 && p.x <= r.x1 && p.y >= r.y0 && p.y <= r.y1;
}

void AppendEdge(std::vector<Vec2>& out, Vec2 a, Vec2 b) {
  const int n = std::max(1, static_cast<int>(std::ceil(Distance(a, b))));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / n;
    out.push_back(a + (b - a) * t);
  }
}

template <typename T>
void ReadField(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("sim.{}: {}", key, e.what()));
  }
}

}  // namespace

Vec2 SimConfig::StartPosition() const {
  if (start) return *start;
  return Center(vocab.Get(dock).geometry);
}

void SimConfig::Validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, m); };
  if (!(dt > 0.0)) bad("dt must be positive");
  if (!(v_max > 0.0)) bad("v_max must be positive");
  if (!(lambda_max > 0.0)) bad("lambda_max must be positive");
  if (!(drag > 0.0) || drag * dt >= 1.0) bad("drag must satisfy 0 < drag*dt < 1");
  if (sigma_step < 0.0 || !(sigma_gps > 0.0)) bad("sigma_gps must be positive, sigma_step non-negative");
  if (disturbance_gain < 0.0) bad("disturbance_gain must be non-negative");
  if (!(c_noisy >= 0.0 && c_noisy < c_exact)) bad("need 0 <= c_noisy < c_exact");
  if (max_steps <= 0) bad("max_steps must be positive");
  if (pad_primaries < 0 || pad_constraints < 0) bad("padding must be non-negative");
  const Feature* d = vocab.Find(dock);
  if (d == nullptr) bad("dock '" + dock + "' not in vocabulary");
  const Rect& a = vocab.arena();
  const Vec2 c = Center(d->geometry);
  if (!Inside(a, c)) bad("dock outside arena");
  const Vec2 s = StartPosition();
  if (!Inside(a, s)) bad("start position outside arena");
}

SimConfig SimConfig::FromJson(const nlohmann::json& j) {
  SimConfig cfg;
  try {
    cfg.vocab = Vocabulary::FromJson(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  if (j.is_object() && j.contains("sim")) {
    const auto& s = j.at("sim");
    if (!s.is_object()) throw Error(ErrorCode::kInvalidConfig, "sim must be an object");
    ReadField(s, "dock", cfg.dock);
    ReadField(s, "dt", cfg.dt);
    ReadField(s, "v_max", cfg.v_max);
    ReadField(s, "lambda_max", cfg.lambda_max);
    ReadField(s, "drag", cfg.drag);
    ReadField(s, "sigma_step", cfg.sigma_step);
    ReadField(s, "sigma_gps", cfg.sigma_gps);
    ReadField(s, "disturbance_gain", cfg.disturbance_gain);
    ReadField(s, "hull_radius", cfg.hull_radius);
    ReadField(s, "c_exact", cfg.c_exact);
    ReadField(s, "c_noisy", cfg.c_noisy);
    ReadField(s, "collision_penalty", cfg.collision_penalty);
    ReadField(s, "completion_bonus", cfg.completion_bonus);
    ReadField(s, "progress_gain", cfg.progress_gain);
    ReadField(s, "max_steps", cfg.max_steps);
    ReadField(s, "goal_radius", cfg.goal_radius);
    ReadField(s, "corridor", cfg.corridor);
    ReadField(s, "perimeter_offset", cfg.perimeter_offset);
    ReadField(s, "explore_target", cfg.explore_target);
    ReadField(s, "pad_primaries", cfg.pad_primaries);
    ReadField(s, "pad_constraints", cfg.pad_constraints);
    if (s.contains("start")) {
      std::vector<double> p;
      ReadField(s, "start", p);
      if (p.size() != 2) throw Error(ErrorCode::kInvalidConfig, "sim.start must be [x, y]");
      cfg.start = Vec2{p[0], p[1]};
    }
  }
  cfg.Validate();
  return cfg;
}

nlohmann::json SimConfig::ToJson() const {
  nlohmann::json j = vocab.ToJson();
  nlohmann::json s = {
      {"dock", dock},
      {"dt", dt},
      {"v_max", v_max},
      {"lambda_max", lambda_max},
      {"drag", drag},
      {"sigma_step", sigma_step},
      {"sigma_gps", sigma_gps},
      {"disturbance_gain", disturbance_gain},
      {"hull_radius", hull_radius},
      {"c_exact", c_exact},
      {"c_noisy", c_noisy},
      {"collision_penalty", collision_penalty},
      {"completion_bonus", completion_bonus},
      {"progress_gain", progress_gain},
      {"max_steps", max_steps},
      {"goal_radius", goal_radius},
      {"corridor", corridor},
      {"perimeter_offset", perimeter_offset},
      {"explore_target", explore_target},
      {"pad_primaries", pad_primaries},
      {"pad_constraints", pad_constraints},
  };
  if (start) s["start"] = {start->x, start->y};
  j["sim"] = s;
  return j;
}

std::vector<Vec2> PerimeterPath(const Shape& target, const SimConfig& cfg) {
  std::vector<Vec2> pts;
  const Rect& a = cfg.vocab.arena();
  const double margin = cfg.hull_radius + 1.5;
  if (const auto* d = std::get_if<Disc>(&target)) {
    const double r = d->r + cfg.perimeter_offset;
    const int n = std::max(8, static_cast<int>(std::ceil(kTwoPi * r)));
    for (int i = 0; i < n; ++i) {
      const double t = kTwoPi * i / n;
      Vec2 p{d->cx + r * std::cos(t), d->cy + r * std::sin(t)};
      p.x = std::clamp(p.x, a.x0 + margin, a.x1 - margin);
      p.y = std::clamp(p.y, a.y0 + margin, a.y1 - margin);
      pts.push_back(p);
    }
    return pts;
  }
  const auto& r = std::get<Rect>(target);
  const double o = cfg.perimeter_offset;
  const double x0 = std::max(r.x0 - o, a.x0 + margin);
  const double y0 = std::max(r.y0 - o, a.y0 + margin);
  const double x1 = std::min(r.x1 + o, a.x1 - margin);
  const double y1 = std::min(r.y1 + o, a.y1 - margin);
  AppendEdge(pts, {x0, y0}, {x1, y0});
  AppendEdge(pts, {x1, y0}, {x1, y1});
  AppendEdge(pts, {x1, y1}, {x0, y1});
  AppendEdge(pts, {x0, y1}, {x0, y0});
  return pts;
}

TaskEvaluator::TaskEvaluator(const TaskSpec& spec, const SimConfig& cfg)
    : spec_(spec), config_(cfg) {
  for (const auto& s : spec_.primaries) goal_points_.push_back(GoalPoint(s, cfg.vocab));
  for (const auto& c : spec_.auxiliaries) {
    constraint_shapes_.push_back(ConstraintShape(c, cfg.vocab));
  }
}

void TaskEvaluator::Reset(Vec2 pos) {
  active_ = 0;
  violated_ = false;
  fraction_ = 0.0;
  coverage_ = {};
  if (!spec_.primaries.empty()) Activate(pos);
  Advance(pos);
  fraction_ = RawFraction();
  target_ = ComputeTarget(pos);
}

void TaskEvaluator::Activate(Vec2 pos) {
  coverage_ = {};
  const Subtask& s = spec_.primaries[active_];
  if (const auto* p = std::get_if<Perimeter>(&s)) {
    coverage_.points = PerimeterPath(config_.vocab.Get(p->target).geometry, config_);
    size_t best = 0;
    for (size_t i = 1; i < coverage_.points.size(); ++i) {
      if (Distance(coverage_.points[i], pos) < Distance(coverage_.points[best], pos)) best = i;
    }
    coverage_.cursor = best;
  } else if (const auto* e = std::get_if<Explore>(&s)) {
    const Shape& g = config_.vocab.Get(e->region).geometry;
    const Rect& a = config_.vocab.arena();
    Rect box;
    if (const auto* d = std::get_if<Disc>(&g)) {
      box = {d->cx - d->r, d->cy - d->r, d->cx + d->r, d->cy + d->r};
    } else {
      box = std::get<Rect>(g);
    }
    box = {std::max(box.x0, a.x0), std::max(box.y0, a.y0), std::min(box.x1, a.x1),
           std::min(box.y1, a.y1)};
    for (double y = std::floor(box.y0) + 0.5; y < box.y1; y += 1.0) {
      for (double x = std::floor(box.x0) + 0.5; x < box.x1; x += 1.0) {
        if (Contains(g, {x, y})) coverage_.points.push_back({x, y});
      }
    }
  }
  coverage_.covered.assign(coverage_.points.size(), 0);
}

void TaskEvaluator::Advance(Vec2 pos) {
  while (active_ < spec_.primaries.size()) {
    const Subtask& s = spec_.primaries[active_];
    bool done = false;
    if (IsGoalSubtask(s)) {
      done = Distance(pos, goal_points_[active_]) <= config_.goal_radius;
    } else {
      const bool explore = std::holds_alternative<Explore>(s);
      bool credit = true;
      if (explore) {
        credit = Contains(config_.vocab.Get(std::get<Explore>(s).region).geometry, pos);
      }
      if (credit) {
        for (size_t i = 0; i < coverage_.points.size(); ++i) {
          if (!coverage_.covered[i] && Distance(coverage_.points[i], pos) <= config_.corridor) {
            coverage_.covered[i] = 1;
            ++coverage_.n_covered;
          }
        }
      }
      if (!explore) {
        const size_t n = coverage_.points.size();
        for (size_t k = 0; k < n && coverage_.covered[coverage_.cursor]; ++k) {
          coverage_.cursor = (coverage_.cursor + 1) % n;
        }
      }
      done = ActivePartial() >= 1.0;
    }
    if (!done) break;
    ++active_;
    if (active_ < spec_.primaries.size()) Activate(pos);
  }
}

double TaskEvaluator::ActivePartial() const {
  if (active_ >= spec_.primaries.size()) return 0.0;
  const Subtask& s = spec_.primaries[active_];
  if (IsGoalSubtask(s) || coverage_.points.empty()) return 0.0;
  const double frac =
      static_cast<double>(coverage_.n_covered) / static_cast<double>(coverage_.points.size());
  if (std::holds_alternative<Explore>(s)) return std::min(1.0, frac / config_.explore_target);
  return frac;
}

double TaskEvaluator::RawFraction() const {
  const size_t m = spec_.primaries.size();
  if (m == 0) return 1.0;
  const double v = (static_cast<double>(active_) + ActivePartial()) / static_cast<double>(m);
  return std::min(1.0, v);
}

void TaskEvaluator::Update(Vec2 pos) {
  if (!violated_) {
    for (size_t i = 0; i < constraint_shapes_.size(); ++i) {
      const Constraint& c = spec_.auxiliaries[i];
      bool bad;
      if (std::holds_alternative<StayWithin>(c)) {
        bad = !Contains(constraint_shapes_[i], pos);
      } else {
        bad = DistanceTo(constraint_shapes_[i], pos) < ConstraintMinDistance(c);
      }
      if (bad) violated_ = true;
    }
  }
  Advance(pos);
  if (!violated_) fraction_ = RawFraction();
  target_ = ComputeTarget(pos);
}

Vec2 TaskEvaluator::ComputeTarget(Vec2 pos) const {
  if (active_ >= spec_.primaries.size()) {
    return goal_points_.empty() ? pos : goal_points_.back();
  }
  const Subtask& s = spec_.primaries[active_];
  if (IsGoalSubtask(s) || coverage_.points.empty()) return goal_points_[active_];
  if (std::holds_alternative<Perimeter>(s)) return coverage_.points[coverage_.cursor];
  double best = std::numeric_limits<double>::infinity();
  Vec2 out = goal_points_[active_];
  for (size_t i = 0; i < coverage_.points.size(); ++i) {
    if (coverage_.covered[i]) continue;
    const double d = Distance(coverage_.points[i], pos);
    if (d < best) {
      best = d;
      out = coverage_.points[i];
    }
  }
  return out;
}

std::optional<Vec2> TaskEvaluator::SubtaskTarget(size_t i) const {
  if (i < active_ || i >= spec_.primaries.size()) return std::nullopt;
  if (i == active_) return target_;
  return goal_points_[i];
}

AsvSim::AsvSim(SimConfig cfg) : cfg_(std::move(cfg)) { cfg_.Validate(); }

int AsvSim::BaseObsDim(const TaskSpec& spec, const SimConfig& cfg) {
  const int m = std::max(static_cast<int>(spec.primaries.size()), cfg.pad_primaries);
  const int c = std::max(static_cast<int>(spec.auxiliaries.size()), cfg.pad_constraints);
  return 5 + 2 + 4 + 2 * m + 2 * c + 1;
}

int AsvSim::base_obs_dim() const { return BaseObsDim(spec_, cfg_); }

bool AsvSim::InDisturbance(Vec2 p) const {
  for (const auto& f : cfg_.vocab.features()) {
    if (f.disturbance_radius > 0.0 && Distance(p, Center(f.geometry)) <= f.disturbance_radius) {
      return true;
    }
  }
  return false;
}

bool AsvSim::Collides(Vec2 p) const {
  const Rect& a = cfg_.vocab.arena();
  const double h = cfg_.hull_radius;
  if (p.x < a.x0 + h || p.x > a.x1 - h || p.y < a.y0 + h || p.y > a.y1 - h) return true;
  for (const auto& f : cfg_.vocab.features()) {
    if (f.obstacle && DistanceTo(f.geometry, p) < h) return true;
  }
  return false;
}

StepOutcome AsvSim::Reset(const TaskSpec& spec, std::shared_ptr<const Tsum> tsum,
                          uint64_t seed) {
  const auto unknown = UnknownReferences(spec, cfg_.vocab);
  if (!unknown.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "unknown landmark '" + unknown.front() + "'");
  }
  if ((cfg_.pad_primaries > 0 && static_cast<int>(spec.primaries.size()) > cfg_.pad_primaries) ||
      (cfg_.pad_constraints > 0 && static_cast<int>(spec.auxiliaries.size()) > cfg_.pad_constraints)) {
    throw Error(ErrorCode::kInvalidConfig, "task exceeds the configured observation slots");
  }
  spec_ = spec;
  tsum_ = std::move(tsum);
  rng_ = CounterRng(DeriveSeed(seed, "env"));
  truth_ = {};
  truth_.pos = cfg_.StartPosition();
  truth_.heading = rng_.Uniform(0.0, kTwoPi);
  truth_.speed = 0.0;
  est_.pos = truth_.pos;
  est_.u = cfg_.sigma_gps;
  step_ = 0;
  done_ = false;
  evaluator_ = std::make_unique<TaskEvaluator>(spec_, cfg_);
  evaluator_->Reset(truth_.pos);
  StepOutcome out = Observe();
  out.info.completed_fraction = evaluator_->completed_fraction();
  return out;
}

StepOutcome AsvSim::Step(const Action& action) {
  if (!evaluator_) throw Error(ErrorCode::kNotReset, "step called before reset");
  if (done_) throw Error(ErrorCode::kNotReset, "episode finished; reset required");

  StepInfo info;
  double lambda = action.lambda;
  double alpha = action.alpha;
  if (!std::isfinite(lambda)) lambda = 0.0, info.clamped = true;
  if (!std::isfinite(alpha)) alpha = 0.0, info.clamped = true;
  if (lambda < 0.0 || lambda > cfg_.lambda_max) {
    lambda = std::clamp(lambda, 0.0, cfg_.lambda_max);
    info.clamped = true;
  }
  if (alpha < 0.0 || alpha >= kTwoPi) {
    alpha = std::fmod(alpha, kTwoPi);
    if (alpha < 0.0) alpha += kTwoPi;
    if (alpha >= kTwoPi) alpha = 0.0;
    info.clamped = true;
  }

  const Vec2 prev = truth_.pos;
  const Vec2 target = evaluator_->CurrentTarget();

  truth_.speed += cfg_.dt * (lambda / cfg_.lambda_max * cfg_.a_max() - cfg_.drag * truth_.speed);
  truth_.heading = alpha;
  const Vec2 disp{truth_.speed * cfg_.dt * std::cos(alpha),
                  truth_.speed * cfg_.dt * std::sin(alpha)};
  const bool zone = InDisturbance(prev);
  Vec2 kick{0.0, 0.0};
  if (zone) {
    kick.x = rng_.Normal(0.0, cfg_.disturbance_gain);
    kick.y = rng_.Normal(0.0, cfg_.disturbance_gain);
  }
  truth_.pos = prev + disp + kick;

  // The estimator noise is drawn on every step regardless of mode so that
  // the true trajectory does not depend on localization choices.
  const double nx = rng_.Normal(0.0, cfg_.sigma_step);
  const double ny = rng_.Normal(0.0, cfg_.sigma_step);
  double zx = 0.0;
  double zy = 0.0;
  if (zone) {
    zx = rng_.Normal(0.0, cfg_.disturbance_gain);
    zy = rng_.Normal(0.0, cfg_.disturbance_gain);
  }
  if (action.eta == LocMode::kExact) {
    est_.pos = truth_.pos;
    est_.u = cfg_.sigma_gps;
    info.exact_fix = true;
  } else {
    est_.pos = est_.pos + disp + Vec2{nx + zx, ny + zy};
    double var = est_.u * est_.u + cfg_.sigma_step * cfg_.sigma_step;
    if (zone) var += 2.0 * cfg_.disturbance_gain * cfg_.disturbance_gain;
    est_.u = std::max(cfg_.sigma_gps, std::sqrt(var));
  }
  ++step_;

  info.collision = Collides(truth_.pos);
  evaluator_->Update(truth_.pos);
  info.violation = evaluator_->violated();
  info.task_complete = evaluator_->complete();
  info.completed_fraction = evaluator_->completed_fraction();

  info.r_progress = cfg_.progress_gain * (Distance(prev, target) - Distance(truth_.pos, target));
  info.r_bonus = info.task_complete ? cfg_.completion_bonus : 0.0;
  info.r_collision = info.collision ? -cfg_.collision_penalty : 0.0;
  info.r_localization = action.eta == LocMode::kExact ? -cfg_.c_exact : -cfg_.c_noisy;

  StepOutcome out = Observe();
  out.info = info;
  out.reward = info.r_progress + info.r_bonus + info.r_collision + info.r_localization;
  out.done = info.task_complete || info.collision || step_ >= cfg_.max_steps;
  done_ = out.done;
  return out;
}

StepOutcome AsvSim::Observe() const {
  StepOutcome out;
  auto& o = out.augmented_obs;
  const Rect& a = cfg_.vocab.arena();
  const double hw = (a.x1 - a.x0) / 2.0;
  const double hh = (a.y1 - a.y0) / 2.0;
  const Vec2 p = est_.pos;
  o.push_back((p.x - (a.x0 + hw)) / hw);
  o.push_back((p.y - (a.y0 + hh)) / hh);
  o.push_back(std::sin(truth_.heading));
  o.push_back(std::cos(truth_.heading));
  o.push_back(truth_.speed / cfg_.v_max);

  Vec2 obstacle{0.0, 0.0};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : cfg_.vocab.features()) {
    if (!f.obstacle) continue;
    const Vec2 q = NearestPoint(f.geometry, p);
    if (Distance(q, p) < best) {
      best = Distance(q, p);
      obstacle = q - p;
    }
  }
  o.push_back(Clip(obstacle.x));
  o.push_back(Clip(obstacle.y));

  const Vec2 to_target = evaluator_->CurrentTarget() - p;
  const double dist = to_target.Norm();
  o.push_back(Clip(to_target.x));
  o.push_back(Clip(to_target.y));
  o.push_back(dist > 0.0 ? to_target.x / dist : 0.0);
  o.push_back(dist > 0.0 ? to_target.y / dist : 0.0);

  const size_t m = std::max<size_t>(spec_.primaries.size(), cfg_.pad_primaries);
  for (size_t i = 0; i < m; ++i) {
    const auto t = evaluator_->SubtaskTarget(i);
    const Vec2 d = t ? *t - p : Vec2{};
    o.push_back(Clip(d.x));
    o.push_back(Clip(d.y));
  }
  const size_t c = std::max<size_t>(spec_.auxiliaries.size(), cfg_.pad_constraints);
  const auto& shapes = spec_.auxiliaries;
  for (size_t i = 0; i < c; ++i) {
    Vec2 d{};
    if (i < shapes.size()) {
      const Shape s = ConstraintShape(shapes[i], cfg_.vocab);
      if (std::holds_alternative<StayWithin>(shapes[i])) {
        d = Center(s) - p;
      } else {
        d = NearestPoint(s, p) - p;
      }
    }
    o.push_back(Clip(d.x));
    o.push_back(Clip(d.y));
  }
  o.push_back(evaluator_->completed_fraction());

  o.push_back(tsum_ ? Sample(*tsum_, p) : 0.0);
  o.push_back(est_.u);
  out.info.completed_fraction = evaluator_->completed_fraction();
  return out;
}

std::string TrajectoryCsvHeader() {
  return "step,true_x,true_y,est_x,est_y,u,eta,reward,flags";
}

std::string TrajectoryCsvRow(const TrajectoryRow& r) {
  std::string flags;
  auto add = [&](const char* f) {
    if (!flags.empty()) flags += '|';
    flags += f;
  };
  if (r.eta == LocMode::kExact) add("exact");
  if (r.collision) add("collision");
  if (r.violation) add("violation");
  if (r.complete) add("complete");
  return fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{:.6f},{}", r.step,
                     r.true_pos.x, r.true_pos.y, r.est_pos.x, r.est_pos.y, r.u,
                     r.eta == LocMode::kExact ? "exact" : "noisy", r.reward, flags);
}

std::vector<TrajectoryRow> ReadTrajectoryCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("step,", 0) != 0) throw Error(ErrorCode::kFormat, path + ": missing header");
  std::vector<TrajectoryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 9) {
      throw Error(ErrorCode::kFormat, fmt::format("{}:{}: expected 9 columns", path, lineno));
    }
    TrajectoryRow r;
    try {
      r.step = std::stoi(cols[0]);
      r.true_pos = {std::stod(cols[1]), std::stod(cols[2])};
      r.est_pos = {std::stod(cols[3]), std::stod(cols[4])};
      r.u = std::stod(cols[5]);
      r.reward = std::stod(cols[7]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, fmt::format("{}:{}: bad number", path, lineno));
    }
    r.eta = cols[6] == "exact" ? LocMode::kExact : LocMode::kNoisy;
    r.collision = cols[8].find("collision") != std::string::npos;
    r.violation = cols[8].find("violation") != std::string::npos;
    r.complete = cols[8].find("complete") != std::string::npos;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace guide
