#include "guide/plan/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "guide/core/error.hpp"

namespace guide {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTinyRisk = 1e-9;
constexpr double kTieTolerance = 1e-9;

int Chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

Vec2 Unit(Vec2 v) {
  const double n = v.Norm();
  return n > 0.0 ? v * (1.0 / n) : Vec2{0.0, 0.0};
}

// Distance from p to the walls of the rectangle, positive inside.
double InsideClearance(const Rect& r, Vec2 p) {
  return std::min({p.x - r.x0, r.x1 - p.x, p.y - r.y0, r.y1 - p.y});
}

}  // namespace

LocMode HeuSelectMode(Vec2 est_pos, std::span<const Shape> geometry, double threshold) {
  for (const auto& s : geometry) {
    if (DistanceTo(s, est_pos) <= threshold) return LocMode::kExact;
  }
  return LocMode::kNoisy;
}

std::vector<Shape> CriticalGeometry(const AsvSim& sim) {
  std::vector<Shape> out;
  for (const auto& f : sim.config().vocab.features()) {
    if (f.obstacle) out.push_back(f.geometry);
  }
  for (const auto& c : sim.spec().auxiliaries) {
    if (std::holds_alternative<StayWithin>(c)) continue;
    out.push_back(ConstraintShape(c, sim.config().vocab));
  }
  const Vec2 t = sim.evaluator().CurrentTarget();
  out.push_back(Disc{t.x, t.y, 0.0});
  return out;
}

Cell RiskGrid::CellOf(Vec2 pos) const {
  const int j = grid.CellOf(pos);
  return {j % grid.nx, j / grid.nx};
}

RiskGrid EmptyRiskGrid(int nx, int ny, double cell_size) {
  RiskGrid g;
  g.grid = PatchGrid{{0.0, 0.0}, cell_size, nx, ny};
  g.grid.Validate();
  g.p.assign(static_cast<size_t>(nx) * ny, 0.0);
  return g;
}

RiskGrid BuildRiskGrid(const SimConfig& cfg, const TaskSpec& spec, double u, double cell_size) {
  if (!(u > 0.0)) throw Error(ErrorCode::kInvalidArgument, "uncertainty must be positive");
  RiskGrid g;
  g.grid = GridCovering(cfg.vocab.arena(), cell_size);
  g.p.assign(g.grid.size(), 0.0);
  const double h = cfg.hull_radius;

  std::vector<std::pair<Shape, double>> keep_out;  // shape, required clearance
  for (const auto& f : cfg.vocab.features()) {
    if (f.obstacle) keep_out.emplace_back(f.geometry, h);
  }
  std::vector<Shape> stay;
  for (const auto& c : spec.auxiliaries) {
    const Shape s = ConstraintShape(c, cfg.vocab);
    if (std::holds_alternative<StayWithin>(c)) {
      stay.push_back(s);
    } else {
      keep_out.emplace_back(s, ConstraintMinDistance(c));
    }
  }

  const double scale = 1.0 / (u * std::numbers::sqrt2);
  for (int j = 0; j < g.grid.size(); ++j) {
    const Vec2 c = g.grid.CellCenter(j);
    double clearance = InsideClearance(cfg.vocab.arena(), c) - h;
    for (const auto& [s, need] : keep_out) clearance = std::min(clearance, DistanceTo(s, c) - need);
    for (const auto& s : stay) {
      if (!Contains(s, c)) {
        clearance = -1.0;
      } else if (const auto* r = std::get_if<Rect>(&s)) {
        clearance = std::min(clearance, InsideClearance(*r, c));
      } else {
        const auto& d = std::get<Disc>(s);
        clearance = std::min(clearance, d.r - Distance(c, {d.cx, d.cy}));
      }
    }
    double p = clearance <= 0.0 ? 1.0 : 0.5 * std::erfc(clearance * scale);
    if (p < kTinyRisk) p = 0.0;
    g.p[j] = p;
  }
  return g;
}

Raster RiskRaster(const RiskGrid& grid) {
  Raster r;
  r.grid = grid.grid;
  r.values = grid.p;
  r.lo = 0.0;
  r.hi = 1.0;
  return r;
}

void RaaConfig::Validate() const {
  if (!(p_max > 0.0 && p_max < 1.0)) throw Error(ErrorCode::kInvalidConfig, "p_max must lie in (0, 1)");
  if (horizon < 1) throw Error(ErrorCode::kInvalidConfig, "horizon must be at least 1");
  if (!(kappa >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "kappa must be non-negative");
}

double LogSurvival(const RiskGrid& grid, std::span<const Cell> cells) {
  double s = 0.0;
  for (const Cell& c : cells) s += std::log1p(-grid.At(c));
  return s;
}

double PathRisk(const RiskGrid& grid, std::span<const Cell> cells) {
  return -std::expm1(LogSurvival(grid, cells));
}

double PathCost(const RiskGrid& grid, std::span<const Cell> cells, double kappa) {
  double cost = 0.0;
  for (size_t i = 1; i < cells.size(); ++i) {
    const bool diag = cells[i].x != cells[i - 1].x && cells[i].y != cells[i - 1].y;
    cost += grid.grid.cell_size * (diag ? std::numbers::sqrt2 : 1.0) -
            kappa * std::log1p(-grid.At(cells[i]));
  }
  return cost;
}

bool RiskFeasible(double log_survival, double p_max) {
  return log_survival >= std::log1p(-p_max);
}

RaaPath RaaPlan(const RiskGrid& grid, Cell start, Cell goal, const RaaConfig& cfg) {
  cfg.Validate();
  if (!grid.Inside(start) || !grid.Inside(goal)) {
    throw Error(ErrorCode::kInvalidArgument, "start or goal outside the risk grid");
  }
  const double cs = grid.grid.cell_size;
  const double budget = std::log1p(-cfg.p_max);

  struct Label {
    double cost;
    double logsurv;
    int cells;
    Cell cell;
    int parent;
    bool dead;
  };
  std::vector<Label> labels;
  std::vector<std::vector<int>> at(grid.p.size());
  auto heuristic = [&](Cell c) {
    return cs * std::hypot(static_cast<double>(c.x - goal.x), static_cast<double>(c.y - goal.y));
  };
  using Key = std::tuple<double, double, int, int>;  // f, -logsurv, cells, id
  std::priority_queue<Key, std::vector<Key>, std::greater<>> open;

  auto push = [&](const Label& l) {
    auto& list = at[grid.grid.Index(l.cell.x, l.cell.y)];
    for (int id : list) {
      const Label& e = labels[id];
      if (e.dead) continue;
      if (e.cost <= l.cost && e.logsurv >= l.logsurv && e.cells <= l.cells) return;
    }
    for (int id : list) {
      Label& e = labels[id];
      if (!e.dead && l.cost <= e.cost && l.logsurv >= e.logsurv && l.cells <= e.cells) {
        e.dead = true;
      }
    }
    if (labels.size() >= cfg.max_labels) {
      throw Error(ErrorCode::kNoSafePath, "risk-aware search exceeded its label budget");
    }
    const int id = static_cast<int>(labels.size());
    labels.push_back(l);
    list.push_back(id);
    open.emplace(l.cost + heuristic(l.cell), -l.logsurv, l.cells, id);
  };

  const double p0 = grid.At(start);
  if (p0 < 1.0 && std::log1p(-p0) >= budget && 1 + Chebyshev(start, goal) <= cfg.horizon) {
    push({0.0, std::log1p(-p0), 1, start, -1, false});
  }

  auto trace = [&](int id) {
    std::vector<Cell> cells;
    for (; id >= 0; id = labels[id].parent) cells.push_back(labels[id].cell);
    std::reverse(cells.begin(), cells.end());
    return cells;
  };

  int best = -1;
  std::vector<Cell> best_cells;
  while (!open.empty()) {
    const auto [f, neg_ls, n, id] = open.top();
    open.pop();
    if (best >= 0 && f > labels[best].cost + kTieTolerance) break;
    const Label cur = labels[id];
    if (cur.dead) continue;
    if (cur.cell == goal) {
      if (best < 0) {
        best = id;
        best_cells = trace(id);
      } else if (cur.logsurv > labels[best].logsurv + 1e-15) {
        best = id;
        best_cells = trace(id);
      } else if (cur.logsurv >= labels[best].logsurv - 1e-15) {
        auto cells = trace(id);
        if (cells < best_cells) {
          best = id;
          best_cells = std::move(cells);
        }
      }
      continue;
    }
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Cell nb{cur.cell.x + dx, cur.cell.y + dy};
        if (!grid.Inside(nb)) continue;
        const double p = grid.At(nb);
        if (p >= 1.0) continue;
        const double ls = cur.logsurv + std::log1p(-p);
        if (ls < budget) continue;
        if (cur.cells + 1 + Chebyshev(nb, goal) > cfg.horizon) continue;
        const double step = cs * (dx != 0 && dy != 0 ? std::numbers::sqrt2 : 1.0);
        push({cur.cost + step - cfg.kappa * std::log1p(-p), ls, cur.cells + 1, nb, id, false});
      }
    }
  }
  if (best < 0) throw Error(ErrorCode::kNoSafePath, "no path meets the risk and length bounds");

  RaaPath path;
  path.cells = std::move(best_cells);
  path.cost = labels[best].cost;
  path.risk = -std::expm1(labels[best].logsurv);
  for (size_t i = 1; i < path.cells.size(); ++i) {
    path.length += Distance(grid.Center(path.cells[i - 1]), grid.Center(path.cells[i]));
  }
  return path;
}

double Bearing(Vec2 a, Vec2 b) {
  double t = std::atan2(b.y - a.y, b.x - a.x);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

RaaFollower::RaaFollower(const RiskGrid& grid, std::vector<Cell> path, double lambda_max)
    : lambda_max_(lambda_max) {
  if (path.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot follow an empty path");
  for (const Cell& c : path) points_.push_back(grid.Center(c));
  reach_ = 0.75 * grid.grid.cell_size;
}

std::optional<Action> RaaFollower::Next(Vec2 est_pos) {
  while (index_ < points_.size() && Distance(est_pos, points_[index_]) < reach_) ++index_;
  if (index_ >= points_.size()) return std::nullopt;
  return Action{lambda_max_, Bearing(est_pos, points_[index_]), LocMode::kNoisy};
}

Action HeuController::Act(const AsvSim& sim) {
  const SimConfig& cfg = sim.config();
  const Vec2 est = sim.estimator().pos;
  const Vec2 target = sim.evaluator().CurrentTarget();
  constexpr double kInfluence = 6.0;
  constexpr double kGain = 2.0;

  Vec2 push{0.0, 0.0};
  auto repel = [&](const Shape& s, double need) {
    const double d = DistanceTo(s, est) - need;
    if (d >= kInfluence) return;
    Vec2 away = est - NearestPoint(s, est);
    if (away.Norm() == 0.0) away = est - Center(s);
    push = push + Unit(away) * (kGain * (kInfluence - std::max(d, 0.0)) / kInfluence);
  };
  for (const auto& f : cfg.vocab.features()) {
    if (f.obstacle) repel(f.geometry, cfg.hull_radius);
  }
  for (const auto& c : sim.spec().auxiliaries) {
    const Shape s = ConstraintShape(c, cfg.vocab);
    if (std::holds_alternative<StayWithin>(c)) {
      if (!Contains(s, est)) push = push + Unit(Center(s) - est) * kGain;
      continue;
    }
    repel(s, ConstraintMinDistance(c));
  }
  const Rect& a = cfg.vocab.arena();
  const double walls[4] = {est.x - a.x0, a.x1 - est.x, est.y - a.y0, a.y1 - est.y};
  const Vec2 normals[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  for (int i = 0; i < 4; ++i) {
    const double d = walls[i] - cfg.hull_radius;
    if (d < kInfluence) push = push + normals[i] * (kGain * (kInfluence - std::max(d, 0.0)) / kInfluence);
  }

  Vec2 dir = Unit(target - est) + push;
  if (dir.Norm() < 1e-9) dir = Unit(target - est);
  const auto geometry = CriticalGeometry(sim);
  return Action{cfg.lambda_max, Bearing({0.0, 0.0}, dir),
                HeuSelectMode(est, geometry, threshold_)};
}

RaaController::RaaController(RaaConfig cfg, int replan_every, double cell_size, double threshold)
    : cfg_(cfg), replan_every_(replan_every), cell_size_(cell_size), threshold_(threshold) {
  cfg_.Validate();
  if (replan_every_ < 1) throw Error(ErrorCode::kInvalidConfig, "replan interval must be positive");
}

void RaaController::Reset(const AsvSim& sim) {
  (void)sim;
  path_.clear();
  follower_.reset();
  since_plan_ = 0;
  plans_ = 0;
  failures_ = 0;
}

void RaaController::Replan(const AsvSim& sim) {
  const Vec2 est = sim.estimator().pos;
  const Vec2 target = sim.evaluator().CurrentTarget();
  grid_ = BuildRiskGrid(sim.config(), sim.spec(), sim.estimator().u, cell_size_);
  const Cell start = grid_.CellOf(est);
  const Cell want = grid_.CellOf(target);
  // Subgoal: the cell nearest the target among low-risk cells the horizon
  // can reach.
  const int reach = std::max(1, cfg_.horizon - 5);
  Cell goal = start;
  double best = std::numeric_limits<double>::infinity();
  if (Chebyshev(start, want) < reach && grid_.At(want) <= cfg_.p_max * 0.1) {
    goal = want;
  } else {
    for (int y = start.y - reach; y <= start.y + reach; ++y) {
      for (int x = start.x - reach; x <= start.x + reach; ++x) {
        const Cell c{x, y};
        if (!grid_.Inside(c) || grid_.At(c) > cfg_.p_max * 0.1) continue;
        const double d = Distance(grid_.Center(c), target);
        if (d < best) {
          best = d;
          goal = c;
        }
      }
    }
  }
  ++plans_;
  planned_target_ = target;
  since_plan_ = 0;
  try {
    path_ = RaaPlan(grid_, start, goal, cfg_).cells;
    follower_.emplace(grid_, path_, sim.config().lambda_max);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoSafePath) throw;
    ++failures_;
    path_.clear();
    follower_.reset();
  }
}

Action RaaController::Act(const AsvSim& sim) {
  const Vec2 target = sim.evaluator().CurrentTarget();
  if (plans_ == 0 || since_plan_ >= replan_every_ || !(target == planned_target_)) Replan(sim);
  ++since_plan_;
  const Vec2 est = sim.estimator().pos;
  std::optional<Action> a;
  if (follower_) a = follower_->Next(est);
  if (!a) a = Action{sim.config().lambda_max, Bearing(est, target), LocMode::kNoisy};
  a->eta = HeuSelectMode(est, CriticalGeometry(sim), threshold_);
  return *a;
}

}  // namespace guide
