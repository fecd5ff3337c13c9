#ifndef GUIDE_TESTS_RAA_ORACLE_HPP_
#define GUIDE_TESTS_RAA_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "guide/plan/planners.hpp"

namespace guide::testing {

struct OraclePath {
  std::vector<guide::Cell> cells;
  double cost = 0.0;
  double log_survival = 0.0;
};

// Depth-first enumeration of simple 8-connected paths, pruned only by bounds
// that cannot discard an optimal path (cost lower bound, risk, length).
class RaaOracle {
 public:
  RaaOracle(const guide::RiskGrid& grid, guide::Cell goal, const guide::RaaConfig& cfg)
      : grid_(grid), goal_(goal), cfg_(cfg), budget_(std::log1p(-cfg.p_max)),
        visited_(grid.p.size(), 0) {
    ComputeLowerBounds();
  }

  // Highest log-survival over walks of at most horizon cells, by dynamic
  // programming over hop counts; any optimal walk can be shortened to a
  // simple path, so this decides whether a risk-feasible path exists.
  std::optional<std::vector<guide::Cell>> SafestPath(guide::Cell start) const {
    const double ninf = -std::numeric_limits<double>::infinity();
    const size_t n = grid_.p.size();
    std::vector<std::vector<double>> best(cfg_.horizon + 1, std::vector<double>(n, ninf));
    std::vector<std::vector<int>> from(cfg_.horizon + 1, std::vector<int>(n, -1));
    const double p0 = grid_.At(start);
    if (p0 >= 1.0) return std::nullopt;
    best[1][grid_.grid.Index(start.x, start.y)] = std::log1p(-p0);
    for (int h = 1; h < cfg_.horizon; ++h) {
      for (int y = 0; y < grid_.grid.ny; ++y) {
        for (int x = 0; x < grid_.grid.nx; ++x) {
          const int j = grid_.grid.Index(x, y);
          if (best[h][j] == ninf) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const guide::Cell nb{x + dx, y + dy};
              if ((dx == 0 && dy == 0) || !grid_.Inside(nb) || grid_.At(nb) >= 1.0) continue;
              const int k = grid_.grid.Index(nb.x, nb.y);
              const double v = best[h][j] + std::log1p(-grid_.At(nb));
              if (v > best[h + 1][k]) {
                best[h + 1][k] = v;
                from[h + 1][k] = j;
              }
            }
          }
        }
      }
    }
    const int g = grid_.grid.Index(goal_.x, goal_.y);
    int hops = -1;
    for (int h = 1; h <= cfg_.horizon; ++h) {
      if (best[h][g] != ninf && (hops < 0 || best[h][g] > best[hops][g])) hops = h;
    }
    if (hops < 0 || best[hops][g] < budget_) return std::nullopt;
    std::vector<guide::Cell> cells;
    for (int j = g, h = hops; h >= 1; j = from[h][j], --h) {
      cells.push_back({j % grid_.grid.nx, j / grid_.grid.nx});
    }
    std::reverse(cells.begin(), cells.end());
    // Remove loops so the result is a simple path.
    std::vector<guide::Cell> simple;
    for (const auto& c : cells) {
      auto it = std::find(simple.begin(), simple.end(), c);
      if (it != simple.end()) simple.erase(it + 1, simple.end());
      else simple.push_back(c);
    }
    return simple;
  }

  // upper_bound: cost of some known feasible path, or infinity.
  std::optional<OraclePath> Solve(guide::Cell start,
                                  double upper_bound = std::numeric_limits<double>::infinity()) {
    best_.reset();
    bound_ = upper_bound + 1e-9;
    const double p = grid_.At(start);
    if (p >= 1.0 || std::log1p(-p) < budget_) return std::nullopt;
    path_ = {start};
    Mark(start, 1);
    Dfs(start, 0.0, std::log1p(-p));
    Mark(start, 0);
    return best_;
  }

 private:
  void Mark(guide::Cell c, char v) { visited_[grid_.grid.Index(c.x, c.y)] = v; }
  bool Seen(guide::Cell c) const { return visited_[grid_.grid.Index(c.x, c.y)] != 0; }

  // Zero-risk distance to the goal through cells with p < 1 (Bellman-Ford
  // sweeps; the grids here are tiny).
  void ComputeLowerBounds() {
    const double inf = std::numeric_limits<double>::infinity();
    lower_.assign(grid_.p.size(), inf);
    lower_[grid_.grid.Index(goal_.x, goal_.y)] = 0.0;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int y = 0; y < grid_.grid.ny; ++y) {
        for (int x = 0; x < grid_.grid.nx; ++x) {
          const int j = grid_.grid.Index(x, y);
          if (grid_.At({x, y}) >= 1.0 && !(guide::Cell{x, y} == goal_)) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const guide::Cell n{x + dx, y + dy};
              if ((dx == 0 && dy == 0) || !grid_.Inside(n) || grid_.At(n) >= 1.0) continue;
              const double step =
                  grid_.grid.cell_size * (dx != 0 && dy != 0 ? std::numbers::sqrt2 : 1.0);
              const double via = lower_[grid_.grid.Index(n.x, n.y)] + step;
              if (via < lower_[j] - 1e-15) {
                lower_[j] = via;
                changed = true;
              }
            }
          }
        }
      }
    }
  }

  void Dfs(guide::Cell c, double cost, double ls) {
    const double limit = best_ ? best_->cost + 1e-9 : bound_;
    if (cost + lower_[grid_.grid.Index(c.x, c.y)] > limit) return;
    if (c == goal_) {
      const bool better = !best_ || cost < best_->cost - 1e-9 ||
                          (cost <= best_->cost + 1e-9 && ls > best_->log_survival);
      if (better) best_ = OraclePath{path_, cost, ls};
      return;
    }
    if (static_cast<int>(path_.size()) >= cfg_.horizon) return;
    struct Move {
      double key;
      guide::Cell n;
      double cost;
      double ls;
    };
    Move moves[8];
    int count = 0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const guide::Cell n{c.x + dx, c.y + dy};
        if (!grid_.Inside(n) || Seen(n)) continue;
        const double p = grid_.At(n);
        if (p >= 1.0) continue;
        const double nls = ls + std::log1p(-p);
        if (nls < budget_) continue;
        const double step =
            grid_.grid.cell_size * (dx != 0 && dy != 0 ? std::numbers::sqrt2 : 1.0);
        const double nc = cost + step - cfg_.kappa * std::log1p(-p);
        moves[count++] = {nc + lower_[grid_.grid.Index(n.x, n.y)], n, nc, nls};
      }
    }
    std::sort(moves, moves + count, [](const Move& a, const Move& b) { return a.key < b.key; });
    for (int i = 0; i < count; ++i) {
      path_.push_back(moves[i].n);
      Mark(moves[i].n, 1);
      Dfs(moves[i].n, moves[i].cost, moves[i].ls);
      Mark(moves[i].n, 0);
      path_.pop_back();
    }
  }

  const guide::RiskGrid& grid_;
  guide::Cell goal_;
  guide::RaaConfig cfg_;
  double budget_;
  std::vector<char> visited_;
  std::vector<guide::Cell> path_;
  std::vector<double> lower_;
  double bound_ = 0.0;
  std::optional<OraclePath> best_;
};

// Random 7x7 style grid: mostly free cells, some small risks, a few walls.
inline guide::RiskGrid RandomRiskGrid(guide::CounterRng& rng, int n) {
  auto g = guide::EmptyRiskGrid(n, n);
  for (double& p : g.p) {
    const double u = rng.UniformOpen();
    if (u < 0.15) p = 1.0;
    else if (u < 0.35) p = 0.5 * std::pow(10.0, rng.Uniform(-4.0, -1.5));
    else if (u < 0.45) p = rng.Uniform(0.02, 0.6);
  }
  return g;
}

}  // namespace guide::testing

#endif  // GUIDE_TESTS_RAA_ORACLE_HPP_
