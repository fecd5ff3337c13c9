#ifndef GUIDE_PLAN_PLANNERS_HPP_
#define GUIDE_PLAN_PLANNERS_HPP_

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "guide/core/embedding.hpp"
#include "guide/core/raster.hpp"
#include "guide/core/sim.hpp"

namespace guide {

inline constexpr double kHeuThreshold = 3.5;  // m

// Exact iff the estimate is within threshold of any shape (closed set).
LocMode HeuSelectMode(Vec2 est_pos, std::span<const Shape> geometry,
                      double threshold = kHeuThreshold);

// Obstacles, constraint shapes, and the point the task currently pulls toward.
std::vector<Shape> CriticalGeometry(const AsvSim& sim);

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

struct RiskGrid {
  PatchGrid grid;
  std::vector<double> p;  // per-cell collision probability, row-major

  bool Inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < grid.nx && c.y < grid.ny; }
  double At(Cell c) const { return p[grid.Index(c.x, c.y)]; }
  double& At(Cell c) { return p[grid.Index(c.x, c.y)]; }
  Vec2 Center(Cell c) const { return grid.CellCenter(grid.Index(c.x, c.y)); }
  Cell CellOf(Vec2 pos) const;
};

// Uniform zero-risk grid of nx x ny unit cells at the origin.
RiskGrid EmptyRiskGrid(int nx, int ny, double cell_size = 1.0);

// Per-cell probability that a vehicle centered in the cell with 1-sigma
// position error u is within hull distance of an obstacle or arena wall or
// inside an avoided area. Values below 1e-9 are set to 0.
RiskGrid BuildRiskGrid(const SimConfig& cfg, const TaskSpec& spec, double u,
                       double cell_size = 1.0);

Raster RiskRaster(const RiskGrid& grid);

struct RaaConfig {
  double p_max = 0.01;
  int horizon = 50;         // maximum cells in a path, start included
  double kappa = 25.0;      // m per nat of survival loss
  size_t max_labels = 2000000;

  void Validate() const;
};

struct RaaPath {
  std::vector<Cell> cells;
  double cost = 0.0;   // sum of edge costs
  double risk = 0.0;   // 1 - prod(1 - p) over every cell, start included
  double length = 0.0; // m
};

// Sum over log(1 - p) of the cells; -inf when any p is 1.
double LogSurvival(const RiskGrid& grid, std::span<const Cell> cells);
double PathRisk(const RiskGrid& grid, std::span<const Cell> cells);
double PathCost(const RiskGrid& grid, std::span<const Cell> cells, double kappa);
bool RiskFeasible(double log_survival, double p_max);

// Minimum-cost path over 8-connected cells subject to the risk and length
// bounds. Ties prefer lower risk. Throws Error{kNoSafePath}.
RaaPath RaaPlan(const RiskGrid& grid, Cell start, Cell goal, const RaaConfig& cfg);

// Waypoint chasing along a planned path; yields nothing once the last cell
// is reached.
class RaaFollower {
 public:
  RaaFollower(const RiskGrid& grid, std::vector<Cell> path, double lambda_max);
  std::optional<Action> Next(Vec2 est_pos);
  size_t index() const { return index_; }

 private:
  std::vector<Vec2> points_;
  size_t index_ = 1;
  double lambda_max_;
  double reach_ = 0.75;
};

// Bearing from a to b in [0, 2 pi).
double Bearing(Vec2 a, Vec2 b);

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void Reset(const AsvSim& sim) { (void)sim; }
  virtual Action Act(const AsvSim& sim) = 0;
};

// Goal chasing with repulsion from obstacles, walls, and avoided areas; mode by
// HeuSelectMode.
class HeuController : public Controller {
 public:
  explicit HeuController(double threshold = kHeuThreshold) : threshold_(threshold) {}
  Action Act(const AsvSim& sim) override;

 private:
  double threshold_;
};

// Plans with RaaPlan from the estimated position and follows the path,
// replanning every replan_every steps or when the target moves.
class RaaController : public Controller {
 public:
  explicit RaaController(RaaConfig cfg = {}, int replan_every = 25, double cell_size = 1.0,
                         double threshold = kHeuThreshold);
  void Reset(const AsvSim& sim) override;
  Action Act(const AsvSim& sim) override;

  const std::vector<Cell>& last_path() const { return path_; }
  int plans() const { return plans_; }
  int failures() const { return failures_; }

 private:
  void Replan(const AsvSim& sim);

  RaaConfig cfg_;
  int replan_every_;
  double cell_size_;
  double threshold_;
  RiskGrid grid_;
  std::vector<Cell> path_;
  std::optional<RaaFollower> follower_;
  Vec2 planned_target_;
  int since_plan_ = 0;
  int plans_ = 0;
  int failures_ = 0;
};

}  // namespace guide

#endif  // GUIDE_PLAN_PLANNERS_HPP_
