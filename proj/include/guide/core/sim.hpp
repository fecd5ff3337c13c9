#ifndef GUIDE_CORE_SIM_HPP_
#define GUIDE_CORE_SIM_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "guide/core/rng.hpp"
#include "guide/core/task.hpp"
#include "guide/core/tsum.hpp"

namespace guide {

struct SimConfig {
  Vocabulary vocab = Vocabulary::Default();
  std::string dock = "dock";
  // Reset position; the dock center when unset.
  std::optional<Vec2> start;

  double dt = 0.5;                 // s
  double v_max = 1.03;             // m/s, about 2 knots
  double lambda_max = 1.0;         // normalized torque
  double drag = 0.5;               // 1/s
  double sigma_step = 0.15;        // m per sqrt(step), per axis
  double sigma_gps = 0.05;         // m
  double disturbance_gain = 0.3;   // m per step inside a disturbance radius
  double hull_radius = 0.5;        // m

  double c_exact = 1.0;
  double c_noisy = 0.05;
  double collision_penalty = 50.0;
  double completion_bonus = 100.0;
  double progress_gain = 1.0;      // reward per meter
  int max_steps = 1000;

  double goal_radius = 1.5;        // m
  double corridor = 3.5;           // m
  double perimeter_offset = 3.0;   // m outside the target boundary
  double explore_target = 0.25;    // covered fraction that completes an explore

  // Minimum observation slots, so tasks of different sizes share one layout.
  int pad_primaries = 0;
  int pad_constraints = 0;

  double a_max() const { return v_max * drag; }
  Vec2 StartPosition() const;
  // Throws Error{kInvalidConfig}.
  void Validate() const;

  // {"arena", "features", "sim": {...overrides}}; the vocabulary file format
  // with an optional "sim" block.
  static SimConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

enum class LocMode { kNoisy = 0, kExact = 1 };

struct Action {
  double lambda = 0.0;
  double alpha = 0.0;
  LocMode eta = LocMode::kNoisy;
};

struct TrueState {
  Vec2 pos;
  double heading = 0.0;
  double speed = 0.0;
};

struct EstimatorState {
  Vec2 pos;
  double u = 0.0;
};

struct StepInfo {
  bool collision = false;
  bool exact_fix = false;
  bool violation = false;     // a constraint was violated at some step so far
  bool task_complete = false;
  bool clamped = false;       // the action was outside its range
  double completed_fraction = 0.0;
  // Reward components; reward == sum of these.
  double r_progress = 0.0;
  double r_bonus = 0.0;
  double r_collision = 0.0;
  double r_localization = 0.0;
};

struct StepOutcome {
  // [s; U(s_hat); u]
  std::vector<double> augmented_obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;

  size_t base_dim() const { return augmented_obs.size() - 2; }
  std::vector<double> BaseObs() const {
    return {augmented_obs.begin(), augmented_obs.end() - 2};
  }
};

// Progress tracking and completion criteria for one episode. Works on true
// positions only.
class TaskEvaluator {
 public:
  TaskEvaluator(const TaskSpec& spec, const SimConfig& cfg);

  void Reset(Vec2 pos);
  // Advances the state with the new true position.
  void Update(Vec2 pos);

  double completed_fraction() const { return fraction_; }
  bool complete() const { return fraction_ >= 1.0 && !violated_; }
  bool violated() const { return violated_; }
  size_t active_index() const { return active_; }

  // Point the active subtask pulls toward, as of the last update.
  Vec2 CurrentTarget() const { return target_; }
  // Per-subtask targets used for observations; nullopt for finished ones.
  std::optional<Vec2> SubtaskTarget(size_t i) const;

 private:
  struct Coverage {
    std::vector<Vec2> points;
    std::vector<char> covered;
    size_t n_covered = 0;
    size_t cursor = 0;  // perimeter: next point in ring order
  };

  double ActivePartial() const;
  void Activate(Vec2 pos);
  void Advance(Vec2 pos);
  double RawFraction() const;
  Vec2 ComputeTarget(Vec2 pos) const;

  TaskSpec spec_;
  SimConfig config_;
  std::vector<Vec2> goal_points_;
  std::vector<Shape> constraint_shapes_;
  size_t active_ = 0;
  Coverage coverage_;
  bool violated_ = false;
  double fraction_ = 0.0;
  Vec2 target_;
};

// Builds the waypoint ring for a perimeter target (counter-clockwise, about
// 1 m spacing).
std::vector<Vec2> PerimeterPath(const Shape& target, const SimConfig& cfg);

class AsvSim {
 public:
  explicit AsvSim(SimConfig cfg);

  // Throws Error{kInvalidConfig}.
  StepOutcome Reset(const TaskSpec& spec, std::shared_ptr<const Tsum> tsum,
                    uint64_t seed);
  // Throws Error{kNotReset}.
  StepOutcome Step(const Action& action);

  const SimConfig& config() const { return cfg_; }
  const TrueState& true_state() const { return truth_; }
  const EstimatorState& estimator() const { return est_; }
  const TaskSpec& spec() const { return spec_; }
  const TaskEvaluator& evaluator() const { return *evaluator_; }
  int step_count() const { return step_; }
  bool is_reset() const { return evaluator_ != nullptr; }

  int base_obs_dim() const;
  static int BaseObsDim(const TaskSpec& spec, const SimConfig& cfg);

  bool InDisturbance(Vec2 p) const;
  bool Collides(Vec2 p) const;

 private:
  StepOutcome Observe() const;

  SimConfig cfg_;
  TaskSpec spec_;
  std::shared_ptr<const Tsum> tsum_;
  std::unique_ptr<TaskEvaluator> evaluator_;
  CounterRng rng_;
  TrueState truth_;
  EstimatorState est_;
  int step_ = 0;
  bool done_ = false;
};

// One CSV row per step: step,true_x,true_y,est_x,est_y,u,eta,reward,flags.
struct TrajectoryRow {
  int step = 0;
  Vec2 true_pos;
  Vec2 est_pos;
  double u = 0.0;
  LocMode eta = LocMode::kNoisy;
  double reward = 0.0;
  bool collision = false;
  bool violation = false;
  bool complete = false;
};

std::string TrajectoryCsvHeader();
std::string TrajectoryCsvRow(const TrajectoryRow& r);
std::vector<TrajectoryRow> ReadTrajectoryCsv(const std::string& path);

}  // namespace guide

#endif  // GUIDE_CORE_SIM_HPP_
