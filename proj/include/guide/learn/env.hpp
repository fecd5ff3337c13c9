#ifndef GUIDE_LEARN_ENV_HPP_
#define GUIDE_LEARN_ENV_HPP_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guide/core/sim.hpp"
#include "guide/learn/policy.hpp"

namespace guide {

struct EnvStep {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminal = false;   // absorbing: no bootstrap past this step
  bool truncated = false;  // time limit
  double completed_fraction = 0.0;
  bool exact_fix = false;
  bool collision = false;
  double u = 0.0;          // current position uncertainty after the step
  bool done() const { return terminal || truncated; }
};

// Episodic control problem in the policy's action convention: continuous
// components in [-1, 1] and an optional binary flag.
class Env {
 public:
  virtual ~Env() = default;
  virtual int obs_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual std::vector<double> Reset(uint64_t seed) = 0;
  virtual EnvStep Step(std::span<const double> t, bool eta) = 0;
};

// Which parts of [s; U; u] the agent sees.
enum class ObsMode { kAugmented, kBase, kBaseWithUncertainty };

struct TaskInstance {
  std::string text;
  TaskSpec spec;
  std::shared_ptr<const Tsum> tsum;
};

// The lake simulator over a suite of tasks; each reset draws a task from the
// suite unless one is pinned.
class SimEnv : public Env {
 public:
  SimEnv(SimConfig cfg, std::vector<TaskInstance> tasks, ObsMode mode);

  int obs_dim() const override { return obs_dim_; }
  ActionSpace action_space() const override { return {2, true}; }
  std::vector<double> Reset(uint64_t seed) override;
  EnvStep Step(std::span<const double> t, bool eta) override;

  void PinTask(std::optional<size_t> index) { pinned_ = index; }
  size_t current_task() const { return current_; }
  const std::vector<TaskInstance>& tasks() const { return tasks_; }
  const AsvSim& sim() const { return sim_; }
  ObsMode mode() const { return mode_; }

 private:
  std::vector<double> Project(const std::vector<double>& augmented) const;

  AsvSim sim_;
  std::vector<TaskInstance> tasks_;
  ObsMode mode_;
  int obs_dim_ = 0;
  std::optional<size_t> pinned_;
  size_t current_ = 0;
};

// One-step continuous bandit with reward -(a - optimum)^2 and a constant
// observation.
class BanditEnv : public Env {
 public:
  explicit BanditEnv(double optimum = 0.3) : optimum_(optimum) {}
  int obs_dim() const override { return 1; }
  ActionSpace action_space() const override { return {1, false}; }
  std::vector<double> Reset(uint64_t) override { return {1.0}; }
  EnvStep Step(std::span<const double> t, bool) override;

 private:
  double optimum_;
};

}  // namespace guide

#endif  // GUIDE_LEARN_ENV_HPP_
