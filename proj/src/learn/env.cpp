#include "guide/learn/env.hpp"

#include "guide/core/error.hpp"

namespace guide {

SimEnv::SimEnv(SimConfig cfg, std::vector<TaskInstance> tasks, ObsMode mode)
    : sim_(std::move(cfg)), tasks_(std::move(tasks)), mode_(mode) {
  if (tasks_.empty()) throw Error(ErrorCode::kInvalidConfig, "task suite is empty");
  const int base = AsvSim::BaseObsDim(tasks_.front().spec, sim_.config());
  for (const auto& t : tasks_) {
    if (AsvSim::BaseObsDim(t.spec, sim_.config()) != base) {
      throw Error(ErrorCode::kInvalidConfig,
                  "tasks in one suite must share an observation layout; set pad_primaries "
                  "and pad_constraints");
    }
  }
  switch (mode_) {
    case ObsMode::kAugmented: obs_dim_ = base + 2; break;
    case ObsMode::kBase: obs_dim_ = base; break;
    case ObsMode::kBaseWithUncertainty: obs_dim_ = base + 1; break;
  }
}

std::vector<double> SimEnv::Project(const std::vector<double>& augmented) const {
  switch (mode_) {
    case ObsMode::kAugmented: return augmented;
    case ObsMode::kBase: return {augmented.begin(), augmented.end() - 2};
    case ObsMode::kBaseWithUncertainty: {
      std::vector<double> o(augmented.begin(), augmented.end() - 2);
      o.push_back(augmented.back());
      return o;
    }
  }
  return augmented;
}

std::vector<double> SimEnv::Reset(uint64_t seed) {
  if (pinned_) {
    current_ = *pinned_ % tasks_.size();
  } else {
    current_ = DeriveSeed(seed, "task") % tasks_.size();
  }
  const auto& t = tasks_[current_];
  return Project(sim_.Reset(t.spec, t.tsum, seed).augmented_obs);
}

EnvStep SimEnv::Step(std::span<const double> t, bool eta) {
  if (t.size() != 2) throw Error(ErrorCode::kShapeMismatch, "lake actions have two components");
  const auto out = sim_.Step(ToSimAction(t[0], t[1], eta, sim_.config().lambda_max));
  EnvStep s;
  s.obs = Project(out.augmented_obs);
  s.reward = out.reward;
  s.terminal = out.info.task_complete || out.info.collision;
  s.truncated = out.done && !s.terminal;
  s.completed_fraction = out.info.completed_fraction;
  s.exact_fix = out.info.exact_fix;
  s.collision = out.info.collision;
  s.u = sim_.estimator().u;
  return s;
}

EnvStep BanditEnv::Step(std::span<const double> t, bool) {
  if (t.size() != 1) throw Error(ErrorCode::kShapeMismatch, "bandit actions have one component");
  EnvStep s;
  s.obs = {1.0};
  s.reward = -(t[0] - optimum_) * (t[0] - optimum_);
  s.terminal = true;
  s.completed_fraction = 1.0;
  return s;
}

}  // namespace guide
