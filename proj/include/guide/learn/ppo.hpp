#ifndef GUIDE_LEARN_PPO_HPP_
#define GUIDE_LEARN_PPO_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "guide/learn/env.hpp"
#include "guide/learn/nn.hpp"
#include "guide/learn/policy.hpp"
#include "guide/learn/sac.hpp"

namespace guide {

struct PpoConfig {
  double gamma = 0.99;
  double clip = 0.2;
  int epochs_per_update = 10;
  double gae_lambda = 0.95;
  int batch = 64;
  double lr = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int rollout = 2048;
  int hidden = 256;
  bool normalize_advantages = true;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults. Throws Error{kInvalidConfig}.
  static PpoConfig FromJson(const nlohmann::json& j);
};

// Per-step inputs for advantage estimation. next_value is V(s') and is ignored
// on terminal steps; cut stops the recursion (episode end or rollout end).
struct GaeInput {
  std::vector<double> reward;
  std::vector<double> value;
  std::vector<double> next_value;
  std::vector<char> terminal;
  std::vector<char> cut;
};

struct GaeResult {
  std::vector<double> advantage;
  std::vector<double> ret;  // advantage + value
};

// delta_t = r_t + gamma (1 - terminal_t) V(s'_t) - V(s_t)
// A_t = delta_t + gamma lambda (1 - cut_t) A_{t+1}
GaeResult Gae(const GaeInput& in, double gamma, double lambda);

struct SurrogateTerm {
  double value = 0.0;    // min(ratio A, clip(ratio) A)
  double d_ratio = 0.0;  // derivative with respect to ratio
  double used_ratio = 0.0;
};
SurrogateTerm ClippedSurrogate(double ratio, double advantage, double clip);

struct PpoLossResult {
  double loss = 0.0;  // negated mean surrogate
  Vector grad;
  double clip_fraction = 0.0;
};
// u holds pre-squash actions, eta hard flags, old_log_prob the behaviour
// log-densities.
PpoLossResult PpoPolicyLoss(const GaussianPolicy& policy, const Matrix& obs, const Matrix& u,
                            const Matrix& eta, const Vector& old_log_prob,
                            const Vector& advantage, double clip);

struct ValueLossResult {
  double loss = 0.0;
  Vector grad;
};
// Mean squared error of a scalar value net.
ValueLossResult ValueLoss(const Mlp& value, const Matrix& obs, const Vector& target);

struct PpoRun {
  GaussianPolicy policy;
  Mlp value;
  std::vector<EpisodeMetrics> episodes;
};

PpoRun TrainPpo(Env& env, const PpoConfig& cfg, long steps, uint64_t seed,
                const MetricsCallback& on_episode = {});

}  // namespace guide

#endif  // GUIDE_LEARN_PPO_HPP_
