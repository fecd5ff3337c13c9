#ifndef GUIDE_LEARN_SAC_HPP_
#define GUIDE_LEARN_SAC_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "guide/learn/env.hpp"
#include "guide/learn/nn.hpp"
#include "guide/learn/policy.hpp"
#include "guide/learn/replay.hpp"

namespace guide {

struct SacConfig {
  double gamma = 0.99;
  double alpha_init = 0.2;
  double target_entropy = -2.0;
  double polyak = 0.005;
  int batch = 256;
  double lr_policy = 3e-4;
  double lr_q = 3e-4;
  double lr_alpha = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  size_t buffer_capacity = 1000000;
  int hidden = 256;
  long warmup_steps = 1000;
  int updates_per_step = 1;
  double eta_temp_start = 1.0;
  double eta_temp_end = 0.1;
  long eta_anneal_steps = 50000;
  // Uncertainty-penalized variant.
  double sacp_zeta = 0.4;
  // Bootstrapped variant.
  int bsac_heads = 10;
  double bsac_mask_prob = 0.8;
  double bsac_pessimism = 1.0;

  void Validate() const;
  double EtaTemperature(long step) const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults. Throws Error{kInvalidConfig}.
  static SacConfig FromJson(const nlohmann::json& j);
};

enum class SacVariant { kStandard, kPenalized, kBootstrapped };

// y = r + (1 - done) * gamma * (min_q_next - alpha * log_pi_next)
double BellmanTarget(double r, bool done, double min_q_next, double log_pi_next, double gamma,
                     double alpha);
// r - zeta * u
double SacpReward(double r_base, double u, double zeta = 0.4);

struct AlphaLossResult {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d alpha
};
// E[-alpha (log_pi + target_entropy)] and -E[log_pi + target_entropy].
AlphaLossResult AlphaLoss(std::span<const double> log_pis, double alpha, double target_entropy);

// Critics come in pairs; pair k is one bootstrap head (plain SAC has one).
// Net 2k+i is member i of head k.
struct QLossResult {
  double loss = 0.0;
  std::vector<Vector> grads;  // one per critic net
  Matrix targets;             // heads x B
};
QLossResult QLoss(const Batch& batch, const std::vector<Mlp>& critics,
                  const std::vector<Mlp>& target_critics, const GaussianPolicy& policy,
                  const Matrix& next_eps, const Matrix& next_uniform, double temperature,
                  double gamma, double alpha);

struct PolicyLossResult {
  double loss = 0.0;
  Vector grad;
  Vector log_prob;
  Matrix head_std;  // 1 x B spread of head values (zero for one head)
};
// E[alpha log_pi - V] with V = mean_k min_i Q_ki - pessimism * std_k min_i Q_ki.
PolicyLossResult PolicyLoss(const Batch& batch, const std::vector<Mlp>& critics,
                            const GaussianPolicy& policy, const Matrix& eps,
                            const Matrix& uniform, double temperature, double alpha,
                            double pessimism = 1.0);

struct EpisodeMetrics {
  long step = 0;
  long episode = 0;
  double ret = 0.0;
  double tcr = 0.0;
  double alpha = 0.0;
  double q_loss = 0.0;
  double policy_loss = 0.0;
  int exact_fixes = 0;
  double head_std = 0.0;
};

std::string MetricsCsvHeader();
std::string MetricsCsvRow(const EpisodeMetrics& m);

class SacAgent {
 public:
  SacAgent() = default;
  SacAgent(int obs_dim, ActionSpace space, const SacConfig& cfg, int heads, uint64_t seed);

  struct UpdateStats {
    double q_loss = 0.0;
    double policy_loss = 0.0;
    double head_std = 0.0;
  };
  UpdateStats Update(const Batch& batch, CounterRng& rng, double temperature);

  double alpha() const;
  int heads() const { return heads_; }
  const SacConfig& config() const { return cfg_; }
  GaussianPolicy& policy() { return policy_; }
  const GaussianPolicy& policy() const { return policy_; }
  std::vector<Mlp>& critics() { return critics_; }
  const std::vector<Mlp>& critics() const { return critics_; }
  std::vector<Mlp>& target_critics() { return targets_; }
  const std::vector<Mlp>& target_critics() const { return targets_; }
  double& log_alpha() { return log_alpha_; }

 private:
  SacConfig cfg_;
  int heads_ = 1;
  GaussianPolicy policy_;
  std::vector<Mlp> critics_;
  std::vector<Mlp> targets_;
  double log_alpha_ = 0.0;
  Adam policy_opt_;
  std::vector<Adam> critic_opts_;
  Adam alpha_opt_;
};

using MetricsCallback = std::function<void(const EpisodeMetrics&)>;

struct SacRun {
  SacAgent agent;
  std::vector<EpisodeMetrics> episodes;
};

// Bernoulli(p) inclusion per head, redrawn until at least one head is set.
std::vector<double> DrawBootstrapMask(CounterRng& rng, int heads, double p);

// Interleaves interaction and gradient steps: uniform random actions for the
// warm-up, then one sampled action and updates_per_step updates per step.
SacRun TrainSac(Env& env, const SacConfig& cfg, SacVariant variant, long steps, uint64_t seed,
                const MetricsCallback& on_episode = {});

// Greedy action in tanh space plus the hard eta flag.
std::vector<double> GreedyAction(const GaussianPolicy& policy, std::span<const double> obs,
                                 bool* eta);

}  // namespace guide

#endif  // GUIDE_LEARN_SAC_HPP_
