#ifndef GUIDE_LEARN_POLICY_HPP_
#define GUIDE_LEARN_POLICY_HPP_

#include <cstdint>

#include "guide/core/rng.hpp"
#include "guide/core/sim.hpp"
#include "guide/learn/nn.hpp"

namespace guide {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhEps = 1e-6;

// Policy-side action: continuous components in tanh space [-1, 1] plus an
// optional binary localization flag.
struct ActionSpace {
  int continuous = 2;
  bool has_eta = true;
  int critic_dim() const { return continuous + (has_eta ? 1 : 0); }
};

// Gaussian trunk squashed by tanh, with a Bernoulli logit head for eta. Net
// outputs per sample: [mean (k), log_std (k), eta logit (0 or 1)].
class GaussianPolicy {
 public:
  // Reparameterized sample of a batch, with everything needed to backprop.
  struct Sample {
    Matrix mean, log_std, std, eps, u, t;  // k x B
    Matrix logit, noise, eta;              // 1 x B (empty without eta)
    Matrix clamped;                        // k x B, 1 where log_std hit a bound
    Vector log_prob;                       // B
    double temperature = 1.0;
    Mlp::Cache cache;
  };

  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int hidden, ActionSpace space, uint64_t seed);

  const ActionSpace& space() const { return space_; }
  int obs_dim() const { return net_.in_dim(); }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  // eps: k x B standard normals; uniform: 1 x B draws in (0, 1) for the
  // logistic relaxation of eta. The relaxed eta is sigmoid((logit + L) / T)
  // with L = log(U) - log(1 - U). The log-probability adds the Bernoulli
  // negative entropy p log p + (1 - p) log(1 - p) for the eta head.
  Sample Forward(const Matrix& obs, const Matrix& eps, const Matrix& uniform,
                 double temperature) const;

  // Pulls dL/dt (k x B), dL/deta (1 x B) and dL/dlog_prob (B) back into the
  // network parameters.
  void Backward(const Sample& s, const Matrix& d_t, const Matrix& d_eta,
                const Vector& d_log_prob, Vector* grad) const;

  // Critic input block [t; eta] for a sample.
  Matrix CriticAction(const Sample& s) const;

  // Log-density of stored actions (pre-tanh u, hard eta in {0, 1}), used by
  // the on-policy trainer. Returns log_prob; fills cache data for backprop.
  struct Evaluation {
    Matrix mean, log_std, std, u, t, logit, eta, clamped;
    Vector log_prob;
    Mlp::Cache cache;
  };
  Evaluation Evaluate(const Matrix& obs, const Matrix& u, const Matrix& eta) const;
  void BackwardEvaluation(const Evaluation& e, const Vector& d_log_prob, Vector* grad) const;

  // Greedy action: tanh(mean) and eta = logit > 0.
  Matrix Deterministic(const Matrix& obs, Matrix* eta) const;

 private:
  ActionSpace space_;
  Mlp net_;
};

// Density of y = tanh(u), u ~ N(mean, exp(log_std)^2), in tanh space with the
// same epsilon correction the policy uses.
double SquashedLogDensity(double y, double mean, double log_std);

// Maps policy tanh-space components onto the simulator's action ranges.
Action ToSimAction(double t_lambda, double t_alpha, bool exact, double lambda_max);

}  // namespace guide

#endif  // GUIDE_LEARN_POLICY_HPP_
