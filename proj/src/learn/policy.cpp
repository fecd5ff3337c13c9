#include "guide/learn/policy.hpp"

#include <cmath>
#include <numbers>

#include "guide/core/error.hpp"

namespace guide {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double Softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Heads {
  Matrix mean, log_std, std, clamped, logit;
};

Heads SplitHeads(const Matrix& out, const ActionSpace& space) {
  const int k = space.continuous;
  Heads h;
  h.mean = out.topRows(k);
  const Matrix raw = out.middleRows(k, k);
  h.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  h.clamped = ((raw.array() < kLogStdMin) || (raw.array() > kLogStdMax)).cast<double>().matrix();
  h.std = h.log_std.array().exp().matrix();
  if (space.has_eta) h.logit = out.middleRows(2 * k, 1);
  return h;
}

}  // namespace

GaussianPolicy::GaussianPolicy(int obs_dim, int hidden, ActionSpace space, uint64_t seed)
    : space_(space),
      net_({obs_dim, hidden, hidden, 2 * space.continuous + (space.has_eta ? 1 : 0)}, seed) {}

GaussianPolicy::Sample GaussianPolicy::Forward(const Matrix& obs, const Matrix& eps,
                                               const Matrix& uniform, double temperature) const {
  const int k = space_.continuous;
  const Eigen::Index b = obs.cols();
  if (eps.rows() != k || eps.cols() != b) throw Error(ErrorCode::kShapeMismatch, "policy noise shape");
  if (space_.has_eta && (uniform.rows() != 1 || uniform.cols() != b)) {
    throw Error(ErrorCode::kShapeMismatch, "policy eta noise shape");
  }
  Sample s;
  s.temperature = temperature;
  const Matrix out = net_.Forward(obs, &s.cache);
  Heads h = SplitHeads(out, space_);
  s.mean = std::move(h.mean);
  s.log_std = std::move(h.log_std);
  s.std = std::move(h.std);
  s.clamped = std::move(h.clamped);
  s.eps = eps;
  s.u = s.mean + s.std.cwiseProduct(eps);
  s.t = s.u.array().tanh().matrix();
  s.log_prob = Vector::Zero(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    double lp = 0.0;
    for (int d = 0; d < k; ++d) {
      const double t = s.t(d, j);
      lp += -0.5 * eps(d, j) * eps(d, j) - s.log_std(d, j) - kHalfLog2Pi -
            std::log(1.0 - t * t + kTanhEps);
    }
    s.log_prob[j] = lp;
  }
  if (space_.has_eta) {
    s.logit = std::move(h.logit);
    s.noise.resize(1, b);
    s.eta.resize(1, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const double u = uniform(0, j);
      s.noise(0, j) = std::log(u) - std::log1p(-u);
      s.eta(0, j) = Sigmoid((s.logit(0, j) + s.noise(0, j)) / temperature);
      const double l = s.logit(0, j);
      const double p = Sigmoid(l);
      s.log_prob[j] += p * -Softplus(-l) + (1.0 - p) * -Softplus(l);
    }
  }
  return s;
}

void GaussianPolicy::Backward(const Sample& s, const Matrix& d_t, const Matrix& d_eta,
                              const Vector& d_log_prob, Vector* grad) const {
  const int k = space_.continuous;
  const Eigen::Index b = s.t.cols();
  Matrix d_out = Matrix::Zero(net_.out_dim(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double g = d_log_prob[j];
    for (int d = 0; d < k; ++d) {
      const double t = s.t(d, j);
      const double one_m = 1.0 - t * t;
      // d log_prob / du from the tanh correction term.
      const double corr = 2.0 * t * one_m / (one_m + kTanhEps);
      const double d_u = d_t(d, j) * one_m + g * corr;
      d_out(d, j) = d_u;
      if (s.clamped(d, j) == 0.0) {
        d_out(k + d, j) = d_u * s.std(d, j) * s.eps(d, j) - g;
      }
    }
    if (space_.has_eta) {
      const double y = s.eta(0, j);
      const double l = s.logit(0, j);
      const double p = Sigmoid(l);
      d_out(2 * k, j) = d_eta(0, j) * y * (1.0 - y) / s.temperature + g * p * (1.0 - p) * l;
    }
  }
  net_.Backward(s.cache, d_out, grad);
}

Matrix GaussianPolicy::CriticAction(const Sample& s) const {
  if (!space_.has_eta) return s.t;
  Matrix a(space_.critic_dim(), s.t.cols());
  a.topRows(space_.continuous) = s.t;
  a.bottomRows(1) = s.eta;
  return a;
}

GaussianPolicy::Evaluation GaussianPolicy::Evaluate(const Matrix& obs, const Matrix& u,
                                                    const Matrix& eta) const {
  const int k = space_.continuous;
  const Eigen::Index b = obs.cols();
  if (u.rows() != k || u.cols() != b) throw Error(ErrorCode::kShapeMismatch, "stored action shape");
  Evaluation e;
  const Matrix out = net_.Forward(obs, &e.cache);
  Heads h = SplitHeads(out, space_);
  e.mean = std::move(h.mean);
  e.log_std = std::move(h.log_std);
  e.std = std::move(h.std);
  e.clamped = std::move(h.clamped);
  e.u = u;
  e.t = u.array().tanh().matrix();
  e.log_prob = Vector::Zero(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    double lp = 0.0;
    for (int d = 0; d < k; ++d) {
      const double z = (u(d, j) - e.mean(d, j)) / e.std(d, j);
      const double t = e.t(d, j);
      lp += -0.5 * z * z - e.log_std(d, j) - kHalfLog2Pi - std::log(1.0 - t * t + kTanhEps);
    }
    e.log_prob[j] = lp;
  }
  if (space_.has_eta) {
    if (eta.rows() != 1 || eta.cols() != b) throw Error(ErrorCode::kShapeMismatch, "stored eta shape");
    e.logit = std::move(h.logit);
    e.eta = eta;
    for (Eigen::Index j = 0; j < b; ++j) {
      const double l = e.logit(0, j);
      e.log_prob[j] += eta(0, j) > 0.5 ? -Softplus(-l) : -Softplus(l);
    }
  }
  return e;
}

void GaussianPolicy::BackwardEvaluation(const Evaluation& e, const Vector& d_log_prob,
                                        Vector* grad) const {
  const int k = space_.continuous;
  const Eigen::Index b = e.u.cols();
  Matrix d_out = Matrix::Zero(net_.out_dim(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double g = d_log_prob[j];
    for (int d = 0; d < k; ++d) {
      const double z = (e.u(d, j) - e.mean(d, j)) / e.std(d, j);
      d_out(d, j) = g * z / e.std(d, j);
      if (e.clamped(d, j) == 0.0) d_out(k + d, j) = g * (z * z - 1.0);
    }
    if (space_.has_eta) {
      const double p = Sigmoid(e.logit(0, j));
      d_out(2 * k, j) = g * ((e.eta(0, j) > 0.5 ? 1.0 : 0.0) - p);
    }
  }
  net_.Backward(e.cache, d_out, grad);
}

Matrix GaussianPolicy::Deterministic(const Matrix& obs, Matrix* eta) const {
  const Matrix out = net_.Forward(obs);
  const int k = space_.continuous;
  if (eta) {
    if (space_.has_eta) {
      *eta = (out.middleRows(2 * k, 1).array() > 0.0).cast<double>().matrix();
    } else {
      *eta = Matrix::Zero(1, obs.cols());
    }
  }
  return out.topRows(k).array().tanh().matrix();
}

double SquashedLogDensity(double y, double mean, double log_std) {
  const double u = std::atanh(y);
  const double z = (u - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi - std::log(1.0 - y * y + kTanhEps);
}

Action ToSimAction(double t_lambda, double t_alpha, bool exact, double lambda_max) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Action a;
  a.lambda = std::clamp((t_lambda + 1.0) * 0.5, 0.0, 1.0) * lambda_max;
  a.alpha = std::clamp((t_alpha + 1.0) * 0.5, 0.0, 1.0) * kTwoPi;
  if (a.alpha >= kTwoPi) a.alpha = 0.0;
  a.eta = exact ? LocMode::kExact : LocMode::kNoisy;
  return a;
}

}  // namespace guide
