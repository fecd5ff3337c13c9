#include "guide/learn/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "guide/core/error.hpp"

namespace guide {

using nlohmann::json;

void PpoConfig::Validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, m); };
  if (!(gamma >= 0.0 && gamma < 1.0)) bad("gamma must lie in [0, 1)");
  if (!(clip > 0.0)) bad("clip must be positive");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) bad("gae_lambda must lie in [0, 1]");
  if (epochs_per_update < 1) bad("epochs_per_update must be at least 1");
  if (batch < 1) bad("batch must be at least 1");
  if (rollout < batch) bad("rollout must hold at least one batch");
  if (hidden < 1) bad("hidden must be at least 1");
  if (!(lr > 0.0)) bad("lr must be positive");
}

json PpoConfig::ToJson() const {
  return {{"gamma", gamma},
          {"clip", clip},
          {"epochs_per_update", epochs_per_update},
          {"gae_lambda", gae_lambda},
          {"batch", batch},
          {"lr", lr},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"rollout", rollout},
          {"hidden", hidden},
          {"normalize_advantages", normalize_advantages}};
}

PpoConfig PpoConfig::FromJson(const json& j) {
  PpoConfig c;
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "ppo config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "clip") c.clip = value.get<double>();
      else if (key == "epochs_per_update") c.epochs_per_update = value.get<int>();
      else if (key == "gae_lambda") c.gae_lambda = value.get<double>();
      else if (key == "batch") c.batch = value.get<int>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_eps") c.adam_eps = value.get<double>();
      else if (key == "rollout") c.rollout = value.get<int>();
      else if (key == "hidden") c.hidden = value.get<int>();
      else if (key == "normalize_advantages") c.normalize_advantages = value.get<bool>();
      else throw Error(ErrorCode::kInvalidConfig, "unknown ppo key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("ppo config: ") + e.what());
  }
  c.Validate();
  return c;
}

GaeResult Gae(const GaeInput& in, double gamma, double lambda) {
  const size_t n = in.reward.size();
  if (in.value.size() != n || in.next_value.size() != n || in.terminal.size() != n ||
      in.cut.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "GAE inputs differ in length");
  }
  GaeResult r;
  r.advantage.assign(n, 0.0);
  r.ret.assign(n, 0.0);
  double next = 0.0;
  for (size_t i = n; i-- > 0;) {
    const double boot = in.terminal[i] ? 0.0 : gamma * in.next_value[i];
    const double delta = in.reward[i] + boot - in.value[i];
    const double carry = in.cut[i] ? 0.0 : gamma * lambda * next;
    r.advantage[i] = delta + carry;
    r.ret[i] = r.advantage[i] + in.value[i];
    next = r.advantage[i];
  }
  return r;
}

SurrogateTerm ClippedSurrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  const double raw = ratio * advantage;
  const double cut = clipped * advantage;
  if (raw <= cut) return {raw, advantage, ratio};
  return {cut, 0.0, clipped};
}

PpoLossResult PpoPolicyLoss(const GaussianPolicy& policy, const Matrix& obs, const Matrix& u,
                            const Matrix& eta, const Vector& old_log_prob,
                            const Vector& advantage, double clip) {
  const Eigen::Index b = obs.cols();
  if (old_log_prob.size() != b || advantage.size() != b) {
    throw Error(ErrorCode::kShapeMismatch, "PPO batch vectors differ in length");
  }
  const auto e = policy.Evaluate(obs, u, eta);
  PpoLossResult r;
  Vector d_log_prob(b);
  int clipped = 0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const double ratio = std::exp(e.log_prob[j] - old_log_prob[j]);
    const auto s = ClippedSurrogate(ratio, advantage[j], clip);
    r.loss -= s.value / b;
    d_log_prob[j] = -s.d_ratio * ratio / b;
    clipped += s.used_ratio != ratio;
  }
  r.clip_fraction = static_cast<double>(clipped) / b;
  r.grad = Vector::Zero(policy.net().num_params());
  policy.BackwardEvaluation(e, d_log_prob, &r.grad);
  return r;
}

ValueLossResult ValueLoss(const Mlp& value, const Matrix& obs, const Vector& target) {
  const Eigen::Index b = obs.cols();
  if (target.size() != b) throw Error(ErrorCode::kShapeMismatch, "value targets differ in length");
  Mlp::Cache cache;
  const Matrix v = value.Forward(obs, &cache);
  const Matrix diff = v - target.transpose();
  ValueLossResult r;
  r.loss = diff.squaredNorm() / b;
  r.grad = Vector::Zero(value.num_params());
  value.Backward(cache, 2.0 * diff / b, &r.grad);
  return r;
}

namespace {

Matrix Columns(const Matrix& m, std::span<const size_t> idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) out.col(j) = m.col(idx[j]);
  return out;
}

Vector Entries(const Vector& v, std::span<const size_t> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) out[j] = v[idx[j]];
  return out;
}

}  // namespace

PpoRun TrainPpo(Env& env, const PpoConfig& cfg, long steps, uint64_t seed,
                const MetricsCallback& on_episode) {
  cfg.Validate();
  const ActionSpace space = env.action_space();
  const int obs_dim = env.obs_dim();
  const int k = space.continuous;
  PpoRun run{GaussianPolicy(obs_dim, cfg.hidden, space, DeriveSeed(seed, "policy")),
             Mlp({obs_dim, cfg.hidden, cfg.hidden, 1}, DeriveSeed(seed, "value")),
             {}};
  const AdamConfig acfg{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  Adam policy_opt(run.policy.net().num_params(), acfg);
  Adam value_opt(run.value.num_params(), acfg);
  CounterRng rng(DeriveSeed(seed, "trainer"));

  const int n = cfg.rollout;
  Matrix obs_buf(obs_dim, n), next_buf(obs_dim, n), u_buf(k, n), eta_buf(1, n);
  GaeInput gae;
  std::vector<size_t> order(n);

  long episode = 0;
  std::vector<double> obs = env.Reset(DeriveSeed(seed, fmt::format("episode:{}", episode)));
  double ret = 0.0;
  int fixes = 0;
  double last_policy_loss = 0.0;
  double last_value_loss = 0.0;
  long step = 0;

  while (step < steps) {
    const int len = static_cast<int>(std::min<long>(n, steps - step));
    gae.reward.assign(len, 0.0);
    gae.terminal.assign(len, 0);
    gae.cut.assign(len, 0);
    std::vector<EpisodeMetrics> finished;
    for (int i = 0; i < len; ++i, ++step) {
      const Matrix x = Eigen::Map<const Matrix>(obs.data(), obs_dim, 1);
      Matrix eps(k, 1);
      for (int d = 0; d < k; ++d) eps(d, 0) = rng.Normal();
      Matrix uni(space.has_eta ? 1 : 0, 1);
      if (space.has_eta) uni(0, 0) = rng.UniformOpen();
      const auto s = run.policy.Forward(x, eps, uni, 1.0);
      const bool eta = space.has_eta && s.eta(0, 0) > 0.5;
      obs_buf.col(i) = x;
      u_buf.col(i) = s.u;
      eta_buf(0, i) = eta ? 1.0 : 0.0;
      std::vector<double> t(k);
      for (int d = 0; d < k; ++d) t[d] = s.t(d, 0);
      const EnvStep st = env.Step(t, eta);
      gae.reward[i] = st.reward;
      gae.terminal[i] = st.terminal;
      gae.cut[i] = st.done() || i == len - 1;
      next_buf.col(i) = Eigen::Map<const Matrix>(st.obs.data(), obs_dim, 1);
      ret += st.reward;
      fixes += st.exact_fix ? 1 : 0;
      obs = st.obs;
      if (st.done()) {
        EpisodeMetrics m;
        m.step = step + 1;
        m.episode = episode;
        m.ret = ret;
        m.tcr = 100.0 * st.completed_fraction;
        m.exact_fixes = fixes;
        finished.push_back(m);
        ++episode;
        obs = env.Reset(DeriveSeed(seed, fmt::format("episode:{}", episode)));
        ret = 0.0;
        fixes = 0;
      }
    }

    const Matrix x = obs_buf.leftCols(len);
    const Matrix u = u_buf.leftCols(len);
    const Matrix eta = eta_buf.leftCols(len);
    const Matrix v = run.value.Forward(x);
    const Matrix v_next = run.value.Forward(next_buf.leftCols(len));
    gae.value.assign(v.data(), v.data() + len);
    gae.next_value.assign(v_next.data(), v_next.data() + len);
    const GaeResult g = Gae(gae, cfg.gamma, cfg.gae_lambda);
    Vector adv = Eigen::Map<const Vector>(g.advantage.data(), len);
    const Vector target = Eigen::Map<const Vector>(g.ret.data(), len);
    if (cfg.normalize_advantages && len > 1) {
      const double mean = adv.mean();
      const double sd = std::sqrt((adv.array() - mean).square().mean());
      adv = (adv.array() - mean) / (sd + 1e-8);
    }
    const Vector old_log_prob = run.policy.Evaluate(x, u, eta).log_prob;

    order.resize(len);
    double p_sum = 0.0;
    double v_sum = 0.0;
    int batches = 0;
    for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
      std::iota(order.begin(), order.end(), size_t{0});
      for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
      for (int start = 0; start < len; start += cfg.batch) {
        const std::span<const size_t> idx(order.data() + start,
                                          std::min<size_t>(cfg.batch, len - start));
        const Matrix bx = Columns(x, idx);
        const auto pl = PpoPolicyLoss(run.policy, bx, Columns(u, idx), Columns(eta, idx),
                                      Entries(old_log_prob, idx), Entries(adv, idx), cfg.clip);
        policy_opt.Step(run.policy.net().params(), pl.grad);
        const auto vl = ValueLoss(run.value, bx, Entries(target, idx));
        value_opt.Step(run.value.params(), vl.grad);
        p_sum += pl.loss;
        v_sum += vl.loss;
        ++batches;
      }
    }
    last_policy_loss = batches ? p_sum / batches : 0.0;
    last_value_loss = batches ? v_sum / batches : 0.0;
    for (auto& m : finished) {
      m.policy_loss = last_policy_loss;
      m.q_loss = last_value_loss;
      run.episodes.push_back(m);
      if (on_episode) on_episode(m);
    }
  }
  return run;
}

}  // namespace guide
