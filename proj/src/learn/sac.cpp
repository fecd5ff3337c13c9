#include "guide/learn/sac.hpp"

#include <cmath>

#include <fmt/format.h>

#include "guide/core/error.hpp"

namespace guide {
namespace {

Matrix Stack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Matrix NormalNoise(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.Normal();
  }
  return m;
}

Matrix UniformNoise(CounterRng& rng, bool has_eta, Eigen::Index cols) {
  if (!has_eta) return Matrix(0, cols);
  Matrix m(1, cols);
  for (Eigen::Index j = 0; j < cols; ++j) m(0, j) = rng.UniformOpen();
  return m;
}

int HeadCount(const std::vector<Mlp>& critics) {
  if (critics.empty() || critics.size() % 2 != 0) {
    throw Error(ErrorCode::kShapeMismatch, "critics must come in pairs");
  }
  return static_cast<int>(critics.size() / 2);
}

void CheckCriticInput(const Mlp& critic, const Matrix& input) {
  if (critic.in_dim() != input.rows() || critic.out_dim() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("critic expects {} inputs, batch provides {}", critic.in_dim(),
                            input.rows()));
  }
}

template <typename T>
void Read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("sac.{}: {}", key, e.what()));
  }
}

}  // namespace

void SacConfig::Validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, m); };
  if (!(gamma >= 0.0 && gamma < 1.0)) bad("gamma must lie in [0, 1)");
  if (!(polyak > 0.0 && polyak <= 1.0)) bad("polyak must lie in (0, 1]");
  if (!(alpha_init > 0.0)) bad("alpha_init must be positive");
  if (batch <= 0 || hidden <= 0 || updates_per_step < 0 || warmup_steps < 0) {
    bad("batch, hidden, updates_per_step and warmup_steps must be positive");
  }
  if (buffer_capacity < static_cast<size_t>(batch)) bad("buffer smaller than a batch");
  if (!(lr_policy > 0 && lr_q > 0 && lr_alpha > 0)) bad("learning rates must be positive");
  if (!(eta_temp_start > 0 && eta_temp_end > 0)) bad("eta temperatures must be positive");
  if (bsac_heads < 1) bad("bsac_heads must be at least 1");
  if (!(bsac_mask_prob > 0.0 && bsac_mask_prob <= 1.0)) bad("bsac_mask_prob must lie in (0, 1]");
}

double SacConfig::EtaTemperature(long step) const {
  if (eta_anneal_steps <= 0) return eta_temp_end;
  const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(eta_anneal_steps));
  return eta_temp_start + (eta_temp_end - eta_temp_start) * f;
}

nlohmann::json SacConfig::ToJson() const {
  return {{"gamma", gamma},
          {"alpha_init", alpha_init},
          {"target_entropy", target_entropy},
          {"polyak", polyak},
          {"batch", batch},
          {"lr_policy", lr_policy},
          {"lr_q", lr_q},
          {"lr_alpha", lr_alpha},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"buffer_capacity", buffer_capacity},
          {"hidden", hidden},
          {"warmup_steps", warmup_steps},
          {"updates_per_step", updates_per_step},
          {"eta_temp_start", eta_temp_start},
          {"eta_temp_end", eta_temp_end},
          {"eta_anneal_steps", eta_anneal_steps},
          {"sacp_zeta", sacp_zeta},
          {"bsac_heads", bsac_heads},
          {"bsac_mask_prob", bsac_mask_prob},
          {"bsac_pessimism", bsac_pessimism}};
}

SacConfig SacConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "sac config must be an object");
  SacConfig c;
  Read(j, "gamma", c.gamma);
  Read(j, "alpha_init", c.alpha_init);
  Read(j, "target_entropy", c.target_entropy);
  Read(j, "polyak", c.polyak);
  Read(j, "batch", c.batch);
  Read(j, "lr_policy", c.lr_policy);
  Read(j, "lr_q", c.lr_q);
  Read(j, "lr_alpha", c.lr_alpha);
  Read(j, "adam_beta1", c.adam_beta1);
  Read(j, "adam_beta2", c.adam_beta2);
  Read(j, "adam_eps", c.adam_eps);
  Read(j, "buffer_capacity", c.buffer_capacity);
  Read(j, "hidden", c.hidden);
  Read(j, "warmup_steps", c.warmup_steps);
  Read(j, "updates_per_step", c.updates_per_step);
  Read(j, "eta_temp_start", c.eta_temp_start);
  Read(j, "eta_temp_end", c.eta_temp_end);
  Read(j, "eta_anneal_steps", c.eta_anneal_steps);
  Read(j, "sacp_zeta", c.sacp_zeta);
  Read(j, "bsac_heads", c.bsac_heads);
  Read(j, "bsac_mask_prob", c.bsac_mask_prob);
  Read(j, "bsac_pessimism", c.bsac_pessimism);
  c.Validate();
  return c;
}

double BellmanTarget(double r, bool done, double min_q_next, double log_pi_next, double gamma,
                     double alpha) {
  if (done) return r;
  return r + gamma * (min_q_next - alpha * log_pi_next);
}

double SacpReward(double r_base, double u, double zeta) { return r_base - zeta * u; }

AlphaLossResult AlphaLoss(std::span<const double> log_pis, double alpha, double target_entropy) {
  if (log_pis.empty()) return {};
  double mean = 0.0;
  for (double lp : log_pis) mean += lp + target_entropy;
  mean /= static_cast<double>(log_pis.size());
  return {-alpha * mean, -mean};
}

QLossResult QLoss(const Batch& batch, const std::vector<Mlp>& critics,
                  const std::vector<Mlp>& target_critics, const GaussianPolicy& policy,
                  const Matrix& next_eps, const Matrix& next_uniform, double temperature,
                  double gamma, double alpha) {
  const int heads = HeadCount(critics);
  if (target_critics.size() != critics.size()) {
    throw Error(ErrorCode::kShapeMismatch, "target critics do not match the critics");
  }
  const Eigen::Index b = batch.size();
  if (batch.mask.size() != 0 && (batch.mask.rows() != heads || batch.mask.cols() != b)) {
    throw Error(ErrorCode::kShapeMismatch, "bootstrap mask does not match the heads");
  }
  const auto next = policy.Forward(batch.next_obs, next_eps, next_uniform, temperature);
  const Matrix next_in = Stack(batch.next_obs, policy.CriticAction(next));
  const Matrix in = Stack(batch.obs, batch.act);

  QLossResult out;
  out.targets.resize(heads, b);
  for (int k = 0; k < heads; ++k) {
    CheckCriticInput(target_critics[2 * k], next_in);
    const Matrix q1 = target_critics[2 * k].Forward(next_in);
    const Matrix q2 = target_critics[2 * k + 1].Forward(next_in);
    for (Eigen::Index j = 0; j < b; ++j) {
      out.targets(k, j) = BellmanTarget(batch.rew[j], batch.done[j] > 0.5,
                                        std::min(q1(0, j), q2(0, j)), next.log_prob[j], gamma,
                                        alpha);
    }
  }
  for (size_t n = 0; n < critics.size(); ++n) {
    const int k = static_cast<int>(n / 2);
    CheckCriticInput(critics[n], in);
    Mlp::Cache cache;
    const Matrix q = critics[n].Forward(in, &cache);
    Vector w = batch.mask.size() ? Vector(batch.mask.row(k).transpose()) : Vector::Ones(b);
    const double denom = std::max(1.0, w.sum());
    Matrix dy(1, b);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < b; ++j) {
      const double r = q(0, j) - out.targets(k, j);
      loss += w[j] * r * r;
      dy(0, j) = 2.0 * w[j] * r / denom;
    }
    out.loss += loss / denom;
    Vector g = Vector::Zero(critics[n].num_params());
    critics[n].Backward(cache, dy, &g);
    out.grads.push_back(std::move(g));
  }
  return out;
}

PolicyLossResult PolicyLoss(const Batch& batch, const std::vector<Mlp>& critics,
                            const GaussianPolicy& policy, const Matrix& eps,
                            const Matrix& uniform, double temperature, double alpha,
                            double pessimism) {
  const int heads = HeadCount(critics);
  const Eigen::Index b = batch.size();
  const auto s = policy.Forward(batch.obs, eps, uniform, temperature);
  const Matrix in = Stack(batch.obs, policy.CriticAction(s));
  const Eigen::Index obs_dim = batch.obs.rows();
  const int act_dim = policy.space().critic_dim();

  std::vector<Mlp::Cache> caches(critics.size());
  std::vector<Matrix> q(critics.size());
  for (size_t n = 0; n < critics.size(); ++n) {
    CheckCriticInput(critics[n], in);
    q[n] = critics[n].Forward(in, &caches[n]);
  }
  Matrix v(heads, b);
  for (int k = 0; k < heads; ++k) v.row(k) = q[2 * k].cwiseMin(q[2 * k + 1]);

  PolicyLossResult out;
  out.log_prob = s.log_prob;
  out.head_std = Matrix::Zero(1, b);
  Matrix d_v(heads, b);
  const double inv_b = 1.0 / static_cast<double>(b);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const double mean = v.col(j).mean();
    double var = 0.0;
    for (int k = 0; k < heads; ++k) var += (v(k, j) - mean) * (v(k, j) - mean);
    const double sd = std::sqrt(var / heads);
    out.head_std(0, j) = sd;
    const double value = mean - pessimism * sd;
    loss += alpha * s.log_prob[j] - value;
    for (int k = 0; k < heads; ++k) {
      double dvalue = 1.0 / heads;
      if (sd > 0.0) dvalue -= pessimism * (v(k, j) - mean) / (heads * sd);
      d_v(k, j) = -dvalue * inv_b;
    }
  }
  out.loss = loss * inv_b;

  Matrix d_act = Matrix::Zero(act_dim, b);
  for (int k = 0; k < heads; ++k) {
    for (int i = 0; i < 2; ++i) {
      const size_t n = static_cast<size_t>(2 * k + i);
      Matrix dy = Matrix::Zero(1, b);
      bool any = false;
      for (Eigen::Index j = 0; j < b; ++j) {
        const bool chosen = i == 0 ? q[2 * k](0, j) <= q[2 * k + 1](0, j)
                                   : q[2 * k + 1](0, j) < q[2 * k](0, j);
        if (chosen) {
          dy(0, j) = d_v(k, j);
          any = true;
        }
      }
      if (!any) continue;
      const Matrix d_in = critics[n].Backward(caches[n], dy, nullptr, true);
      d_act += d_in.bottomRows(act_dim);
    }
  }
  (void)obs_dim;
  const int kc = policy.space().continuous;
  const Matrix d_t = d_act.topRows(kc);
  const Matrix d_eta = policy.space().has_eta ? Matrix(d_act.bottomRows(1)) : Matrix(0, b);
  const Vector d_logp = Vector::Constant(b, alpha * inv_b);
  out.grad = Vector::Zero(policy.net().num_params());
  policy.Backward(s, d_t, d_eta, d_logp, &out.grad);
  return out;
}

std::string MetricsCsvHeader() {
  return "step,episode,return,tcr,alpha,q_loss,policy_loss,exact_fix_count";
}

std::string MetricsCsvRow(const EpisodeMetrics& m) {
  return fmt::format("{},{},{:.6f},{:.4f},{:.6f},{:.6f},{:.6f},{}", m.step, m.episode, m.ret,
                     m.tcr, m.alpha, m.q_loss, m.policy_loss, m.exact_fixes);
}

SacAgent::SacAgent(int obs_dim, ActionSpace space, const SacConfig& cfg, int heads,
                   uint64_t seed)
    : cfg_(cfg), heads_(heads) {
  cfg_.Validate();
  if (heads < 1) throw Error(ErrorCode::kInvalidConfig, "at least one critic head is required");
  policy_ = GaussianPolicy(obs_dim, cfg.hidden, space, DeriveSeed(seed, "policy"));
  const AdamConfig base{0.0, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  AdamConfig pa = base;
  pa.lr = cfg.lr_policy;
  policy_opt_ = Adam(policy_.net().num_params(), pa);
  AdamConfig qa = base;
  qa.lr = cfg.lr_q;
  for (int n = 0; n < 2 * heads; ++n) {
    critics_.emplace_back(std::vector<int>{obs_dim + space.critic_dim(), cfg.hidden, cfg.hidden, 1},
                          DeriveSeed(seed, fmt::format("critic:{}", n)));
    critic_opts_.emplace_back(critics_.back().num_params(), qa);
  }
  targets_ = critics_;
  log_alpha_ = std::log(cfg.alpha_init);
  AdamConfig aa = base;
  aa.lr = cfg.lr_alpha;
  alpha_opt_ = Adam(1, aa);
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

SacAgent::UpdateStats SacAgent::Update(const Batch& batch, CounterRng& rng, double temperature) {
  const auto& space = policy_.space();
  const Eigen::Index b = batch.size();
  UpdateStats stats;
  const double a = alpha();

  const Matrix next_eps = NormalNoise(rng, space.continuous, b);
  const Matrix next_u = UniformNoise(rng, space.has_eta, b);
  const auto q = QLoss(batch, critics_, targets_, policy_, next_eps, next_u, temperature,
                       cfg_.gamma, a);
  for (size_t n = 0; n < critics_.size(); ++n) critic_opts_[n].Step(critics_[n].params(), q.grads[n]);
  stats.q_loss = q.loss;

  const Matrix eps = NormalNoise(rng, space.continuous, b);
  const Matrix u = UniformNoise(rng, space.has_eta, b);
  const auto p = PolicyLoss(batch, critics_, policy_, eps, u, temperature, a, cfg_.bsac_pessimism);
  policy_opt_.Step(policy_.net().params(), p.grad);
  stats.policy_loss = p.loss;
  stats.head_std = p.head_std.mean();

  const auto al = AlphaLoss(std::span<const double>(p.log_prob.data(), p.log_prob.size()), a,
                            cfg_.target_entropy);
  Vector la(1);
  la[0] = log_alpha_;
  Vector g(1);
  g[0] = al.grad * a;
  alpha_opt_.Step(la, g);
  log_alpha_ = la[0];

  for (size_t n = 0; n < critics_.size(); ++n) {
    SoftUpdate(critics_[n].params(), targets_[n].params(), cfg_.polyak);
  }
  return stats;
}

std::vector<double> GreedyAction(const GaussianPolicy& policy, std::span<const double> obs,
                                 bool* eta) {
  const Matrix x = Eigen::Map<const Matrix>(obs.data(), static_cast<Eigen::Index>(obs.size()), 1);
  Matrix e;
  const Matrix t = policy.Deterministic(x, &e);
  if (eta) *eta = e(0, 0) > 0.5;
  return std::vector<double>(t.data(), t.data() + t.size());
}

std::vector<double> DrawBootstrapMask(CounterRng& rng, int heads, double p) {
  std::vector<double> mask(heads, 0.0);
  do {
    for (auto& m : mask) m = rng.Bernoulli(p) ? 1.0 : 0.0;
  } while (std::all_of(mask.begin(), mask.end(), [](double m) { return m == 0.0; }));
  return mask;
}

SacRun TrainSac(Env& env, const SacConfig& cfg, SacVariant variant, long steps, uint64_t seed,
                const MetricsCallback& on_episode) {
  cfg.Validate();
  const ActionSpace space = env.action_space();
  const bool boot = variant == SacVariant::kBootstrapped;
  const int heads = boot ? cfg.bsac_heads : 1;
  SacRun run{SacAgent(env.obs_dim(), space, cfg, heads, DeriveSeed(seed, "agent")), {}};
  SacAgent& agent = run.agent;
  CounterRng rng(DeriveSeed(seed, "trainer"));
  CounterRng mask_rng(DeriveSeed(seed, "masks"));
  ReplayBuffer buffer(env.obs_dim(), space.critic_dim(), cfg.buffer_capacity, boot ? heads : 0);

  long episode = 0;
  std::vector<double> obs = env.Reset(DeriveSeed(seed, fmt::format("episode:{}", episode)));
  double ret = 0.0;
  double q_sum = 0.0;
  double p_sum = 0.0;
  double std_sum = 0.0;
  long updates = 0;
  int fixes = 0;
  std::vector<double> act(space.critic_dim());
  std::vector<double> mask(boot ? heads : 0);

  for (long step = 0; step < steps; ++step) {
    bool eta = false;
    if (step < cfg.warmup_steps) {
      for (int d = 0; d < space.continuous; ++d) act[d] = rng.Uniform(-1.0, 1.0);
      if (space.has_eta) eta = rng.Bernoulli(0.5);
    } else {
      const Matrix x = Eigen::Map<const Matrix>(obs.data(), env.obs_dim(), 1);
      const auto s = agent.policy().Forward(x, NormalNoise(rng, space.continuous, 1),
                                            UniformNoise(rng, space.has_eta, 1),
                                            cfg.EtaTemperature(step));
      for (int d = 0; d < space.continuous; ++d) act[d] = s.t(d, 0);
      if (space.has_eta) eta = s.eta(0, 0) > 0.5;
    }
    if (space.has_eta) act[space.continuous] = eta ? 1.0 : 0.0;
    const EnvStep st = env.Step(std::span<const double>(act.data(), space.continuous), eta);
    const double stored =
        variant == SacVariant::kPenalized ? SacpReward(st.reward, st.u, cfg.sacp_zeta) : st.reward;
    if (boot) mask = DrawBootstrapMask(mask_rng, heads, cfg.bsac_mask_prob);
    buffer.Add(obs, act, stored, st.obs, st.terminal, mask);
    ret += st.reward;
    fixes += st.exact_fix ? 1 : 0;
    obs = st.obs;

    if (step + 1 > cfg.warmup_steps && buffer.size() >= static_cast<size_t>(cfg.batch)) {
      for (int k = 0; k < cfg.updates_per_step; ++k) {
        const Batch batch = buffer.Sample(cfg.batch, rng);
        const auto u = agent.Update(batch, rng, cfg.EtaTemperature(step));
        q_sum += u.q_loss;
        p_sum += u.policy_loss;
        std_sum += u.head_std;
        ++updates;
      }
    }

    if (st.done()) {
      EpisodeMetrics m;
      m.step = step + 1;
      m.episode = episode;
      m.ret = ret;
      m.tcr = 100.0 * st.completed_fraction;
      m.alpha = agent.alpha();
      m.q_loss = updates ? q_sum / updates : 0.0;
      m.policy_loss = updates ? p_sum / updates : 0.0;
      m.head_std = updates ? std_sum / updates : 0.0;
      m.exact_fixes = fixes;
      run.episodes.push_back(m);
      if (on_episode) on_episode(m);
      ++episode;
      obs = env.Reset(DeriveSeed(seed, fmt::format("episode:{}", episode)));
      ret = q_sum = p_sum = std_sum = 0.0;
      updates = 0;
      fixes = 0;
    }
  }
  return run;
}

}  // namespace guide
