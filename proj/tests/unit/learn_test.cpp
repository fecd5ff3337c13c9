#include <doctest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "guide/core/embedding.hpp"
#include "guide/core/error.hpp"
#include "guide/core/tsum.hpp"
#include "guide/learn/env.hpp"
#include "guide/learn/nn.hpp"
#include "guide/learn/policy.hpp"
#include "guide/learn/ppo.hpp"
#include "guide/learn/replay.hpp"
#include "guide/learn/sac.hpp"

using namespace guide;

namespace {

Matrix Randn(CounterRng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.Normal();
  }
  return m;
}

Matrix Uniform01(CounterRng& rng, Eigen::Index c) {
  Matrix m(1, c);
  for (Eigen::Index j = 0; j < c; ++j) m(0, j) = rng.UniformOpen();
  return m;
}

struct Toy {
  GaussianPolicy policy;
  std::vector<Mlp> critics;
  std::vector<Mlp> targets;
  Batch batch;
};

Toy MakeToy(uint64_t seed, int heads, Eigen::Index b = 5) {
  const int obs = 4;
  const ActionSpace space{2, true};
  Toy t;
  t.policy = GaussianPolicy(obs, 16, space, seed);
  for (int n = 0; n < 2 * heads; ++n) {
    t.critics.emplace_back(std::vector<int>{obs + 3, 16, 16, 1}, seed + 10 + n);
    t.targets.emplace_back(std::vector<int>{obs + 3, 16, 16, 1}, seed + 100 + n);
  }
  CounterRng rng(seed + 7);
  t.batch.obs = Randn(rng, obs, b);
  t.batch.next_obs = Randn(rng, obs, b);
  t.batch.act = Randn(rng, 3, b, 0.5);
  for (Eigen::Index j = 0; j < b; ++j) t.batch.act(2, j) = rng.Bernoulli(0.5) ? 1.0 : 0.0;
  t.batch.rew = Randn(rng, b, 1);
  t.batch.done = Vector::Zero(b);
  t.batch.done[0] = 1.0;
  if (heads > 1) {
    t.batch.mask = Matrix::Ones(heads, b);
    t.batch.mask(0, 1) = 0.0;
  }
  return t;
}

TaskInstance MockTask(const std::string& text, const SimConfig& cfg) {
  TaskInstance t;
  t.text = text;
  t.spec = ParseTask(text, cfg.vocab);
  const auto grid = GridCovering(cfg.vocab.arena(), 5.0);
  const auto table = BuildMockTable(t.spec, cfg.vocab, grid, 32, 1);
  t.tsum = std::make_shared<const Tsum>(
      BuildTsum(t.spec, table, DefaultEnvFeatures(cfg.vocab, grid), DefaultEnvModel()));
  return t;
}

SacConfig SmallConfig() {
  SacConfig cfg;
  cfg.hidden = 16;
  cfg.batch = 16;
  cfg.warmup_steps = 50;
  return cfg;
}

std::string MetricsText(const SacRun& run) {
  std::string out;
  for (const auto& m : run.episodes) out += MetricsCsvRow(m) + "\n";
  return out;
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("bellman target") {
  CHECK(std::abs(BellmanTarget(1.0, false, 2.0, 0.0, 0.99, 0.2) - 2.98) < 1e-12);
  CHECK(BellmanTarget(1.5, true, 100.0, -3.0, 0.99, 0.2) == 1.5);
  CHECK(BellmanTarget(1.5, false, 100.0, -3.0, 0.0, 0.2) == 1.5);
}

TEST_CASE("bellman target is antitone in the critics") {
  CounterRng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double q1 = rng.Normal(), q2 = rng.Normal(), lp = rng.Normal();
    const double y = BellmanTarget(0.3, false, std::min(q1, q2), lp, 0.99, 0.2);
    const double drop = rng.Uniform(0.0, 2.0);
    CHECK(BellmanTarget(0.3, false, std::min(q1 - drop, q2), lp, 0.99, 0.2) <= y);
    CHECK(BellmanTarget(0.3, false, std::min(q1, q2 - drop), lp, 0.99, 0.2) <= y);
  }
}

TEST_CASE("alpha loss") {
  const std::vector<double> lp = {-3.0};
  const auto r = AlphaLoss(lp, 0.2, -2.0);
  CHECK(std::abs(r.loss - 1.0) < 1e-12);
  CHECK(r.grad > 0.0);  // gradient descent lowers alpha
  const std::vector<double> stat = {2.0};
  CHECK(AlphaLoss(stat, 0.2, -2.0).grad == 0.0);
}

TEST_CASE("uncertainty penalized reward") {
  CHECK(std::abs(SacpReward(1.0, 0.5, 0.4) - 0.8) < 1e-12);
  CHECK(SacpReward(1.0, 0.0, 0.4) == 1.0);
  CHECK(SacpReward(1.0, 0.7, 0.0) == 1.0);
}

TEST_CASE("soft update") {
  Vector online = Vector::Constant(3, 1.0);
  Vector target = Vector::Zero(3);
  SoftUpdate(online, target, 0.005);
  CHECK(std::abs(target[0] - 0.005) < 1e-15);
  Vector t2 = Vector::Zero(3);
  SoftUpdate(online, t2, 1.0);
  CHECK(t2 == online);
  Vector t3 = Vector::Zero(1);
  Vector o3 = Vector::Constant(1, 2.0);
  for (int n = 1; n <= 200; ++n) {
    SoftUpdate(o3, t3, 0.005);
    CHECK(std::abs((2.0 - t3[0]) - 2.0 * std::pow(0.995, n)) < 1e-12);
  }
  Vector bad = Vector::Zero(2);
  CHECK_THROWS_AS(SoftUpdate(online, bad, 0.5), Error);
}

TEST_CASE("polyak blending keeps agreeing signs") {
  CounterRng rng(8);
  for (int i = 0; i < 200; ++i) {
    Vector o = Randn(rng, 10, 1).col(0).cwiseAbs();
    Vector t = Randn(rng, 10, 1).col(0).cwiseAbs();
    const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
    o *= sign;
    t *= sign;
    SoftUpdate(o, t, rng.Uniform(0.0, 1.0));
    for (Eigen::Index k = 0; k < 10; ++k) CHECK(t[k] * sign >= 0.0);
  }
}

TEST_CASE("defaults match the published hyperparameters") {
  const SacConfig c;
  CHECK(c.gamma == 0.99);
  CHECK(c.alpha_init == 0.2);
  CHECK(c.target_entropy == -2.0);
  CHECK(c.polyak == 0.005);
  CHECK(c.batch == 256);
  CHECK(c.lr_policy == 3e-4);
  CHECK(c.lr_q == 3e-4);
  CHECK(c.lr_alpha == 3e-4);
  CHECK(c.adam_beta1 == 0.9);
  CHECK(c.adam_beta2 == 0.999);
  CHECK(c.adam_eps == 1e-8);
  CHECK(c.buffer_capacity == 1000000);
  CHECK(c.hidden == 256);
  CHECK(c.sacp_zeta == 0.4);
  CHECK(c.bsac_heads == 10);
  CHECK(c.bsac_mask_prob == 0.8);
  CHECK(SacConfig::FromJson(c.ToJson()).ToJson() == c.ToJson());
  CHECK_THROWS_AS(SacConfig::FromJson({{"gamma", 1.0}}), Error);
}

TEST_CASE("gradient check detects corrupted gradients") {
  CounterRng rng(1);
  Vector w = Randn(rng, 5, 1).col(0);
  const Vector x = Randn(rng, 5, 1).col(0);
  auto linear = [&](const Vector& p) { return p.dot(x); };
  CHECK(GradientCheck(linear, w, x) < 1e-10);

  Mlp net({4, 16, 16, 1}, 9);
  const Matrix in = Randn(rng, 4, 3);
  auto loss = [&](const Vector& p) {
    Mlp copy = net;
    copy.params() = p;
    return 10.0 * copy.Forward(in).sum();
  };
  Mlp::Cache cache;
  net.Forward(in, &cache);
  Vector g = Vector::Zero(net.num_params());
  net.Backward(cache, Matrix::Constant(1, 3, 10.0), &g);
  CHECK(GradientCheck(loss, net.params(), g) < 1e-4);
  Eigen::Index k;
  g.cwiseAbs().maxCoeff(&k);
  REQUIRE(std::abs(g[k]) >= 1.0);
  g[k] *= 2.0;
  CHECK(GradientCheck(loss, net.params(), g) > 0.4);
}

TEST_CASE("mlp input gradient") {
  CounterRng rng(2);
  Mlp net({3, 8, 8, 2}, 4);
  const Matrix x = Randn(rng, 3, 1);
  const Matrix w = Randn(rng, 2, 1);
  Mlp::Cache cache;
  net.Forward(x, &cache);
  const Matrix dx = net.Backward(cache, w, nullptr, true);
  auto f = [&](const Vector& p) { return (w.transpose() * net.Forward(p)).value(); };
  CHECK(GradientCheck(f, x.col(0), dx.col(0)) < 1e-6);
}

TEST_CASE("critic loss gradients match finite differences") {
  for (int heads : {1, 3}) {
    Toy t = MakeToy(20 + heads, heads);
    CounterRng rng(31);
    const Matrix eps = Randn(rng, 2, t.batch.size());
    const Matrix uni = Uniform01(rng, t.batch.size());
    const auto base = QLoss(t.batch, t.critics, t.targets, t.policy, eps, uni, 0.5, 0.99, 0.2);
    for (size_t n = 0; n < t.critics.size(); ++n) {
      auto f = [&](const Vector& p) {
        auto c = t.critics;
        c[n].params() = p;
        return QLoss(t.batch, c, t.targets, t.policy, eps, uni, 0.5, 0.99, 0.2).loss;
      };
      CHECK(GradientCheck(f, t.critics[n].params(), base.grads[n]) < 1e-4);
    }
  }
}

TEST_CASE("critic loss fixed point and single-sample oracle") {
  Toy t = MakeToy(40, 1, 1);
  t.batch.done[0] = 1.0;
  CounterRng rng(41);
  const Matrix eps = Randn(rng, 2, 1);
  const Matrix uni = Uniform01(rng, 1);
  Matrix in(7, 1);
  in << t.batch.obs, t.batch.act;
  const double q0 = t.critics[0].Forward(in)(0, 0);
  const double q1 = t.critics[1].Forward(in)(0, 0);
  const double y = t.batch.rew[0];
  const auto r = QLoss(t.batch, t.critics, t.targets, t.policy, eps, uni, 0.5, 0.99, 0.2);
  CHECK(std::abs(r.loss - ((q0 - y) * (q0 - y) + (q1 - y) * (q1 - y))) < 1e-12);

  // Shift each critic's output bias so it predicts y exactly.
  for (int n = 0; n < 2; ++n) {
    const double q = t.critics[n].Forward(in)(0, 0);
    t.critics[n].params()[t.critics[n].num_params() - 1] += y - q;
  }
  const auto z = QLoss(t.batch, t.critics, t.targets, t.policy, eps, uni, 0.5, 0.99, 0.2);
  CHECK(z.loss < 1e-24);
  for (const auto& g : z.grads) CHECK(g.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("policy loss gradients match finite differences") {
  for (int heads : {1, 3}) {
    for (double alpha : {0.0, 0.2}) {
      Toy t = MakeToy(50 + heads, heads);
      CounterRng rng(51);
      const Matrix eps = Randn(rng, 2, t.batch.size());
      const Matrix uni = Uniform01(rng, t.batch.size());
      const auto base = PolicyLoss(t.batch, t.critics, t.policy, eps, uni, 0.7, alpha);
      auto f = [&](const Vector& p) {
        GaussianPolicy pi = t.policy;
        pi.net().params() = p;
        return PolicyLoss(t.batch, t.critics, pi, eps, uni, 0.7, alpha).loss;
      };
      CHECK(GradientCheck(f, t.policy.net().params(), base.grad) < 1e-4);
    }
  }
}

TEST_CASE("policy loss with flat critics and no entropy has no gradient") {
  Toy t = MakeToy(60, 1);
  for (auto& c : t.critics) {
    c.params().setZero();
    c.params()[c.num_params() - 1] = 3.0;
  }
  CounterRng rng(61);
  const Matrix eps = Randn(rng, 2, t.batch.size());
  const Matrix uni = Uniform01(rng, t.batch.size());
  const auto r = PolicyLoss(t.batch, t.critics, t.policy, eps, uni, 0.5, 0.0);
  CHECK(r.grad.cwiseAbs().maxCoeff() == 0.0);
  const auto a1 = PolicyLoss(t.batch, t.critics, t.policy, eps, uni, 0.5, 0.2);
  const auto a2 = PolicyLoss(t.batch, t.critics, t.policy, eps, uni, 0.5, 0.4);
  const double entropy_term1 = a1.loss + 3.0;
  const double entropy_term2 = a2.loss + 3.0;
  CHECK(std::abs(entropy_term2 - 2.0 * entropy_term1) < 1e-12);
  CHECK(entropy_term1 * entropy_term2 > 0.0);
}

TEST_CASE("stored-action log density gradient") {
  CounterRng rng(70);
  GaussianPolicy pi(4, 16, {2, true}, 71);
  const Matrix obs = Randn(rng, 4, 6);
  const Matrix u = Randn(rng, 2, 6);
  Matrix eta(1, 6);
  for (int j = 0; j < 6; ++j) eta(0, j) = j % 2;
  const Vector w = Randn(rng, 6, 1).col(0);
  const auto e = pi.Evaluate(obs, u, eta);
  Vector g = Vector::Zero(pi.net().num_params());
  pi.BackwardEvaluation(e, w, &g);
  auto f = [&](const Vector& p) {
    GaussianPolicy q = pi;
    q.net().params() = p;
    return q.Evaluate(obs, u, eta).log_prob.dot(w);
  };
  CHECK(GradientCheck(f, pi.net().params(), g) < 1e-4);
}

TEST_CASE("squashed density integrates to one") {
  for (auto [mean, log_std] : {std::pair{0.0, 0.0}, std::pair{0.4, -1.0}, std::pair{-0.7, 0.3}}) {
    const int n = 10001;
    const double lo = -1.0 + 1e-9;
    const double hi = 1.0 - 1e-9;
    const double h = (hi - lo) / (n - 1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = lo + i * h;
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      total += w * std::exp(SquashedLogDensity(y, mean, log_std));
    }
    CHECK(std::abs(total * h - 1.0) < 1e-2);
  }
}

TEST_CASE("sampled actions stay in range") {
  GaussianPolicy pi(3, 8, {2, true}, 5);
  pi.net().params() *= 40.0;
  CounterRng rng(6);
  const Matrix obs = Randn(rng, 3, 200, 5.0);
  const auto s = pi.Forward(obs, Randn(rng, 2, 200), Uniform01(rng, 200), 0.1);
  for (Eigen::Index j = 0; j < 200; ++j) {
    const Action a = ToSimAction(s.t(0, j), s.t(1, j), s.eta(0, j) > 0.5, 1.0);
    CHECK(a.lambda >= 0.0);
    CHECK(a.lambda <= 1.0);
    CHECK(a.alpha >= 0.0);
    CHECK(a.alpha < 2.0 * 3.14159265358979323846);
    CHECK(std::isfinite(s.log_prob[j]));
  }
}

TEST_CASE("replay buffer is a FIFO ring") {
  ReplayBuffer buf(1, 1, 5);
  for (int i = 0; i < 3; ++i) {
    const double o = i;
    buf.Add(std::span(&o, 1), std::span(&o, 1), i, std::span(&o, 1), false);
  }
  CHECK(buf.size() == 3);
  for (int i = 3; i < 8; ++i) {
    const double o = i;
    buf.Add(std::span(&o, 1), std::span(&o, 1), i, std::span(&o, 1), false);
  }
  CHECK(buf.size() == 5);
  for (size_t i = 0; i < 5; ++i) CHECK(buf.At(i).rew[0] == 3.0 + i);
  CounterRng rng(1);
  const auto b = buf.Sample(5, rng);
  for (Eigen::Index j = 0; j < 5; ++j) CHECK(b.rew[j] >= 3.0);
  CHECK_THROWS_AS(buf.Sample(6, rng), Error);
  ReplayBuffer small(1, 1, 10);
  CHECK_THROWS_AS(small.Sample(1, rng), Error);
}

TEST_CASE("zero training steps returns an untrained agent") {
  BanditEnv env;
  SacConfig cfg;
  cfg.hidden = 8;
  cfg.batch = 4;
  const auto run = TrainSac(env, cfg, SacVariant::kStandard, 0, 1);
  CHECK(run.episodes.empty());
  const SacAgent fresh(1, env.action_space(), cfg, 1, DeriveSeed(1, "agent"));
  CHECK(run.agent.policy().net().params() == fresh.policy().net().params());
}

TEST_CASE("identical ensemble heads have zero spread") {
  Toy t = MakeToy(80, 3);
  for (size_t n = 2; n < t.critics.size(); ++n) t.critics[n] = t.critics[n % 2];
  CounterRng rng(81);
  const auto r = PolicyLoss(t.batch, t.critics, t.policy, Randn(rng, 2, t.batch.size()),
                            Uniform01(rng, t.batch.size()), 0.5, 0.2);
  CHECK(r.head_std.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bootstrap masks never exclude a transition everywhere") {
  CounterRng rng(4);
  int ones = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto m = DrawBootstrapMask(rng, 3, 0.2);
    int n = 0;
    for (double v : m) n += v == 1.0;
    CHECK(n >= 1);
    ones += n;
  }
  CHECK(ones > 2000);
  for (double v : DrawBootstrapMask(rng, 1, 0.8)) CHECK(v == 1.0);
}

TEST_CASE("augmented observations add exactly two entries") {
  SimConfig cfg;
  const auto task = MockTask("go to the dock", cfg);
  SimEnv aug(cfg, {task}, ObsMode::kAugmented);
  SimEnv base(cfg, {task}, ObsMode::kBase);
  SimEnv unc(cfg, {task}, ObsMode::kBaseWithUncertainty);
  const int s = AsvSim::BaseObsDim(task.spec, cfg);
  CHECK(base.obs_dim() == s);
  CHECK(aug.obs_dim() == s + 2);
  CHECK(unc.obs_dim() == s + 1);
  CHECK(static_cast<int>(base.Reset(1).size()) == s);
  const auto a = aug.Reset(1);
  CHECK(static_cast<int>(a.size()) == s + 2);
  CHECK(a[s] == doctest::Approx(Sample(*task.tsum, aug.sim().estimator().pos)));
  CHECK(a[s + 1] == cfg.sigma_gps);
}

TEST_CASE("training is seed deterministic") {
  SimConfig cfg;
  cfg.max_steps = 60;
  const auto task = MockTask("go to the dock", cfg);
  for (auto variant : {SacVariant::kStandard, SacVariant::kPenalized, SacVariant::kBootstrapped}) {
    SacConfig sc = SmallConfig();
    sc.bsac_heads = 3;
    SimEnv e1(cfg, {task}, ObsMode::kAugmented);
    SimEnv e2(cfg, {task}, ObsMode::kAugmented);
    const auto r1 = TrainSac(e1, sc, variant, 400, 9);
    const auto r2 = TrainSac(e2, sc, variant, 400, 9);
    REQUIRE(r1.episodes.size() >= 5);
    CHECK(MetricsText(r1) == MetricsText(r2));
    CHECK(r1.agent.policy().net().params() == r2.agent.policy().net().params());
    SimEnv e3(cfg, {task}, ObsMode::kAugmented);
    CHECK(MetricsText(TrainSac(e3, sc, variant, 400, 10)) != MetricsText(r1));
  }
}

TEST_CASE("a single bootstrap head reproduces plain SAC") {
  SimConfig cfg;
  cfg.max_steps = 60;
  const auto task = MockTask("go to the dock", cfg);
  SacConfig sc = SmallConfig();
  sc.bsac_heads = 1;
  SimEnv e1(cfg, {task}, ObsMode::kBase);
  SimEnv e2(cfg, {task}, ObsMode::kBase);
  const auto plain = TrainSac(e1, sc, SacVariant::kStandard, 400, 5);
  const auto boot = TrainSac(e2, sc, SacVariant::kBootstrapped, 400, 5);
  CHECK(MetricsText(plain) == MetricsText(boot));
  CHECK(plain.agent.policy().net().params() == boot.agent.policy().net().params());
}

TEST_CASE("ppo defaults") {
  const PpoConfig c;
  CHECK(c.clip == 0.2);
  CHECK(c.epochs_per_update == 10);
  CHECK(c.gae_lambda == 0.95);
  CHECK(c.batch == 64);
  CHECK(c.lr == 3e-4);
  CHECK(PpoConfig::FromJson(c.ToJson()).ToJson() == c.ToJson());
  CHECK_THROWS_AS(PpoConfig::FromJson({{"clip", 0.0}}), Error);
  CHECK_THROWS_AS(PpoConfig::FromJson({{"gae_lambda", 1.5}}), Error);
}

TEST_CASE("clipped surrogate") {
  const auto s = ClippedSurrogate(1.5, 2.0, 0.2);
  CHECK(s.used_ratio == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(s.value == doctest::Approx(2.4).epsilon(1e-15));
  CHECK(s.d_ratio == 0.0);
  const auto neg = ClippedSurrogate(1.5, -2.0, 0.2);
  CHECK(neg.used_ratio == 1.5);
  CHECK(neg.value == -3.0);
  CHECK(neg.d_ratio == -2.0);
  const auto low = ClippedSurrogate(0.5, -1.0, 0.2);
  CHECK(low.used_ratio == 0.8);
  CHECK(ClippedSurrogate(1.1, 1.0, 0.2).used_ratio == 1.1);
}

TEST_CASE("gae base case and limits") {
  GaeInput one{{1.0}, {2.0}, {2.0}, {0}, {1}};
  const auto g = Gae(one, 0.99, 0.95);
  CHECK(std::abs(g.advantage[0] - 0.98) < 1e-12);
  CHECK(std::abs(g.ret[0] - 2.98) < 1e-12);

  CounterRng rng(12);
  GaeInput in;
  for (int i = 0; i < 50; ++i) {
    in.reward.push_back(rng.Normal());
    in.value.push_back(rng.Normal());
    in.next_value.push_back(rng.Normal());
    in.terminal.push_back(i % 17 == 16);
    in.cut.push_back(i % 17 == 16 || i == 49);
  }
  const auto td = Gae(in, 0.99, 0.0);
  for (int i = 0; i < 50; ++i) {
    const double delta =
        in.reward[i] + (in.terminal[i] ? 0.0 : 0.99 * in.next_value[i]) - in.value[i];
    CHECK(td.advantage[i] == delta);
  }
  const auto full = Gae(in, 0.99, 0.95);
  for (int i = 48; i >= 0; --i) {
    if (in.cut[i]) continue;
    const double delta = td.advantage[i];
    CHECK(std::abs(full.advantage[i] - (delta + 0.99 * 0.95 * full.advantage[i + 1])) < 1e-12);
  }
  GaeInput bad = one;
  bad.cut.clear();
  CHECK_THROWS_AS(Gae(bad, 0.99, 0.95), Error);
}

TEST_CASE("ppo losses match finite differences") {
  CounterRng rng(90);
  GaussianPolicy pi(4, 16, {2, true}, 91);
  const Matrix obs = Randn(rng, 4, 8);
  const Matrix u = Randn(rng, 2, 8);
  Matrix eta(1, 8);
  for (int j = 0; j < 8; ++j) eta(0, j) = j % 3 == 0;
  // Old densities near the current ones so a mix of clipped and open terms.
  Vector old = pi.Evaluate(obs, u, eta).log_prob + 0.3 * Randn(rng, 8, 1).col(0);
  const Vector adv = Randn(rng, 8, 1).col(0);
  const auto r = PpoPolicyLoss(pi, obs, u, eta, old, adv, 0.2);
  CHECK(r.clip_fraction > 0.0);
  CHECK(r.clip_fraction < 1.0);
  auto f = [&](const Vector& p) {
    GaussianPolicy q = pi;
    q.net().params() = p;
    return PpoPolicyLoss(q, obs, u, eta, old, adv, 0.2).loss;
  };
  CHECK(GradientCheck(f, pi.net().params(), r.grad) < 1e-4);

  Mlp v({4, 16, 16, 1}, 92);
  const Vector target = Randn(rng, 8, 1).col(0);
  const auto vl = ValueLoss(v, obs, target);
  auto fv = [&](const Vector& p) {
    Mlp q = v;
    q.params() = p;
    return ValueLoss(q, obs, target).loss;
  };
  CHECK(GradientCheck(fv, v.params(), vl.grad) < 1e-4);
}

TEST_CASE("ppo training is seed deterministic") {
  SimConfig cfg;
  cfg.max_steps = 60;
  const auto task = MockTask("go to the dock", cfg);
  PpoConfig pc;
  pc.hidden = 16;
  pc.rollout = 128;
  pc.epochs_per_update = 2;
  SimEnv e1(cfg, {task}, ObsMode::kAugmented);
  SimEnv e2(cfg, {task}, ObsMode::kAugmented);
  const auto r1 = TrainPpo(e1, pc, 400, 3);
  const auto r2 = TrainPpo(e2, pc, 400, 3);
  REQUIRE(!r1.episodes.empty());
  std::string a, b;
  for (const auto& m : r1.episodes) a += MetricsCsvRow(m);
  for (const auto& m : r2.episodes) b += MetricsCsvRow(m);
  CHECK(a == b);
  CHECK(r1.policy.net().params() == r2.policy.net().params());
  CHECK(TrainPpo(e1, pc, 0, 3).episodes.empty());
}

TEST_CASE("bandit optimum is recovered") {
  SacConfig cfg;
  cfg.hidden = 32;
  cfg.batch = 64;
  cfg.warmup_steps = 500;
  cfg.target_entropy = -1.0;
  cfg.lr_policy = cfg.lr_q = cfg.lr_alpha = 1e-3;
  for (uint64_t seed : {1u, 2u, 3u}) {
    BanditEnv env(0.3);
    const auto run = TrainSac(env, cfg, SacVariant::kStandard, 5000, seed);
    const std::vector<double> obs = {1.0};
    const double a = GreedyAction(run.agent.policy(), obs, nullptr)[0];
    CAPTURE(seed);
    CHECK(std::abs(a - 0.3) < 0.1);
  }
}

}  // TEST_SUITE
