#include <doctest.h>

#include <cmath>
#include <vector>

#include "guide/core/error.hpp"
#include "guide/core/rng.hpp"
#include "guide/core/tsum.hpp"

using namespace guide;

namespace {

// Table whose text/patch vectors are unit vectors chosen so each cosine is a
// prescribed value: patch = (1, 0, ...), text_i = (rho_i, sqrt(1 - rho_i^2), 0...).
EmbeddingTable TableWithCosines(const std::vector<std::string>& keys,
                                const std::vector<double>& rho) {
  PatchGrid g{{0.0, 0.0}, 5.0, 1, 1};
  EmbeddingTable t(4, g);
  for (size_t i = 0; i < keys.size(); ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - rho[i] * rho[i]));
    t.AddText(keys[i], EmbeddingVector{{static_cast<float>(rho[i]), static_cast<float>(s), 0, 0}});
  }
  t.SetPatch(0, EmbeddingVector{{1, 0, 0, 0}});
  return t;
}

Field MakeField(const PatchGrid& g, std::vector<double> v) { return Field{g, std::move(v)}; }

std::vector<double> RandomValues(CounterRng& rng, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kRuntime;
}

}  // namespace

TEST_SUITE("tsum") {

TEST_CASE("attention over two subtasks") {
  const auto a = AttentionWeights(std::vector<double>{0.8, 0.2});
  CHECK(a[0] == doctest::Approx(0.6457).epsilon(1e-4));
  CHECK(a[1] == doctest::Approx(0.3543).epsilon(1e-4));
  TaskSpec spec;
  spec.primaries = {GoalLandmark{"dock"}, GoalLandmark{"left fountain"}};
  const auto table = TableWithCosines({"navigate to dock", "navigate to left fountain"}, {0.8, 0.2});
  const auto phi = RelevanceField(spec, table);
  CHECK(std::abs(phi.values[0] - 0.5874) < 1e-4);
}

TEST_CASE("single subtask relevance equals its cosine") {
  TaskSpec spec;
  spec.primaries = {GoalLandmark{"dock"}};
  const auto table = TableWithCosines({"navigate to dock"}, {0.37});
  CHECK(RelevanceField(spec, table).values[0] == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("equal similarities average to themselves") {
  TaskSpec spec;
  spec.primaries = {GoalLandmark{"dock"}, GoalLandmark{"left fountain"}};
  const auto table = TableWithCosines({"navigate to dock", "navigate to left fountain"}, {0.4, 0.4});
  CHECK(RelevanceField(spec, table).values[0] == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("constraint field") {
  TaskSpec spec;
  spec.primaries = {GoalLandmark{"dock"}};
  auto table = TableWithCosines({"navigate to dock"}, {0.1});
  for (double v : ConstraintField(spec, table).values) CHECK(v == 0.0);

  spec.auxiliaries = {AvoidRegion{"left half"}, AvoidRegion{"right half"}};
  table = TableWithCosines({"navigate to dock", "avoid the left half", "avoid the right half"},
                           {0.1, 0.9, -0.9});
  CHECK(std::abs(ConstraintField(spec, table).values[0] - 0.6446) < 1e-4);

  spec.auxiliaries = {AvoidRegion{"left half"}};
  CHECK(ConstraintField(spec, table).values[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("missing text key") {
  TaskSpec spec;
  spec.primaries = {GoalLandmark{"dock"}};
  const auto table = TableWithCosines({"something else"}, {0.1});
  CHECK(CodeOf([&] { RelevanceField(spec, table); }) == ErrorCode::kMissingKey);
}

TEST_CASE("attention weights sum to one and ignore shifts") {
  CounterRng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 1 + static_cast<int>(rng.Below(6));
    auto rho = RandomValues(rng, m);
    const auto a = AttentionWeights(rho);
    double sum = 0.0;
    for (double w : a) {
      CHECK(w > 0.0);
      CHECK(w <= 1.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    const double shift = rng.Uniform(-5.0, 5.0);
    for (auto& r : rho) r += shift;
    const auto b = AttentionWeights(rho);
    for (int i = 0; i < m; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
  }
}

TEST_CASE("relevance is bounded by one on mock tables") {
  const auto vocab = Vocabulary::Default();
  const auto spec = ParseTask(
      "go to the dock then go around the central fountain while avoiding the left half", vocab);
  const auto grid = GridCovering(vocab.arena(), 5.0);
  const auto table = BuildMockTable(spec, vocab, grid, 64, 3);
  for (double v : RelevanceField(spec, table).values) CHECK(std::abs(v) <= 1.0);
  for (double v : ConstraintField(spec, table).values) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("environment field") {
  PatchGrid g{{0, 0}, 1.0, 1, 1};
  EnvFeatureMap f{g, 1, {3.0}};
  CHECK(EnvField(f, {{2.0}, 1.0}).values[0] == 7.0);

  CounterRng rng(9);
  PatchGrid g2{{0, 0}, 1.0, 5, 4};
  EnvFeatureMap f2{g2, 3, {}};
  for (int i = 0; i < g2.size() * 3; ++i) f2.features.push_back(rng.Normal());
  EnvLinearModel zero{{0, 0, 0}, -2.5};
  for (double v : EnvField(f2, zero).values) CHECK(v == -2.5);
  EnvLinearModel m{{rng.Normal(), rng.Normal(), rng.Normal()}, rng.Normal()};
  const auto e = EnvField(f2, m);
  for (int j = 0; j < g2.size(); ++j) {
    double naive = m.b;
    for (int k = 0; k < 3; ++k) naive += m.w[k] * f2.features[j * 3 + k];
    CHECK(std::abs(e.values[j] - naive) < 1e-12);
  }
  CHECK(CodeOf([&] { EnvField(f2, {{1.0}, 0.0}); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("aggregate follows the weighted sum and remap") {
  PatchGrid g{{0, 0}, 1.0, 2, 1};
  const auto one = MakeField(g, {1.0, 1.0});
  const auto t = Aggregate(one, one, one, {0.5, 0.3, 0.2});
  CHECK(t.raw[0] == doctest::Approx(1.0).epsilon(1e-15));
  for (double a : t.acceptable) CHECK(a == doctest::Approx(1.05).epsilon(1e-15));

  const auto phi = MakeField(g, {0.2, -0.7});
  const auto c = MakeField(g, {0.9, 0.1});
  const auto e = MakeField(g, {4.0, 2.0});
  const auto p = Aggregate(phi, c, e, {1.0, 0.0, 0.0});
  CHECK(p.raw == phi.values);
  CHECK(p.acceptable[0] == doctest::Approx(0.1));
  CHECK(p.acceptable[1] == doctest::Approx(2.0));

  const auto other = MakeField(PatchGrid{{0, 0}, 1.0, 1, 2}, {1.0, 1.0});
  CHECK(CodeOf([&] { Aggregate(phi, other, e, {}); }) == ErrorCode::kGridMismatch);
}

TEST_CASE("aggregate is linear in the weights and antitone") {
  CounterRng rng(31);
  PatchGrid g{{0, 0}, 1.0, 6, 5};
  for (int trial = 0; trial < 50; ++trial) {
    const auto phi = MakeField(g, RandomValues(rng, g.size()));
    const auto c = MakeField(g, RandomValues(rng, g.size()));
    const auto e = MakeField(g, RandomValues(rng, g.size()));
    const ComponentWeights a{rng.Normal(), rng.Normal(), rng.Normal()};
    const ComponentWeights b{rng.Normal(), rng.Normal(), rng.Normal()};
    const ComponentWeights ab{a.w_phi + b.w_phi, a.w_c + b.w_c, a.w_e + b.w_e};
    const auto ta = Aggregate(phi, c, e, a);
    const auto tb = Aggregate(phi, c, e, b);
    const auto tab = Aggregate(phi, c, e, ab);
    for (int j = 0; j < g.size(); ++j) {
      CHECK(std::abs(tab.raw[j] - ta.raw[j] - tb.raw[j]) < 1e-12);
      CHECK(ta.acceptable[j] >= ta.u_min);
      CHECK(ta.acceptable[j] <= ta.u_max);
      for (int k = 0; k < g.size(); ++k) {
        if (ta.raw[j] > ta.raw[k]) CHECK(ta.acceptable[j] <= ta.acceptable[k]);
      }
    }
  }
}

TEST_CASE("sampling is nearest-cell and clamped") {
  PatchGrid g{{0, 0}, 5.0, 3, 2};
  std::vector<double> v = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto t = Aggregate(MakeField(g, v), MakeField(g, std::vector<double>(6, 0.0)),
                           MakeField(g, std::vector<double>(6, 0.0)), {1, 0, 0});
  for (int j = 0; j < g.size(); ++j) CHECK(Sample(t, g.CellCenter(j)) == t.acceptable[j]);
  CHECK(Sample(t, {-100, -100}) == t.acceptable[0]);
  CHECK(Sample(t, {100, 100}) == t.acceptable[5]);
  CHECK(Sample(t, {5.1, 0.2}) == Sample(t, {9.9, 4.9}));
}

TEST_CASE("environment model fitting") {
  PatchGrid g1{{0, 0}, 1.0, 2, 1};
  const auto line = FitEnvModel(EnvFeatureMap{g1, 1, {0.0, 1.0}}, std::vector<double>{1.0, 3.0});
  CHECK(line.w[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(line.b == doctest::Approx(1.0).epsilon(1e-12));

  CounterRng rng(41);
  PatchGrid g{{0, 0}, 1.0, 8, 8};
  EnvFeatureMap f{g, 3, {}};
  for (int i = 0; i < g.size() * 3; ++i) f.features.push_back(rng.Uniform(-3, 3));
  const EnvLinearModel truth{{0.7, -1.3, 2.2}, 0.4};
  const auto targets = EnvField(f, truth).values;
  const auto fit = FitEnvModel(f, targets);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(fit.w[k] - truth.w[k]) < 1e-6);
  CHECK(std::abs(fit.b - truth.b) < 1e-6);

  EnvFeatureMap flat{g, 3, std::vector<double>(g.size() * 3, 1.5)};
  const auto c = FitEnvModel(flat, std::vector<double>(g.size(), 4.25));
  for (double w : c.w) CHECK(std::abs(w) < 1e-9);
  CHECK(c.b == doctest::Approx(4.25).epsilon(1e-9));

  std::vector<double> varying(g.size());
  for (int j = 0; j < g.size(); ++j) varying[j] = j;
  CHECK(CodeOf([&] { FitEnvModel(flat, varying); }) == ErrorCode::kDegenerateSystem);
}

TEST_CASE("component weight fitting") {
  CounterRng rng(51);
  PatchGrid g{{0, 0}, 1.0, 10, 10};
  const auto phi = MakeField(g, RandomValues(rng, g.size()));
  const auto c = MakeField(g, RandomValues(rng, g.size()));
  const auto e = MakeField(g, RandomValues(rng, g.size()));
  const auto ref = Aggregate(phi, c, e, {0.5, 0.3, 0.2}).raw;
  const auto w = FitComponentWeights(phi, c, e, ref);
  CHECK(std::abs(w.w_phi - 0.5) < 1e-6);
  CHECK(std::abs(w.w_c - 0.3) < 1e-6);
  CHECK(std::abs(w.w_e - 0.2) < 1e-6);

  const auto only_phi = FitComponentWeights(phi, c, e, phi.values);
  CHECK(std::abs(only_phi.w_phi - 1.0) < 1e-6);
  CHECK(std::abs(only_phi.w_c) < 1e-6);
  CHECK(std::abs(only_phi.w_e) < 1e-6);

  std::vector<double> scaled(phi.values);
  for (auto& x : scaled) x *= 2.0;
  const auto collinear = MakeField(g, scaled);
  CHECK(CodeOf([&] { FitComponentWeights(phi, collinear, collinear, ref); }) ==
        ErrorCode::kDegenerateSystem);
}

TEST_CASE("mock pipeline marks the goal as critical") {
  const auto vocab = Vocabulary::Default();
  const auto spec = ParseTask("go to the dock", vocab);
  const auto grid = GridCovering(vocab.arena(), 5.0);
  const auto table = BuildMockTable(spec, vocab, grid, 128, 1);
  const auto t = BuildTsum(spec, table, DefaultEnvFeatures(vocab, grid), DefaultEnvModel());
  const double at_dock = Sample(t, {50.0, 2.5});
  const double far = Sample(t, {10.0, 90.0});
  CHECK(at_dock < far);
}

}  // TEST_SUITE
