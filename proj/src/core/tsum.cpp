#include "guide/core/tsum.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "guide/core/error.hpp"

namespace guide {

std::vector<double> AttentionWeights(std::span<const double> rho) {
  std::vector<double> w(rho.size());
  if (rho.empty()) return w;
  const double m = *std::max_element(rho.begin(), rho.end());
  double sum = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) {
    w[i] = std::exp(rho[i] - m);
    sum += w[i];
  }
  for (auto& x : w) x /= sum;
  return w;
}

namespace {

Field AttentionField(const std::vector<std::string>& keys,
                     const EmbeddingTable& table) {
  Field out{table.grid(), std::vector<double>(table.grid().size(), 0.0)};
  if (keys.empty()) return out;
  std::vector<const EmbeddingVector*> texts;
  for (const auto& k : keys) texts.push_back(&table.Text(k));
  std::vector<double> rho(keys.size());
  for (int j = 0; j < out.grid.size(); ++j) {
    const auto& patch = table.Patch(j);
    for (size_t i = 0; i < texts.size(); ++i) rho[i] = Cosine(*texts[i], patch);
    const auto alpha = AttentionWeights(rho);
    double v = 0.0;
    for (size_t i = 0; i < rho.size(); ++i) v += alpha[i] * rho[i];
    out.values[j] = v;
  }
  return out;
}

void CheckSameGrid(const PatchGrid& a, const PatchGrid& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::kGridMismatch, fmt::format("{}: fields use different grids", what));
  }
}

}  // namespace

Field RelevanceField(const TaskSpec& spec, const EmbeddingTable& table) {
  std::vector<std::string> keys;
  for (const auto& s : spec.primaries) keys.push_back(CanonicalText(s));
  return AttentionField(keys, table);
}

Field ConstraintField(const TaskSpec& spec, const EmbeddingTable& table) {
  std::vector<std::string> keys;
  for (const auto& c : spec.auxiliaries) keys.push_back(CanonicalText(c));
  return AttentionField(keys, table);
}

Field EnvField(const EnvFeatureMap& fmap, const EnvLinearModel& model) {
  if (static_cast<int>(model.w.size()) != fmap.p) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("env model has {} weights, feature map has p={}",
                            model.w.size(), fmap.p));
  }
  if (fmap.features.size() != static_cast<size_t>(fmap.grid.size()) * fmap.p) {
    throw Error(ErrorCode::kDimensionMismatch, "feature map size mismatch");
  }
  Field out{fmap.grid, std::vector<double>(fmap.grid.size())};
  for (int j = 0; j < fmap.grid.size(); ++j) {
    const auto f = fmap.At(j);
    double v = model.b;
    for (int k = 0; k < fmap.p; ++k) v += model.w[k] * f[k];
    out.values[j] = v;
  }
  return out;
}

EnvFeatureMap DefaultEnvFeatures(const Vocabulary& vocab, const PatchGrid& grid) {
  EnvFeatureMap fmap{grid, 3, std::vector<double>(grid.size() * 3)};
  const Rect& arena = vocab.arena();
  for (int j = 0; j < grid.size(); ++j) {
    const Vec2 c = grid.CellCenter(j);
    // Synthetic bathymetry: shallow at the shoreline, 8 m in open water.
    const double shore = std::min({c.x - arena.x0, arena.x1 - c.x, c.y - arena.y0,
                                   arena.y1 - c.y});
    const double depth = std::clamp(0.4 * shore, 0.0, 8.0);
    double proximity = 0.0;
    double disturbance = 0.0;
    for (const auto& f : vocab.features()) {
      if (!f.obstacle) continue;
      const double d = DistanceTo(f.geometry, c);
      proximity = std::max(proximity, 1.0 / std::max(d, 1.0));
      if (f.disturbance_radius > 0.0) {
        const double reach = f.disturbance_radius;
        disturbance = std::max(disturbance, std::clamp(1.0 - d / reach, 0.0, 1.0));
      }
    }
    fmap.features[j * 3 + 0] = depth;
    fmap.features[j * 3 + 1] = proximity;
    fmap.features[j * 3 + 2] = disturbance;
  }
  return fmap;
}

EnvLinearModel DefaultEnvModel() { return {{0.0, 2.0, 1.0}, 0.0}; }

Tsum Aggregate(const Field& phi, const Field& c, const Field& e,
               const ComponentWeights& weights, double u_min, double u_max) {
  CheckSameGrid(phi.grid, c.grid, "aggregate");
  CheckSameGrid(phi.grid, e.grid, "aggregate");
  if (!(u_min < u_max) || !(u_min >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("need 0 <= u_min < u_max, got {} and {}", u_min, u_max));
  }
  const size_t n = phi.values.size();
  if (c.values.size() != n || e.values.size() != n) {
    throw Error(ErrorCode::kGridMismatch, "aggregate: field sizes differ");
  }
  Tsum t;
  t.grid = phi.grid;
  t.weights = weights;
  t.u_min = u_min;
  t.u_max = u_max;
  t.raw.resize(n);
  for (size_t j = 0; j < n; ++j) {
    t.raw[j] = weights.w_phi * phi.values[j] + weights.w_c * c.values[j] +
               weights.w_e * e.values[j];
  }
  const auto [lo_it, hi_it] = std::minmax_element(t.raw.begin(), t.raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  t.acceptable.resize(n);
  for (size_t j = 0; j < n; ++j) {
    const double norm = hi > lo ? (t.raw[j] - lo) / (hi - lo) : 0.5;
    t.acceptable[j] = std::clamp(u_max - (u_max - u_min) * norm, u_min, u_max);
  }
  return t;
}

double Sample(const Tsum& tsum, Vec2 pos) {
  return tsum.acceptable[tsum.grid.CellOf(pos)];
}

EnvLinearModel FitEnvModel(const EnvFeatureMap& fmap, std::span<const double> targets) {
  const int n = fmap.grid.size();
  const int p = fmap.p;
  if (static_cast<int>(targets.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "one target per cell required");
  }
  if (n < p + 1) {
    throw Error(ErrorCode::kDegenerateSystem,
                fmt::format("{} cells cannot determine {} parameters", n, p + 1));
  }
  Eigen::MatrixXd f(n, p);
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < p; ++k) f(j, k) = fmap.features[j * p + k];
    y(j) = targets[j];
  }
  const Eigen::RowVectorXd f_mean = f.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd fc = f.rowwise() - f_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = fc.transpose() * fc;
  const Eigen::VectorXd rhs = fc.transpose() * yc;
  Eigen::VectorXd w;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fc);
  qr.setThreshold(1e-12);
  if (qr.rank() == p) {
    w = qr.solve(yc);
  } else {
    if (qr.rank() == 0 && yc.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + std::abs(y_mean))) {
      throw Error(ErrorCode::kDegenerateSystem,
                  "all feature vectors identical but targets differ");
    }
    gram.diagonal().array() += 1e-8;
    w = gram.ldlt().solve(rhs);
  }
  EnvLinearModel m;
  m.w.assign(w.data(), w.data() + p);
  m.b = y_mean - f_mean.dot(w);
  return m;
}

ComponentWeights FitComponentWeights(const Field& phi, const Field& c, const Field& e,
                                     std::span<const double> reference) {
  CheckSameGrid(phi.grid, c.grid, "fit_component_weights");
  CheckSameGrid(phi.grid, e.grid, "fit_component_weights");
  const size_t n = phi.values.size();
  if (reference.size() != n) {
    throw Error(ErrorCode::kGridMismatch, "reference size differs from fields");
  }
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (size_t j = 0; j < n; ++j) {
    a(j, 0) = phi.values[j];
    a(j, 1) = c.values[j];
    a(j, 2) = e.values[j];
    y(j) = reference[j];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (n < 3 || qr.rank() < 3) {
    throw Error(ErrorCode::kDegenerateSystem,
                fmt::format("component field matrix has rank {} (need 3)", qr.rank()));
  }
  const Eigen::VectorXd w = qr.solve(y);
  return {w(0), w(1), w(2)};
}

Tsum BuildTsum(const TaskSpec& spec, const EmbeddingTable& table,
               const EnvFeatureMap& fmap, const EnvLinearModel& model,
               const ComponentWeights& weights, double u_min, double u_max) {
  return Aggregate(RelevanceField(spec, table), ConstraintField(spec, table),
                   EnvField(fmap, model), weights, u_min, u_max);
}

Raster ToRaster(const Tsum& tsum) {
  return {tsum.grid, tsum.acceptable, tsum.u_min, tsum.u_max};
}

}  // namespace guide
