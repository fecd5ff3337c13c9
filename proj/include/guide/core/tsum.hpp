#ifndef GUIDE_CORE_TSUM_HPP_
#define GUIDE_CORE_TSUM_HPP_

#include <span>
#include <vector>

#include "guide/core/embedding.hpp"
#include "guide/core/raster.hpp"
#include "guide/core/task.hpp"

namespace guide {

struct ComponentWeights {
  double w_phi = 0.5;
  double w_c = 0.3;
  double w_e = 0.2;
  bool operator==(const ComponentWeights&) const = default;
};

// Per-cell scalar field.
struct Field {
  PatchGrid grid;
  std::vector<double> values;
};

// p features per cell, stored cell-major: features[j * p + k].
struct EnvFeatureMap {
  PatchGrid grid;
  int p = 3;
  std::vector<double> features;

  std::span<const double> At(int cell) const {
    return std::span(features).subspan(static_cast<size_t>(cell) * p, p);
  }
};

struct EnvLinearModel {
  std::vector<double> w;
  double b = 0.0;
};

inline constexpr double kDefaultUMin = 0.1;
inline constexpr double kDefaultUMax = 2.0;

struct Tsum {
  PatchGrid grid;
  std::vector<double> raw;         // weighted criticality per cell
  std::vector<double> acceptable;  // meters, in [u_min, u_max]
  ComponentWeights weights;
  double u_min = kDefaultUMin;
  double u_max = kDefaultUMax;
};

// Softmax over one cell's similarities, max-subtracted.
std::vector<double> AttentionWeights(std::span<const double> rho);

// Attention-weighted mean of cosine(text_i, patch_j) over the primaries.
// Throws Error{kMissingKey}.
Field RelevanceField(const TaskSpec& spec, const EmbeddingTable& table);
// Same form over the auxiliaries; identically zero when there are none.
Field ConstraintField(const TaskSpec& spec, const EmbeddingTable& table);

// Throws Error{kDimensionMismatch}.
Field EnvField(const EnvFeatureMap& fmap, const EnvLinearModel& model);

// Depth (m), obstacle proximity (1/m) and disturbance intensity per cell.
EnvFeatureMap DefaultEnvFeatures(const Vocabulary& vocab, const PatchGrid& grid);
EnvLinearModel DefaultEnvModel();

// raw = w_phi*phi + w_c*c + w_e*e, then an antitone min-max remap into
// [u_min, u_max]; a constant raw field maps to the midpoint.
// Throws Error{kGridMismatch}.
Tsum Aggregate(const Field& phi, const Field& c, const Field& e,
               const ComponentWeights& weights, double u_min = kDefaultUMin,
               double u_max = kDefaultUMax);

// Nearest-cell lookup, clamped to the grid.
double Sample(const Tsum& tsum, Vec2 pos);

// Ordinary least squares for E = w.f + b. The intercept is unpenalized; a
// singular design falls back to ridge 1e-8 on w. Throws Error{kDegenerateSystem}
// when features are all identical but targets differ.
EnvLinearModel FitEnvModel(const EnvFeatureMap& fmap, std::span<const double> targets);

// Least squares over (w_phi, w_c, w_e) of raw against the reference.
// Throws Error{kDegenerateSystem} when the design has rank < 3.
ComponentWeights FitComponentWeights(const Field& phi, const Field& c,
                                     const Field& e, std::span<const double> reference);

// Full pipeline for a task.
Tsum BuildTsum(const TaskSpec& spec, const EmbeddingTable& table,
               const EnvFeatureMap& fmap, const EnvLinearModel& model,
               const ComponentWeights& weights = {}, double u_min = kDefaultUMin,
               double u_max = kDefaultUMax);

Raster ToRaster(const Tsum& tsum);

}  // namespace guide

#endif  // GUIDE_CORE_TSUM_HPP_
