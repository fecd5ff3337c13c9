#ifndef GUIDE_CORE_VOCAB_HPP_
#define GUIDE_CORE_VOCAB_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guide/core/geometry.hpp"

namespace guide {

enum class FeatureKind { kLandmark, kRegion };

// One named place in the environment. Obstacles are impassable discs
// (fountains); the disturbance radius marks the surrounding turbulent water.
struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::kLandmark;
  Shape geometry;
  bool obstacle = false;
  double disturbance_radius = 0.0;
};

// Closed set of landmark and region names a task may reference, together
// with their geometry in arena meters.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(Rect arena, std::vector<Feature> features);

  // Accepts either a bare feature list or an object with "features" and an
  // optional "arena": {"width", "height"}.
  static Vocabulary FromJson(const nlohmann::json& j);
  static Vocabulary Load(const std::filesystem::path& path);

  // The 100 x 100 m lake used throughout the tests and experiments.
  static Vocabulary Default();

  nlohmann::json ToJson() const;

  const Feature* Find(std::string_view name) const;
  const Feature& Get(std::string_view name) const;
  std::span<const Feature> features() const { return features_; }
  const Rect& arena() const { return arena_; }

  // Name of the region covering the whole arena, if the vocabulary has one.
  std::optional<std::string> WholeAreaName() const;

 private:
  Rect arena_{0.0, 0.0, 100.0, 100.0};
  std::vector<Feature> features_;
};

nlohmann::json ShapeToJson(const Shape& s);
Shape ShapeFromJson(const nlohmann::json& j);

}  // namespace guide

#endif  // GUIDE_CORE_VOCAB_HPP_
