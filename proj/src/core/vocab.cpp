#include "guide/core/vocab.hpp"

#include <fstream>

#include "guide/core/error.hpp"

namespace guide {

using nlohmann::json;

Vocabulary::Vocabulary(Rect arena, std::vector<Feature> features)
    : arena_(arena), features_(std::move(features)) {
  for (size_t i = 0; i < features_.size(); ++i) {
    for (size_t j = i + 1; j < features_.size(); ++j) {
      if (features_[i].name == features_[j].name) {
        throw Error(ErrorCode::kInvalidConfig,
                    "duplicate feature name '" + features_[i].name + "'");
      }
    }
  }
}

json ShapeToJson(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    return {{"disc", {{"cx", d->cx}, {"cy", d->cy}, {"r", d->r}}}};
  }
  const auto& r = std::get<Rect>(s);
  return {{"rect", {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}}}};
}

Shape ShapeFromJson(const json& j) {
  if (j.contains("disc")) {
    const auto& d = j.at("disc");
    Disc disc{d.at("cx").get<double>(), d.at("cy").get<double>(),
              d.at("r").get<double>()};
    if (!(disc.r > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "disc radius must be positive");
    }
    return disc;
  }
  if (j.contains("rect")) {
    const auto& r = j.at("rect");
    Rect rect{r.at("x0").get<double>(), r.at("y0").get<double>(),
              r.at("x1").get<double>(), r.at("y1").get<double>()};
    if (!(rect.x1 > rect.x0 && rect.y1 > rect.y0)) {
      throw Error(ErrorCode::kInvalidConfig, "rect must have x1 > x0, y1 > y0");
    }
    return rect;
  }
  throw Error(ErrorCode::kInvalidConfig, "geometry must be disc or rect");
}

Vocabulary Vocabulary::FromJson(const json& j) {
  try {
    const json* list = &j;
    Rect arena{0.0, 0.0, 100.0, 100.0};
    if (j.is_object()) {
      list = &j.at("features");
      if (j.contains("arena")) {
        const auto& a = j.at("arena");
        arena = {0.0, 0.0, a.at("width").get<double>(),
                 a.at("height").get<double>()};
      }
    }
    std::vector<Feature> features;
    for (const auto& item : *list) {
      Feature f;
      f.name = item.at("name").get<std::string>();
      const auto kind = item.at("kind").get<std::string>();
      if (kind == "landmark") {
        f.kind = FeatureKind::kLandmark;
      } else if (kind == "region") {
        f.kind = FeatureKind::kRegion;
      } else {
        throw Error(ErrorCode::kInvalidConfig,
                    "feature kind must be landmark or region, got '" + kind + "'");
      }
      f.geometry = ShapeFromJson(item.at("geometry"));
      f.obstacle = item.value("obstacle", false);
      f.disturbance_radius = item.value("disturbance_radius", 0.0);
      if (f.obstacle && !std::holds_alternative<Disc>(f.geometry)) {
        throw Error(ErrorCode::kInvalidConfig,
                    "obstacle '" + f.name + "' must be a disc");
      }
      features.push_back(std::move(f));
    }
    return Vocabulary(arena, std::move(features));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("malformed vocabulary: ") + e.what());
  }
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open vocabulary " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                path.string() + ": " + e.what());
  }
  return FromJson(j);
}

Vocabulary Vocabulary::Default() {
  auto landmark = [](std::string name, Shape s, bool obstacle = false,
                     double disturbance = 0.0) {
    return Feature{std::move(name), FeatureKind::kLandmark, s, obstacle,
                   disturbance};
  };
  auto region = [](std::string name, Rect r) {
    return Feature{std::move(name), FeatureKind::kRegion, r, false, 0.0};
  };
  std::vector<Feature> f;
  f.push_back(landmark("dock", Rect{45.0, 0.0, 55.0, 5.0}));
  f.push_back(landmark("central fountain", Disc{50.0, 50.0, 4.0}, true, 10.0));
  f.push_back(landmark("left fountain", Disc{25.0, 60.0, 3.0}, true, 8.0));
  f.push_back(landmark("right fountain", Disc{75.0, 60.0, 3.0}, true, 8.0));
  f.push_back(region("top-left quadrant", {0.0, 50.0, 50.0, 100.0}));
  f.push_back(region("top-right quadrant", {50.0, 50.0, 100.0, 100.0}));
  f.push_back(region("bottom-left quadrant", {0.0, 0.0, 50.0, 50.0}));
  f.push_back(region("bottom-right quadrant", {50.0, 0.0, 100.0, 50.0}));
  f.push_back(region("top half", {0.0, 50.0, 100.0, 100.0}));
  f.push_back(region("bottom half", {0.0, 0.0, 100.0, 50.0}));
  f.push_back(region("left half", {0.0, 0.0, 50.0, 100.0}));
  f.push_back(region("right half", {50.0, 0.0, 100.0, 100.0}));
  f.push_back(region("whole area", {0.0, 0.0, 100.0, 100.0}));
  f.push_back(region("exclusion zone", {60.0, 20.0, 80.0, 35.0}));
  return Vocabulary(Rect{0.0, 0.0, 100.0, 100.0}, std::move(f));
}

json Vocabulary::ToJson() const {
  json features = json::array();
  for (const auto& f : features_) {
    json item{{"name", f.name},
              {"kind", f.kind == FeatureKind::kLandmark ? "landmark" : "region"},
              {"geometry", ShapeToJson(f.geometry)}};
    if (f.obstacle) item["obstacle"] = true;
    if (f.disturbance_radius > 0.0) {
      item["disturbance_radius"] = f.disturbance_radius;
    }
    features.push_back(std::move(item));
  }
  return {{"arena", {{"width", arena_.x1 - arena_.x0},
                     {"height", arena_.y1 - arena_.y0}}},
          {"features", std::move(features)}};
}

const Feature* Vocabulary::Find(std::string_view name) const {
  for (const auto& f : features_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const Feature& Vocabulary::Get(std::string_view name) const {
  const Feature* f = Find(name);
  if (f == nullptr) {
    throw Error(ErrorCode::kUnknownSymbol,
                "unknown landmark or region '" + std::string(name) + "'");
  }
  return *f;
}

std::optional<std::string> Vocabulary::WholeAreaName() const {
  for (const auto& f : features_) {
    if (f.kind != FeatureKind::kRegion) continue;
    const auto* r = std::get_if<Rect>(&f.geometry);
    if (r != nullptr && *r == arena_) return f.name;
  }
  return std::nullopt;
}

}  // namespace guide
