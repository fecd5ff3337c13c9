#include "guide/core/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "guide/core/error.hpp"
#include "guide/core/rng.hpp"

namespace guide {

double EmbeddingVector::Norm() const {
  double s = 0.0;
  for (float v : values) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

Vec2 PatchGrid::CellCenter(int j) const {
  const int ix = j % nx;
  const int iy = j / nx;
  return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
}

int PatchGrid::CellOf(Vec2 p) const {
  const int ix = std::clamp(
      static_cast<int>(std::floor((p.x - origin.x) / cell_size)), 0, nx - 1);
  const int iy = std::clamp(
      static_cast<int>(std::floor((p.y - origin.y) / cell_size)), 0, ny - 1);
  return Index(ix, iy);
}

void PatchGrid::Validate() const {
  if (nx < 1 || ny < 1 || !(cell_size > 0.0) || !std::isfinite(cell_size) ||
      !std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("invalid patch grid nx={} ny={} cell_size={}", nx, ny,
                            cell_size));
  }
}

PatchGrid GridCovering(const Rect& area, double cell_size) {
  PatchGrid g;
  g.origin = {area.x0, area.y0};
  g.cell_size = cell_size;
  g.nx = std::max(1, static_cast<int>(std::ceil((area.x1 - area.x0) / cell_size - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil((area.y1 - area.y0) / cell_size - 1e-9)));
  g.Validate();
  return g;
}

EmbeddingTable::EmbeddingTable(int dim, PatchGrid grid)
    : dim_(dim), grid_(grid), patches_(grid.size()) {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "dim must be >= 1");
  grid_.Validate();
  for (auto& p : patches_) p.values.assign(dim, 0.0f);
}

void EmbeddingTable::CheckDim(const EmbeddingVector& v) const {
  if (static_cast<int>(v.dim()) != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("embedding has dim {}, table expects {}", v.dim(), dim_));
  }
}

void EmbeddingTable::AddText(std::string key, EmbeddingVector v) {
  CheckDim(v);
  auto it = text_.find(key);
  if (it != text_.end()) {
    it->second = std::move(v);
    return;
  }
  text_keys_.push_back(key);
  text_.emplace(std::move(key), std::move(v));
}

void EmbeddingTable::SetPatch(int cell, EmbeddingVector v) {
  CheckDim(v);
  patches_.at(cell) = std::move(v);
}

bool EmbeddingTable::HasText(std::string_view key) const {
  return text_.find(key) != text_.end();
}

const EmbeddingVector& EmbeddingTable::Text(std::string_view key) const {
  auto it = text_.find(key);
  if (it == text_.end()) {
    throw Error(ErrorCode::kMissingKey,
                "no text embedding for '" + std::string(key) + "'");
  }
  return it->second;
}

double Cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("cosine of dims {} and {}", a.dim(), b.dim()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (size_t i = 0; i < a.dim(); ++i) {
    const double x = a.values[i];
    const double y = b.values[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cosine of unequal dims");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingVector Normalized(const EmbeddingVector& v) {
  const double n = v.Norm();
  if (n == 0.0) throw Error(ErrorCode::kZeroVector, "cannot normalize zero vector");
  EmbeddingVector out;
  out.values.resize(v.dim());
  for (size_t i = 0; i < v.dim(); ++i) {
    out.values[i] = static_cast<float>(v.values[i] / n);
  }
  return out;
}

namespace {

std::vector<double> UnitGaussian(uint64_t key, int dim) {
  CounterRng rng(key);
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (auto& x : v) {
    x = rng.Normal();
    n2 += x * x;
  }
  const double n = std::sqrt(n2);
  for (auto& x : v) x /= n;
  return v;
}

}  // namespace

EmbeddingVector MockEncode(std::string_view key, int dim, uint64_t seed,
                           std::span<const ConceptTag> tags, double bias_gain) {
  if (dim < 2) throw Error(ErrorCode::kInvalidArgument, "mock dim must be >= 2");
  std::vector<double> v = UnitGaussian(HashString(key, seed), dim);
  for (const auto& tag : tags) {
    const auto c = UnitGaussian(HashString("concept:" + tag.concept_name, seed), dim);
    for (int i = 0; i < dim; ++i) v[i] += bias_gain * tag.weight * c[i];
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double n = std::sqrt(n2);
  EmbeddingVector out;
  out.values.resize(dim);
  for (int i = 0; i < dim; ++i) out.values[i] = static_cast<float>(v[i] / n);
  return out;
}

namespace {

std::string PointConcept(double x, double y) {
  return fmt::format("point {:.3f} {:.3f}", x, y);
}

// Fraction of the cell inside the shape, from a 5 x 5 sub-sample.
double CoverFraction(const Shape& s, const PatchGrid& grid, int cell) {
  const Vec2 c = grid.CellCenter(cell);
  int inside = 0;
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      const Vec2 p{c.x + ((a + 0.5) / 5.0 - 0.5) * grid.cell_size,
                   c.y + ((b + 0.5) / 5.0 - 0.5) * grid.cell_size};
      if (Contains(s, p)) ++inside;
    }
  }
  return inside / 25.0;
}

}  // namespace

EmbeddingTable BuildMockTable(const TaskSpec& spec, const Vocabulary& vocab,
                              const PatchGrid& grid, int dim, uint64_t seed) {
  EmbeddingTable table(dim, grid);
  std::vector<Vec2> points;
  auto add_text = [&](const std::string& key, const std::string& concept_name) {
    const ConceptTag tag{concept_name, 1.0};
    table.AddText(key, MockEncode(key, dim, seed, std::span(&tag, 1)));
  };
  for (const auto& s : spec.primaries) {
    const std::string key = CanonicalText(s);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, GoalWaypoint>) {
            points.push_back({v.x, v.y});
            add_text(key, PointConcept(v.x, v.y));
          } else if constexpr (std::is_same_v<T, Perimeter>) {
            add_text(key, v.target);
          } else if constexpr (std::is_same_v<T, Explore>) {
            add_text(key, v.region);
          } else {
            add_text(key, v.name);
          }
        },
        s);
  }
  for (const auto& c : spec.auxiliaries) {
    const std::string key = CanonicalText(c);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, AvoidPoint>) {
            points.push_back({v.x, v.y});
            add_text(key, PointConcept(v.x, v.y));
          } else if constexpr (std::is_same_v<T, AvoidLandmark>) {
            add_text(key, v.name);
          } else {
            add_text(key, v.region);
          }
        },
        c);
  }
  for (int j = 0; j < grid.size(); ++j) {
    std::vector<ConceptTag> tags;
    for (const auto& f : vocab.features()) {
      const double w = CoverFraction(f.geometry, grid, j);
      if (w > 0.0) tags.push_back({f.name, w});
    }
    const Vec2 c = grid.CellCenter(j);
    for (const Vec2& p : points) {
      const double d = Distance(c, p);
      const double w = std::exp(-d * d / (2.0 * grid.cell_size * grid.cell_size));
      if (w > 0.01) tags.push_back({PointConcept(p.x, p.y), w});
    }
    table.SetPatch(j, MockEncode(fmt::format("patch {} {}", j % grid.nx, j / grid.nx),
                                 dim, seed, tags));
  }
  return table;
}

namespace {

void AppendFloatLE(std::string& out, float f) {
  uint32_t bits = std::bit_cast<uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float ReadFloatLE(const unsigned char* p) {
  const uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                        (static_cast<uint32_t>(p[2]) << 16) |
                        (static_cast<uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

void WriteTable(const EmbeddingTable& table, const std::filesystem::path& dir,
                const std::string& blob_name) {
  std::filesystem::create_directories(dir);
  const auto& g = table.grid();
  nlohmann::json manifest{
      {"dim", table.dim()},
      {"dtype", "f32le"},
      {"text_keys", table.text_keys()},
      {"grid",
       {{"origin", {g.origin.x, g.origin.y}},
        {"cell_size", g.cell_size},
        {"nx", g.nx},
        {"ny", g.ny}}},
      {"blob", blob_name}};
  std::string blob;
  blob.reserve((table.text_keys().size() + g.size()) * table.dim() * 4);
  for (const auto& key : table.text_keys()) {
    for (float f : table.Text(key).values) AppendFloatLE(blob, f);
  }
  for (int j = 0; j < g.size(); ++j) {
    for (float f : table.Patch(j).values) AppendFloatLE(blob, f);
  }
  std::ofstream m(dir / "manifest.json");
  m << manifest.dump(2) << "\n";
  std::ofstream b(dir / blob_name, std::ios::binary);
  b.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!m || !b) throw Error(ErrorCode::kIo, "failed writing table to " + dir.string());
}

EmbeddingTable LoadTable(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + manifest_path.string());
  nlohmann::json m;
  int dim = 0;
  PatchGrid grid;
  std::vector<std::string> keys;
  std::string blob_name;
  try {
    in >> m;
    if (m.at("dtype").get<std::string>() != "f32le") {
      throw Error(ErrorCode::kFormat,
                  "unsupported dtype '" + m.at("dtype").get<std::string>() +
                      "' at byte offset 0");
    }
    dim = m.at("dim").get<int>();
    keys = m.at("text_keys").get<std::vector<std::string>>();
    const auto& g = m.at("grid");
    grid.origin = {g.at("origin").at(0).get<double>(), g.at("origin").at(1).get<double>()};
    grid.cell_size = g.at("cell_size").get<double>();
    grid.nx = g.at("nx").get<int>();
    grid.ny = g.at("ny").get<int>();
    blob_name = m.at("blob").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad manifest: ") + e.what());
  }
  if (dim < 1) throw Error(ErrorCode::kFormat, fmt::format("bad dim {}", dim));
  try {
    grid.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, e.what());
  }
  const auto blob_path = manifest_path.parent_path() / blob_name;
  std::ifstream b(blob_path, std::ios::binary);
  if (!b) throw Error(ErrorCode::kIo, "cannot open blob " + blob_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(b)),
                                   std::istreambuf_iterator<char>());
  const size_t n_vectors = keys.size() + static_cast<size_t>(grid.size());
  const size_t expected = n_vectors * static_cast<size_t>(dim) * 4;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kFormat,
                fmt::format("blob {} has {} bytes, manifest declares {} "
                            "(mismatch at byte offset {})",
                            blob_path.string(), bytes.size(), expected,
                            std::min(bytes.size(), expected)));
  }
  EmbeddingTable table(dim, grid);
  size_t offset = 0;
  auto read_vector = [&]() {
    EmbeddingVector v;
    v.values.resize(dim);
    for (int i = 0; i < dim; ++i) {
      const float f = ReadFloatLE(bytes.data() + offset);
      if (!std::isfinite(f)) {
        throw Error(ErrorCode::kFormat,
                    fmt::format("non-finite value at byte offset {}", offset));
      }
      v.values[i] = f;
      offset += 4;
    }
    return v;
  };
  for (const auto& key : keys) {
    if (table.HasText(key)) {
      throw Error(ErrorCode::kFormat, "duplicate text key '" + key + "'");
    }
    table.AddText(key, read_vector());
  }
  for (int j = 0; j < grid.size(); ++j) table.SetPatch(j, read_vector());
  return table;
}

double ContrastiveLoss(std::span<const double> sims, size_t positive_index,
                       double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  if (positive_index >= sims.size()) {
    throw Error(ErrorCode::kInvalidArgument, "positive index out of range");
  }
  size_t arg_max = 0;
  for (size_t j = 1; j < sims.size(); ++j) {
    if (sims[j] > sims[arg_max]) arg_max = j;
  }
  const double max_logit = sims[arg_max] / temperature;
  // log-sum-exp as log1p of the non-maximal terms keeps tiny losses exact.
  double rest = 0.0;
  for (size_t j = 0; j < sims.size(); ++j) {
    if (j != arg_max) rest += std::exp(sims[j] / temperature - max_logit);
  }
  const double loss =
      std::log1p(rest) - (sims[positive_index] / temperature - max_logit);
  return std::max(0.0, loss);
}

double AlignmentLoss(std::span<const int> labels, std::span<const double> sims,
                     double temperature) {
  if (labels.size() != sims.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels and sims differ in length");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  double total = 0.0;
  for (size_t j = 0; j < sims.size(); ++j) {
    const double z = sims[j] / temperature;
    const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                : std::exp(z) / (1.0 + std::exp(z));
    const double r = labels[j] - sig;
    total += r * r;
  }
  return total;
}

}  // namespace guide
