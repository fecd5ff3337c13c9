#ifndef GUIDE_CORE_EMBEDDING_HPP_
#define GUIDE_CORE_EMBEDDING_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guide/core/geometry.hpp"
#include "guide/core/task.hpp"

namespace guide {

inline constexpr int kDefaultEmbeddingDim = 512;
inline constexpr double kContrastiveTemperature = 0.07;

// Stored at 32-bit precision; all arithmetic on it accumulates in double.
struct EmbeddingVector {
  std::vector<float> values;

  size_t dim() const { return values.size(); }
  double Norm() const;
  bool operator==(const EmbeddingVector&) const = default;
};

// Regular lattice of square cells over the arena. Cell j = iy * nx + ix.
struct PatchGrid {
  Vec2 origin;
  double cell_size = 5.0;
  int nx = 1;
  int ny = 1;

  int size() const { return nx * ny; }
  int Index(int ix, int iy) const { return iy * nx + ix; }
  Vec2 CellCenter(int j) const;
  // Nearest cell, clamping positions outside the grid to the boundary.
  int CellOf(Vec2 p) const;
  void Validate() const;
  bool operator==(const PatchGrid&) const = default;
};

// A grid of cell_size covering the rectangle exactly (rounded up).
PatchGrid GridCovering(const Rect& area, double cell_size);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dim, PatchGrid grid);

  int dim() const { return dim_; }
  const PatchGrid& grid() const { return grid_; }

  void AddText(std::string key, EmbeddingVector v);
  void SetPatch(int cell, EmbeddingVector v);

  bool HasText(std::string_view key) const;
  // Throws Error{kMissingKey}.
  const EmbeddingVector& Text(std::string_view key) const;
  const EmbeddingVector& Patch(int cell) const { return patches_.at(cell); }
  const std::vector<std::string>& text_keys() const { return text_keys_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  void CheckDim(const EmbeddingVector& v) const;

  int dim_ = 0;
  PatchGrid grid_;
  std::vector<std::string> text_keys_;
  std::map<std::string, EmbeddingVector, std::less<>> text_;
  std::vector<EmbeddingVector> patches_;
};

// Clamped to [-1, 1]. Throws Error{kZeroVector}.
double Cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double Cosine(std::span<const double> a, std::span<const double> b);

EmbeddingVector Normalized(const EmbeddingVector& v);

struct ConceptTag {
  std::string concept_name;
  double weight = 1.0;
};

// Deterministic stand-in for the pretrained encoder. The vector is a pure
// function of (key, dim, seed, tags): a unit random direction seeded by the
// key plus bias_gain * weight along each tagged concept's shared direction,
// renormalized. Keys sharing a concept therefore align.
EmbeddingVector MockEncode(std::string_view key, int dim, uint64_t seed,
                           std::span<const ConceptTag> tags = {},
                           double bias_gain = 1.0);

// Mock table for a parsed task: one text entry per canonical subtask and
// constraint phrase, one patch per grid cell tagged with the features and
// task coordinates that fall inside it.
EmbeddingTable BuildMockTable(const TaskSpec& spec, const Vocabulary& vocab,
                              const PatchGrid& grid, int dim, uint64_t seed);

// manifest.json + little-endian f32 blob; see README for the layout.
void WriteTable(const EmbeddingTable& table, const std::filesystem::path& dir,
                const std::string& blob_name = "embeddings.f32");
// Throws Error{kFormat} with the byte offset of the first inconsistency.
EmbeddingTable LoadTable(const std::filesystem::path& manifest_path);

// -log softmax(sims / temperature)[positive_index], max-subtracted.
double ContrastiveLoss(std::span<const double> sims, size_t positive_index,
                       double temperature = kContrastiveTemperature);

// sum_j (y_j - sigmoid(sim_j / temperature))^2.
double AlignmentLoss(std::span<const int> labels, std::span<const double> sims,
                     double temperature = kContrastiveTemperature);

}  // namespace guide

#endif  // GUIDE_CORE_EMBEDDING_HPP_
