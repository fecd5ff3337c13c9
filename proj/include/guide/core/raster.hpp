#ifndef GUIDE_CORE_RASTER_HPP_
#define GUIDE_CORE_RASTER_HPP_

#include <filesystem>
#include <vector>

#include "guide/core/embedding.hpp"

namespace guide {

// Scalar field over a patch grid, exported as a 16-bit plain PGM (P2) with a
// JSON sidecar holding the value range and grid so values are recoverable.
// Image rows run top (max y) to bottom; a value v is stored as
// round((v - lo) / (hi - lo) * 65535).
struct Raster {
  PatchGrid grid;
  std::vector<double> values;
  double lo = 0.0;
  double hi = 1.0;
};

void WritePgm(const Raster& r, const std::filesystem::path& pgm_path);
// Reads the PGM and its "<path>.json" sidecar.
Raster ReadPgm(const std::filesystem::path& pgm_path);

inline std::filesystem::path SidecarPath(const std::filesystem::path& pgm_path) {
  auto p = pgm_path;
  p += ".json";
  return p;
}

}  // namespace guide

#endif  // GUIDE_CORE_RASTER_HPP_
