#include "guide/core/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "guide/core/error.hpp"

namespace guide {

void WritePgm(const Raster& r, const std::filesystem::path& pgm_path) {
  if (!(r.hi > r.lo)) throw Error(ErrorCode::kInvalidArgument, "raster range is empty");
  const auto& g = r.grid;
  std::ofstream out(pgm_path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + pgm_path.string());
  out << "P2\n" << g.nx << " " << g.ny << "\n65535\n";
  for (int iy = g.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double v = r.values[g.Index(ix, iy)];
      const double norm = std::clamp((v - r.lo) / (r.hi - r.lo), 0.0, 1.0);
      out << std::lround(norm * 65535.0) << (ix + 1 < g.nx ? " " : "\n");
    }
  }
  nlohmann::json side{{"u_min", r.lo},
                      {"u_max", r.hi},
                      {"grid",
                       {{"origin", {g.origin.x, g.origin.y}},
                        {"cell_size", g.cell_size},
                        {"nx", g.nx},
                        {"ny", g.ny}}}};
  std::ofstream s(SidecarPath(pgm_path));
  s << side.dump(2) << "\n";
  if (!out || !s) throw Error(ErrorCode::kIo, "failed writing " + pgm_path.string());
}

Raster ReadPgm(const std::filesystem::path& pgm_path) {
  std::ifstream side(SidecarPath(pgm_path));
  if (!side) throw Error(ErrorCode::kIo, "missing sidecar for " + pgm_path.string());
  Raster r;
  try {
    nlohmann::json j;
    side >> j;
    r.lo = j.at("u_min").get<double>();
    r.hi = j.at("u_max").get<double>();
    const auto& g = j.at("grid");
    r.grid.origin = {g.at("origin").at(0).get<double>(), g.at("origin").at(1).get<double>()};
    r.grid.cell_size = g.at("cell_size").get<double>();
    r.grid.nx = g.at("nx").get<int>();
    r.grid.ny = g.at("ny").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad raster sidecar: ") + e.what());
  }
  r.grid.Validate();
  std::ifstream in(pgm_path);
  std::string magic;
  int nx = 0, ny = 0, maxval = 0;
  in >> magic >> nx >> ny >> maxval;
  if (!in || magic != "P2" || nx != r.grid.nx || ny != r.grid.ny || maxval <= 0) {
    throw Error(ErrorCode::kFormat, "bad PGM header in " + pgm_path.string());
  }
  r.values.assign(r.grid.size(), 0.0);
  for (int iy = ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < nx; ++ix) {
      long v = 0;
      if (!(in >> v) || v < 0 || v > maxval) {
        throw Error(ErrorCode::kFormat, "truncated PGM " + pgm_path.string());
      }
      r.values[r.grid.Index(ix, iy)] = r.lo + (r.hi - r.lo) * v / maxval;
    }
  }
  return r;
}

}  // namespace guide
