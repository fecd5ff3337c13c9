#include "guide/harness/run_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "guide/core/error.hpp"

namespace guide {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian f64");

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json ReadJson(const fs::path& path) {
  try {
    return json::parse(ReadText(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "'" + path.string() + "': " + e.what());
  }
}

}  // namespace

void SaveRun(const fs::path& dir, const ExperimentConfig& cfg, const TrainedRun& run) {
  fs::create_directories(dir);
  WriteText(dir / "config.json", cfg.ToJson().dump(2) + "\n");
  json ck = {{"algo", AlgoName(run.algo)}, {"seed", run.seed}, {"steps", run.steps}};
  if (run.policy) {
    const auto& net = run.policy->net();
    const auto& space = run.policy->space();
    ck["policy"] = {{"layers", net.sizes()},
                    {"continuous", space.continuous},
                    {"has_eta", space.has_eta},
                    {"params", net.num_params()},
                    {"blob", "checkpoint.f64"}};
    const auto& p = net.params();
    std::ofstream out(dir / "checkpoint.f64", std::ios::binary);
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint in '" + dir.string() + "'");
  }
  WriteText(dir / "checkpoint.json", ck.dump(2) + "\n");
  std::string metrics = MetricsCsvHeader() + "\n";
  for (const auto& m : run.metrics) metrics += MetricsCsvRow(m) + "\n";
  WriteText(dir / "metrics.csv", metrics);
}

LoadedRun LoadRun(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "no run directory '" + dir.string() + "'");
  LoadedRun out;
  out.config = ExperimentConfig::FromJson(ReadJson(dir / "config.json"), dir);
  const json ck = ReadJson(dir / "checkpoint.json");
  try {
    out.run.algo = ParseAlgo(ck.at("algo").get<std::string>());
    out.run.seed = ck.at("seed").get<uint64_t>();
    out.run.steps = ck.at("steps").get<long>();
    if (ck.contains("policy")) {
      const auto& pj = ck.at("policy");
      const auto layers = pj.at("layers").get<std::vector<int>>();
      if (layers.size() != 4 || layers[1] != layers[2]) {
        throw Error(ErrorCode::kFormat, "unsupported policy layout in checkpoint");
      }
      ActionSpace space{pj.at("continuous").get<int>(), pj.at("has_eta").get<bool>()};
      GaussianPolicy policy(layers[0], layers[1], space, 0);
      if (policy.net().sizes() != layers) throw Error(ErrorCode::kFormat, "checkpoint layer mismatch");
      const std::string blob = ReadText(dir / pj.at("blob").get<std::string>());
      auto& params = policy.net().params();
      if (blob.size() != static_cast<size_t>(params.size()) * sizeof(double) ||
          pj.at("params").get<Eigen::Index>() != params.size()) {
        throw Error(ErrorCode::kFormat, "checkpoint blob has the wrong size");
      }
      std::memcpy(params.data(), blob.data(), blob.size());
      out.run.policy = std::move(policy);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "checkpoint.json: " + std::string(e.what()));
  }
  if (IsLearned(out.run.algo) && !out.run.policy) {
    throw Error(ErrorCode::kFormat, "checkpoint of a learned run has no policy");
  }
  return out;
}

void SaveEvaluation(const fs::path& dir, std::span<const EpisodeLog> logs) {
  std::string csv = EvalCsvHeader() + "\n";
  for (const auto& l : logs) csv += EvalCsvRow(l) + "\n";
  WriteText(dir / "eval.csv", csv);
  for (const auto& l : logs) {
    if (l.trajectory.empty()) continue;
    std::string t = TrajectoryCsvHeader() + "\n";
    for (const auto& r : l.trajectory) t += TrajectoryCsvRow(r) + "\n";
    WriteText(dir / "trajectories" / fmt::format("episode_{:03d}.csv", l.episode), t);
  }
}

std::vector<ResultRow> TableFromRuns(std::span<const fs::path> dirs) {
  std::map<std::pair<std::string, std::string>, std::vector<EpisodeLog>> groups;
  for (const auto& d : dirs) {
    const json cfg = ReadJson(d / "config.json");
    const std::string category = cfg.value("category", "custom");
    const std::string algo = cfg.value("algo", "?");
    auto logs = ReadEvalCsv(d / "eval.csv");
    auto& g = groups[{category, algo}];
    g.insert(g.end(), logs.begin(), logs.end());
  }
  std::vector<ResultRow> rows;
  for (const auto& [key, logs] : groups) rows.push_back(Aggregate(key.first, key.second, logs));
  return rows;
}

void WriteResultCsv(const fs::path& path, std::span<const ResultRow> rows) {
  std::string csv = ResultCsvHeader() + "\n";
  for (const auto& r : rows) csv += ResultCsvRow(r) + "\n";
  WriteText(path, csv);
}

namespace {

constexpr double kScale = 6.0;  // px per meter

struct Canvas {
  Rect arena;
  double X(double x) const { return (x - arena.x0) * kScale; }
  double Y(double y) const { return (arena.y1 - y) * kScale; }
};

std::string ShapeSvg(const Canvas& c, const Shape& s, const std::string& style) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    return fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" {}/>\n", c.X(d->cx),
                       c.Y(d->cy), d->r * kScale, style);
  }
  const auto& r = std::get<Rect>(s);
  return fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" {}/>\n",
                     c.X(r.x0), c.Y(r.y1), (r.x1 - r.x0) * kScale, (r.y1 - r.y0) * kScale, style);
}

std::string Polyline(const Canvas& c, std::span<const TrajectoryRow> log, bool truth,
                     const std::string& style) {
  std::string pts;
  for (const auto& r : log) {
    const Vec2 p = truth ? r.true_pos : r.est_pos;
    pts += fmt::format("{:.2f},{:.2f} ", c.X(p.x), c.Y(p.y));
  }
  return fmt::format("<polyline points=\"{}\" fill=\"none\" {}/>\n", pts, style);
}

}  // namespace

std::string RenderTrajectorySvg(std::span<const TrajectoryRow> log, const SimConfig& env,
                                const Raster* tsum) {
  const Canvas c{env.vocab.arena()};
  const double w = (c.arena.x1 - c.arena.x0) * kScale;
  const double h = (c.arena.y1 - c.arena.y0) * kScale;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      w, h, w, h);
  svg += fmt::format("<rect class=\"arena\" x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" "
                     "fill=\"#dbe9f4\" stroke=\"#222\" stroke-width=\"2\"/>\n", w, h);
  if (tsum) {
    const auto& g = tsum->grid;
    const double span = tsum->hi > tsum->lo ? tsum->hi - tsum->lo : 1.0;
    svg += "<g class=\"tsum\" opacity=\"0.6\">\n";
    for (int j = 0; j < g.size(); ++j) {
      const Vec2 ctr = g.CellCenter(j);
      const double v = std::clamp((tsum->values[j] - tsum->lo) / span, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      const double half = g.cell_size / 2.0;
      svg += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
          "fill=\"rgb(255,{},{})\"/>\n",
          c.X(ctr.x - half), c.Y(ctr.y + half), g.cell_size * kScale, g.cell_size * kScale, shade,
          shade);
    }
    svg += "</g>\n";
  }
  for (const auto& f : env.vocab.features()) {
    if (f.disturbance_radius > 0.0) {
      if (const auto* d = std::get_if<Disc>(&f.geometry)) {
        svg += ShapeSvg(c, Disc{d->cx, d->cy, f.disturbance_radius},
                        "class=\"disturbance\" fill=\"none\" stroke=\"#7a9cc6\" "
                        "stroke-dasharray=\"4 3\"");
      }
    }
    const std::string style = f.obstacle
                                  ? "class=\"obstacle\" fill=\"#555\""
                                  : "class=\"feature\" fill=\"none\" stroke=\"#999\"";
    if (f.name == env.dock) {
      svg += ShapeSvg(c, f.geometry, "class=\"dock\" fill=\"#2a9d4a\" fill-opacity=\"0.7\"");
    } else if (f.kind == FeatureKind::kLandmark || f.obstacle) {
      svg += ShapeSvg(c, f.geometry, style);
    }
  }
  if (log.size() > 1) {
    svg += Polyline(c, log, false, "class=\"estimate\" stroke=\"#888\" stroke-dasharray=\"3 2\"");
    svg += Polyline(c, log, true, "class=\"path\" stroke=\"#1f4e8c\" stroke-width=\"2\"");
  }
  if (!log.empty()) {
    const Vec2 s = log.front().true_pos;
    svg += fmt::format("<circle class=\"start\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" "
                       "fill=\"#2a9d4a\"/>\n", c.X(s.x), c.Y(s.y));
    for (const auto& r : log) {
      if (r.step > 0 && r.eta == LocMode::kExact) {
        svg += fmt::format("<circle class=\"fix\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" "
                           "fill=\"#d62728\"/>\n", c.X(r.true_pos.x), c.Y(r.true_pos.y));
      }
    }
    for (const auto& r : log) {
      if (r.collision) {
        const double x = c.X(r.true_pos.x);
        const double y = c.Y(r.true_pos.y);
        svg += fmt::format("<polygon class=\"collision\" points=\"{:.2f},{:.2f} {:.2f},{:.2f} "
                           "{:.2f},{:.2f} {:.2f},{:.2f}\" fill=\"#ff7f0e\"/>\n",
                           x, y - 5, x + 5, y, x, y + 5, x - 5, y);
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

ExperimentResult RunExperiment(ExperimentConfig cfg, const std::optional<fs::path>& out_dir) {
  const auto tasks = BuildTasks(cfg);
  ExperimentResult result;
  std::vector<fs::path> dirs;
  for (uint64_t seed : cfg.seeds) {
    const TrainedRun run = Train(cfg, tasks, seed);
    auto logs = Evaluate(cfg, tasks, run, cfg.episodes_per_seed, EtaOverride::kPolicy,
                         out_dir.has_value());
    if (out_dir) {
      const fs::path dir = *out_dir / fmt::format("{}_seed{}", AlgoName(cfg.algo), seed);
      SaveRun(dir, cfg, run);
      SaveEvaluation(dir, logs);
      dirs.push_back(dir);
    }
    for (auto& l : logs) {
      l.trajectory.clear();
      result.logs.push_back(std::move(l));
    }
  }
  result.row = Aggregate(cfg.category, AlgoName(cfg.algo), result.logs);
  if (out_dir) WriteResultCsv(*out_dir / "results.csv", std::span<const ResultRow>(&result.row, 1));
  return result;
}

}  // namespace guide
