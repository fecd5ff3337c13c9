#ifndef GUIDE_HARNESS_RUN_IO_HPP_
#define GUIDE_HARNESS_RUN_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "guide/core/raster.hpp"
#include "guide/harness/experiment.hpp"

namespace guide {

// Run directory layout: config.json, checkpoint.json, checkpoint.f64,
// metrics.csv, and after evaluation eval.csv plus trajectories/.
void SaveRun(const std::filesystem::path& dir, const ExperimentConfig& cfg,
             const TrainedRun& run);

struct LoadedRun {
  ExperimentConfig config;
  TrainedRun run;
};
// Throws Error{kIo} or Error{kFormat}.
LoadedRun LoadRun(const std::filesystem::path& dir);

// Writes eval.csv and one trajectory CSV per episode.
void SaveEvaluation(const std::filesystem::path& dir, std::span<const EpisodeLog> logs);

// Aggregates eval.csv of each run directory, one row per (category, algo).
std::vector<ResultRow> TableFromRuns(std::span<const std::filesystem::path> dirs);
void WriteResultCsv(const std::filesystem::path& path, std::span<const ResultRow> rows);

// Vector image of an episode over the arena; exact fixes as red dots and
// collisions as diamonds.
std::string RenderTrajectorySvg(std::span<const TrajectoryRow> log, const SimConfig& env,
                                const Raster* tsum = nullptr);

void WriteText(const std::filesystem::path& path, const std::string& text);
std::string ReadText(const std::filesystem::path& path);

}  // namespace guide

#endif  // GUIDE_HARNESS_RUN_IO_HPP_
