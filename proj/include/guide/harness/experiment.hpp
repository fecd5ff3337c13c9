#ifndef GUIDE_HARNESS_EXPERIMENT_HPP_
#define GUIDE_HARNESS_EXPERIMENT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "guide/core/sim.hpp"
#include "guide/learn/env.hpp"
#include "guide/learn/policy.hpp"
#include "guide/learn/ppo.hpp"
#include "guide/learn/sac.hpp"
#include "guide/plan/planners.hpp"

namespace guide {

enum class Algo { kGsac, kSac, kSacp, kBsac, kGppo, kHeu, kRaa };

// Throws Error{kInvalidConfig} for unknown names.
Algo ParseAlgo(std::string_view name);
std::string AlgoName(Algo a);
bool IsLearned(Algo a);
ObsMode ObsModeFor(Algo a);

// Built-in task suites keyed by category name.
struct TaskSuite {
  std::string category;
  std::vector<std::string> tasks;
};
const std::vector<TaskSuite>& BuiltinSuites();
// Throws Error{kInvalidConfig}.
const TaskSuite& FindSuite(std::string_view category);

struct TsumSettings {
  std::array<double, 3> weights = {0.5, 0.3, 0.2};
  double u_min = 0.1;
  double u_max = 2.0;
  double cell_size = 5.0;  // mock embedding grid
  int mock_dim = 64;
  uint64_t mock_seed = 1;
};

struct ExperimentConfig {
  Algo algo = Algo::kGsac;
  std::string category = "custom";
  std::vector<std::string> tasks;
  std::vector<uint64_t> seeds = {1};
  long steps = 100000;
  int episodes_per_seed = 20;
  SimConfig env;
  nlohmann::json env_json;         // as given, for the run record
  std::string embeddings = "mock"; // "mock" or a manifest path / directory
  TsumSettings tsum;
  SacConfig sac;
  PpoConfig ppo;
  RaaConfig raa;

  // Throws Error{kInvalidConfig}.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Relative paths resolve against base_dir. Throws Error{kInvalidConfig}.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  static ExperimentConfig Load(const std::filesystem::path& path);
};

// Parses every task, builds TSUMs for GUIDEd algorithms, and widens the
// observation padding so all tasks share one layout.
std::vector<TaskInstance> BuildTasks(ExperimentConfig& cfg);

// One TSUM for a task given an embeddings source ("mock" or a table path).
Tsum BuildTaskTsum(const TaskSpec& spec, const SimConfig& env, const std::string& embeddings,
                   const TsumSettings& settings);

struct TrainedRun {
  Algo algo = Algo::kGsac;
  uint64_t seed = 0;
  long steps = 0;
  std::optional<GaussianPolicy> policy;
  std::vector<EpisodeMetrics> metrics;
};

TrainedRun Train(const ExperimentConfig& cfg, const std::vector<TaskInstance>& tasks,
                 uint64_t seed, const MetricsCallback& on_episode = {});

enum class EtaOverride { kPolicy, kAlwaysExact, kNeverExact };

struct EpisodeLog {
  int episode = 0;
  uint64_t seed = 0;
  size_t task = 0;
  double completed_fraction = 0.0;
  double ret = 0.0;
  int exact_fixes = 0;
  int steps = 0;
  bool collision = false;
  bool complete = false;
  std::vector<TrajectoryRow> trajectory;  // step 0 is the reset state
};

// Greedy rollouts; episode e runs task e mod |tasks| from seed
// DeriveSeed(seed, "eval:<e>").
std::vector<EpisodeLog> Evaluate(const ExperimentConfig& cfg,
                                 const std::vector<TaskInstance>& tasks, const TrainedRun& run,
                                 int episodes, EtaOverride eta = EtaOverride::kPolicy,
                                 bool keep_trajectories = false);

// Mean completed fraction in percent. Throws Error{kEmptyLogs}.
double ComputeTcr(std::span<const double> completed_fractions);
double ComputeTcr(std::span<const EpisodeLog> logs);

struct ResultRow {
  std::string task_category;
  std::string algo;
  double tcr_percent = 0.0;
  double avg_reward = 0.0;
  double avg_exact_fixes = 0.0;
  int n_episodes = 0;
  double seed_spread = 0.0;  // population std of per-seed TCR
};

// Throws Error{kEmptyLogs}.
ResultRow Aggregate(const std::string& category, const std::string& algo,
                    std::span<const EpisodeLog> logs);

std::string EvalCsvHeader();
std::string EvalCsvRow(const EpisodeLog& log);
std::vector<EpisodeLog> ReadEvalCsv(const std::filesystem::path& path);

std::string ResultCsvHeader();
std::string ResultCsvRow(const ResultRow& r);

struct ExperimentResult {
  ResultRow row;
  std::vector<EpisodeLog> logs;
};

// Trains (or plans) and evaluates every seed; when out_dir is set each seed's
// run directory is written under it along with results.csv.
ExperimentResult RunExperiment(ExperimentConfig cfg,
                               const std::optional<std::filesystem::path>& out_dir = {});

}  // namespace guide

#endif  // GUIDE_HARNESS_EXPERIMENT_HPP_
