#include "guide/harness/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "guide/core/embedding.hpp"
#include "guide/core/error.hpp"
#include "guide/core/tsum.hpp"

namespace guide {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void Bad(const std::string& m) { throw Error(ErrorCode::kInvalidConfig, m); }

const std::vector<std::pair<Algo, std::string>>& AlgoNames() {
  static const std::vector<std::pair<Algo, std::string>> names = {
      {Algo::kGsac, "gsac"}, {Algo::kSac, "sac"}, {Algo::kSacp, "sacp"}, {Algo::kBsac, "bsac"},
      {Algo::kGppo, "gppo"}, {Algo::kHeu, "heu"}, {Algo::kRaa, "raa"}};
  return names;
}

bool NeedsTsum(Algo a) { return a == Algo::kGsac || a == Algo::kGppo; }

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

fs::path ManifestPath(const std::string& embeddings) {
  fs::path p(embeddings);
  if (fs::is_directory(p)) p /= "manifest.json";
  return p;
}

RaaConfig RaaFromJson(const json& j) {
  RaaConfig c;
  if (!j.is_object()) Bad("raa must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "p_max") c.p_max = v.get<double>();
    else if (k == "horizon") c.horizon = v.get<int>();
    else if (k == "kappa") c.kappa = v.get<double>();
    else if (k == "max_labels") c.max_labels = v.get<size_t>();
    else Bad("unknown raa key '" + k + "'");
  }
  return c;
}

TsumSettings TsumFromJson(const json& j) {
  TsumSettings t;
  if (!j.is_object()) Bad("tsum must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "weights") {
      if (!v.is_array() || v.size() != 3) Bad("tsum.weights must hold three numbers");
      for (int i = 0; i < 3; ++i) t.weights[i] = v[i].get<double>();
    } else if (k == "u_min") {
      t.u_min = v.get<double>();
    } else if (k == "u_max") {
      t.u_max = v.get<double>();
    } else if (k == "cell_size") {
      t.cell_size = v.get<double>();
    } else if (k == "mock_dim") {
      t.mock_dim = v.get<int>();
    } else if (k == "mock_seed") {
      t.mock_seed = v.get<uint64_t>();
    } else {
      Bad("unknown tsum key '" + k + "'");
    }
  }
  return t;
}

}  // namespace

Algo ParseAlgo(std::string_view name) {
  for (const auto& [a, n] : AlgoNames()) {
    if (n == name) return a;
  }
  Bad("unknown algorithm '" + std::string(name) + "' (expected gsac, sac, sacp, bsac, gppo, heu, raa)");
}

std::string AlgoName(Algo a) {
  for (const auto& [x, n] : AlgoNames()) {
    if (x == a) return n;
  }
  return "?";
}

bool IsLearned(Algo a) { return a != Algo::kHeu && a != Algo::kRaa; }

ObsMode ObsModeFor(Algo a) {
  switch (a) {
    case Algo::kGsac:
    case Algo::kGppo:
      return ObsMode::kAugmented;
    case Algo::kSacp:
      return ObsMode::kBaseWithUncertainty;
    default:
      return ObsMode::kBase;
  }
}

const std::vector<TaskSuite>& BuiltinSuites() {
  static const std::vector<TaskSuite> suites = {
      {"waypoint",
       {"go to (30, 45)", "navigate to waypoint (70, 45)", "proceed to the coordinates (25, 30)",
        "go to the location at (75, 30)"}},
      {"context",
       {"proceed to the central fountain", "navigate to the area in front of the left fountain",
        "go to the right fountain"}},
      {"avoid",
       {"go to (50, 75) while avoiding the central fountain",
        "go to (80, 40) while avoiding the exclusion zone"}},
      {"perimeter", {"go around the left fountain", "circumnavigate the central fountain"}},
      {"explore", {"explore the top-right quadrant", "explore the top half of the lake"}},
      {"restricted",
       {"go to (30, 60) while avoiding the right half of the lake",
        "navigate to the right fountain, avoiding the exclusion zone"}},
      {"multigoal",
       {"Start at the dock, navigate around the central fountain, then around the left "
        "fountain, and finally around the right fountain."}},
      {"waypoint-avoid",
       {"go to (30, 45)", "go to (70, 45)", "go to (50, 35) then go to (30, 55)",
        "go to (50, 75) while avoiding the central fountain",
        "go to (80, 40) while avoiding the exclusion zone"}},
  };
  return suites;
}

const TaskSuite& FindSuite(std::string_view category) {
  for (const auto& s : BuiltinSuites()) {
    if (s.category == category) return s;
  }
  Bad("unknown task suite '" + std::string(category) + "'");
}

void ExperimentConfig::Validate() const {
  if (tasks.empty()) Bad("no tasks given");
  if (seeds.empty()) Bad("at least one seed is required");
  if (steps < 0) Bad("steps must be non-negative");
  if (episodes_per_seed < 1) Bad("episodes_per_seed must be at least 1");
  if (category.empty()) Bad("category must not be empty");
  env.Validate();
  sac.Validate();
  ppo.Validate();
  raa.Validate();
  for (double w : tsum.weights) {
    if (!std::isfinite(w)) Bad("tsum weights must be finite");
  }
  if (!(tsum.u_min > 0.0 && tsum.u_min < tsum.u_max)) Bad("need 0 < u_min < u_max");
  if (!(tsum.cell_size > 0.0)) Bad("tsum.cell_size must be positive");
  if (tsum.mock_dim < 2) Bad("tsum.mock_dim must be at least 2");
  if (embeddings != "mock" && !fs::exists(ManifestPath(embeddings))) {
    Bad("embeddings not found at '" + embeddings + "'");
  }
}

json ExperimentConfig::ToJson() const {
  json seeds_j = json::array();
  for (auto s : seeds) seeds_j.push_back(s);
  return {{"algo", AlgoName(algo)},
          {"category", category},
          {"tasks", tasks},
          {"seeds", seeds_j},
          {"steps", steps},
          {"episodes_per_seed", episodes_per_seed},
          {"env", env.ToJson()},
          {"embeddings", embeddings},
          {"tsum",
           {{"weights", tsum.weights},
            {"u_min", tsum.u_min},
            {"u_max", tsum.u_max},
            {"cell_size", tsum.cell_size},
            {"mock_dim", tsum.mock_dim},
            {"mock_seed", tsum.mock_seed}}},
          {"sac", sac.ToJson()},
          {"ppo", ppo.ToJson()},
          {"raa",
           {{"p_max", raa.p_max},
            {"horizon", raa.horizon},
            {"kappa", raa.kappa},
            {"max_labels", raa.max_labels}}}};
}

ExperimentConfig ExperimentConfig::FromJson(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) Bad("experiment config must be a JSON object");
  ExperimentConfig c;
  bool have_category = false;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "algo") {
        c.algo = ParseAlgo(v.get<std::string>());
      } else if (k == "category") {
        c.category = v.get<std::string>();
        have_category = true;
      } else if (k == "suite") {
        const auto& s = FindSuite(v.get<std::string>());
        c.tasks.insert(c.tasks.end(), s.tasks.begin(), s.tasks.end());
        if (!have_category) c.category = s.category;
      } else if (k == "task") {
        c.tasks.push_back(v.get<std::string>());
      } else if (k == "tasks") {
        for (const auto& t : v) c.tasks.push_back(t.get<std::string>());
      } else if (k == "seed") {
        c.seeds = {v.get<uint64_t>()};
      } else if (k == "seeds") {
        c.seeds.clear();
        for (const auto& s : v) c.seeds.push_back(s.get<uint64_t>());
      } else if (k == "steps") {
        c.steps = v.get<long>();
      } else if (k == "episodes_per_seed") {
        c.episodes_per_seed = v.get<int>();
      } else if (k == "env") {
        if (v.is_string()) {
          const fs::path p = Resolve(base_dir, v.get<std::string>());
          std::ifstream in(p);
          if (!in) Bad("cannot read environment file '" + p.string() + "'");
          c.env_json = json::parse(in);
        } else {
          c.env_json = v;
        }
        auto full = c.env_json;
        if (full.is_object() && !full.contains("features")) {
          const json defaults = Vocabulary::Default().ToJson();
          full["features"] = defaults.at("features");
          if (!full.contains("arena") && defaults.contains("arena")) full["arena"] = defaults["arena"];
        }
        c.env = SimConfig::FromJson(full);
      } else if (k == "embeddings") {
        const auto e = v.get<std::string>();
        c.embeddings = e == "mock" ? e : fs::absolute(Resolve(base_dir, e)).string();
      } else if (k == "tsum") {
        c.tsum = TsumFromJson(v);
      } else if (k == "sac") {
        c.sac = SacConfig::FromJson(v);
      } else if (k == "ppo") {
        c.ppo = PpoConfig::FromJson(v);
      } else if (k == "raa") {
        c.raa = RaaFromJson(v);
      } else {
        Bad("unknown config key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    Bad(std::string("experiment config: ") + e.what());
  }
  if (c.env_json.is_null()) c.env_json = c.env.ToJson();
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    Bad("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return FromJson(j, path.parent_path());
}

Tsum BuildTaskTsum(const TaskSpec& spec, const SimConfig& env, const std::string& embeddings,
                   const TsumSettings& settings) {
  EmbeddingTable table;
  if (embeddings == "mock") {
    const auto grid = GridCovering(env.vocab.arena(), settings.cell_size);
    table = BuildMockTable(spec, env.vocab, grid, settings.mock_dim, settings.mock_seed);
  } else {
    table = LoadTable(ManifestPath(embeddings));
  }
  const ComponentWeights w{settings.weights[0], settings.weights[1], settings.weights[2]};
  return BuildTsum(spec, table, DefaultEnvFeatures(env.vocab, table.grid()), DefaultEnvModel(), w,
                   settings.u_min, settings.u_max);
}

std::vector<TaskInstance> BuildTasks(ExperimentConfig& cfg) {
  std::vector<TaskInstance> out;
  int primaries = 0;
  int constraints = 0;
  for (const auto& text : cfg.tasks) {
    TaskInstance t;
    t.text = text;
    t.spec = ParseTask(text, cfg.env.vocab);
    const auto unknown = UnknownReferences(t.spec, cfg.env.vocab);
    if (!unknown.empty()) Bad("task '" + text + "' names unknown feature '" + unknown.front() + "'");
    primaries = std::max(primaries, static_cast<int>(t.spec.primaries.size()));
    constraints = std::max(constraints, static_cast<int>(t.spec.auxiliaries.size()));
    if (NeedsTsum(cfg.algo)) {
      t.tsum = std::make_shared<const Tsum>(
          BuildTaskTsum(t.spec, cfg.env, cfg.embeddings, cfg.tsum));
    }
    out.push_back(std::move(t));
  }
  cfg.env.pad_primaries = std::max(cfg.env.pad_primaries, primaries);
  cfg.env.pad_constraints = std::max(cfg.env.pad_constraints, constraints);
  return out;
}

TrainedRun Train(const ExperimentConfig& cfg, const std::vector<TaskInstance>& tasks,
                 uint64_t seed, const MetricsCallback& on_episode) {
  TrainedRun run;
  run.algo = cfg.algo;
  run.seed = seed;
  if (!IsLearned(cfg.algo)) return run;
  run.steps = cfg.steps;
  SimEnv env(cfg.env, tasks, ObsModeFor(cfg.algo));
  if (cfg.algo == Algo::kGppo) {
    auto r = TrainPpo(env, cfg.ppo, cfg.steps, seed, on_episode);
    run.policy = std::move(r.policy);
    run.metrics = std::move(r.episodes);
    return run;
  }
  SacVariant variant = SacVariant::kStandard;
  if (cfg.algo == Algo::kSacp) variant = SacVariant::kPenalized;
  if (cfg.algo == Algo::kBsac) variant = SacVariant::kBootstrapped;
  auto r = TrainSac(env, cfg.sac, variant, cfg.steps, seed, on_episode);
  run.policy = r.agent.policy();
  run.metrics = std::move(r.episodes);
  return run;
}

namespace {

TrajectoryRow MakeRow(int step, const AsvSim& sim, LocMode eta, double reward, bool collision) {
  TrajectoryRow r;
  r.step = step;
  r.true_pos = sim.true_state().pos;
  r.est_pos = sim.estimator().pos;
  r.u = sim.estimator().u;
  r.eta = eta;
  r.reward = reward;
  r.collision = collision;
  r.violation = sim.evaluator().violated();
  r.complete = sim.evaluator().complete();
  return r;
}

LocMode Override(LocMode m, EtaOverride o) {
  if (o == EtaOverride::kAlwaysExact) return LocMode::kExact;
  if (o == EtaOverride::kNeverExact) return LocMode::kNoisy;
  return m;
}

void Record(EpisodeLog& log, const AsvSim& sim, LocMode eta, const StepOutcome& out, bool keep) {
  log.ret += out.reward;
  log.exact_fixes += out.info.exact_fix ? 1 : 0;
  log.steps = sim.step_count();
  log.collision = log.collision || out.info.collision;
  log.completed_fraction = out.info.completed_fraction;
  log.complete = out.info.task_complete;
  if (keep) log.trajectory.push_back(MakeRow(sim.step_count(), sim, eta, out.reward, out.info.collision));
}

}  // namespace

std::vector<EpisodeLog> Evaluate(const ExperimentConfig& cfg,
                                 const std::vector<TaskInstance>& tasks, const TrainedRun& run,
                                 int episodes, EtaOverride eta, bool keep_trajectories) {
  if (tasks.empty()) throw Error(ErrorCode::kInvalidConfig, "no tasks to evaluate");
  if (IsLearned(run.algo) && !run.policy) {
    throw Error(ErrorCode::kInvalidArgument, "learned run has no policy");
  }
  std::vector<EpisodeLog> logs;
  std::optional<SimEnv> env;
  if (IsLearned(run.algo)) env.emplace(cfg.env, tasks, ObsModeFor(run.algo));
  AsvSim sim(cfg.env);
  std::unique_ptr<Controller> controller;
  if (run.algo == Algo::kHeu) controller = std::make_unique<HeuController>();
  if (run.algo == Algo::kRaa) controller = std::make_unique<RaaController>(cfg.raa);

  for (int e = 0; e < episodes; ++e) {
    EpisodeLog log;
    log.episode = e;
    log.seed = run.seed;
    log.task = static_cast<size_t>(e) % tasks.size();
    const uint64_t ep_seed = DeriveSeed(run.seed, fmt::format("eval:{}", e));
    try {
      if (env) {
        env->PinTask(log.task);
        std::vector<double> obs = env->Reset(ep_seed);
        const AsvSim& s = env->sim();
        if (keep_trajectories) log.trajectory.push_back(MakeRow(0, s, LocMode::kNoisy, 0.0, false));
        log.completed_fraction = s.evaluator().completed_fraction();
        while (true) {
          bool exact = false;
          const auto t = GreedyAction(*run.policy, obs, &exact);
          exact = Override(exact ? LocMode::kExact : LocMode::kNoisy, eta) == LocMode::kExact;
          const EnvStep st = env->Step(t, exact);
          StepOutcome out;
          out.reward = st.reward;
          out.info.exact_fix = st.exact_fix;
          out.info.collision = st.collision;
          out.info.completed_fraction = st.completed_fraction;
          out.info.task_complete = s.evaluator().complete();
          Record(log, s, exact ? LocMode::kExact : LocMode::kNoisy, out, keep_trajectories);
          obs = st.obs;
          if (st.done()) break;
        }
      } else {
        const auto& task = tasks[log.task];
        StepOutcome out = sim.Reset(task.spec, task.tsum, ep_seed);
        controller->Reset(sim);
        if (keep_trajectories) log.trajectory.push_back(MakeRow(0, sim, LocMode::kNoisy, 0.0, false));
        log.completed_fraction = out.info.completed_fraction;
        while (!out.done) {
          Action a = controller->Act(sim);
          a.eta = Override(a.eta, eta);
          out = sim.Step(a);
          Record(log, sim, a.eta, out, keep_trajectories);
        }
      }
    } catch (const Error& err) {
      throw Error(err.code(), fmt::format("seed {} episode {}: {}", run.seed, e, err.what()));
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

double ComputeTcr(std::span<const double> completed_fractions) {
  if (completed_fractions.empty()) throw Error(ErrorCode::kEmptyLogs, "no episodes to score");
  double sum = 0.0;
  for (double f : completed_fractions) sum += f;
  return 100.0 * sum / static_cast<double>(completed_fractions.size());
}

double ComputeTcr(std::span<const EpisodeLog> logs) {
  std::vector<double> f;
  for (const auto& l : logs) f.push_back(l.completed_fraction);
  return ComputeTcr(f);
}

ResultRow Aggregate(const std::string& category, const std::string& algo,
                    std::span<const EpisodeLog> logs) {
  ResultRow r;
  r.task_category = category;
  r.algo = algo;
  r.tcr_percent = ComputeTcr(logs);
  std::map<uint64_t, std::vector<double>> per_seed;
  for (const auto& l : logs) {
    r.avg_reward += l.ret;
    r.avg_exact_fixes += l.exact_fixes;
    per_seed[l.seed].push_back(l.completed_fraction);
  }
  r.n_episodes = static_cast<int>(logs.size());
  r.avg_reward /= r.n_episodes;
  r.avg_exact_fixes /= r.n_episodes;
  std::vector<double> tcrs;
  for (const auto& [seed, f] : per_seed) tcrs.push_back(ComputeTcr(f));
  double mean = 0.0;
  for (double t : tcrs) mean += t;
  mean /= static_cast<double>(tcrs.size());
  double var = 0.0;
  for (double t : tcrs) var += (t - mean) * (t - mean);
  r.seed_spread = std::sqrt(var / static_cast<double>(tcrs.size()));
  return r;
}

std::string EvalCsvHeader() {
  return "episode,seed,task,completed_fraction,return,exact_fixes,steps,collision,complete";
}

std::string EvalCsvRow(const EpisodeLog& l) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", l.episode, l.seed, l.task, l.completed_fraction,
                     l.ret, l.exact_fixes, l.steps, l.collision ? 1 : 0, l.complete ? 1 : 0);
}

std::vector<EpisodeLog> ReadEvalCsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != EvalCsvHeader()) {
    throw Error(ErrorCode::kFormat, "'" + path.string() + "' lacks the evaluation header");
  }
  std::vector<EpisodeLog> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() != 9) throw Error(ErrorCode::kFormat, "bad evaluation row: " + line);
    try {
      EpisodeLog l;
      l.episode = std::stoi(cols[0]);
      l.seed = std::stoull(cols[1]);
      l.task = std::stoul(cols[2]);
      l.completed_fraction = std::stod(cols[3]);
      l.ret = std::stod(cols[4]);
      l.exact_fixes = std::stoi(cols[5]);
      l.steps = std::stoi(cols[6]);
      l.collision = cols[7] == "1";
      l.complete = cols[8] == "1";
      out.push_back(std::move(l));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, "bad evaluation row: " + line);
    }
  }
  return out;
}

std::string ResultCsvHeader() {
  return "task_category,algo,tcr_percent,avg_reward,avg_exact_fixes,n_episodes,seed_spread";
}

std::string ResultCsvRow(const ResultRow& r) {
  return fmt::format("{},{},{},{},{},{},{}", r.task_category, r.algo, r.tcr_percent, r.avg_reward,
                     r.avg_exact_fixes, r.n_episodes, r.seed_spread);
}

}  // namespace guide
