#include "guide/guide.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include <json.hpp>

#include "guide/core/error.hpp"
#include "guide/core/task.hpp"
#include "guide/core/tsum.hpp"
#include "guide/harness/experiment.hpp"
#include "guide/harness/run_io.hpp"

struct guide_vocab {
  guide::Vocabulary vocab;
};

struct guide_task {
  guide::Vocabulary vocab;
  guide::TaskSpec spec;
};

struct guide_tsum {
  guide::Tsum tsum;
};

struct guide_config {
  guide::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

guide_status Fail(guide_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
guide_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return GUIDE_OK;
  } catch (const guide::Error& e) {
    return Fail(static_cast<guide_status>(static_cast<int>(e.code()) + 1), e.what());
  } catch (const nlohmann::json::exception& e) {
    return Fail(GUIDE_E_FORMAT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Fail(GUIDE_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(GUIDE_E_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return Fail(GUIDE_E_RUNTIME, e.what());
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw guide::Error(guide::ErrorCode::kInvalidArgument, what);
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Fill(guide_summary* out, const guide::ResultRow& r) {
  if (!out) return;
  out->tcr_percent = r.tcr_percent;
  out->avg_reward = r.avg_reward;
  out->avg_exact_fixes = r.avg_exact_fixes;
  out->n_episodes = r.n_episodes;
  out->seed_spread = r.seed_spread;
}

guide::SimConfig LoadEnv(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(guide::ReadText(path));
  if (j.is_object() && j.contains("env") && j.contains("algo")) {
    return guide::ExperimentConfig::FromJson(j, path.parent_path()).env;
  }
  if (j.is_object() && !j.contains("features")) {
    const auto defaults = guide::Vocabulary::Default().ToJson();
    j["features"] = defaults.at("features");
    if (!j.contains("arena") && defaults.contains("arena")) j["arena"] = defaults["arena"];
  }
  return guide::SimConfig::FromJson(j);
}

}  // namespace

extern "C" {

const char* guide_version(void) { return "1.0.0"; }

const char* guide_status_name(guide_status status) {
  if (status == GUIDE_OK) return "Ok";
  if (status < GUIDE_OK || status > GUIDE_E_RUNTIME) return "Unknown";
  return guide::ErrorCodeName(static_cast<guide::ErrorCode>(static_cast<int>(status) - 1));
}

const char* guide_last_error(void) { return g_last_error.c_str(); }

int guide_status_is_config_error(guide_status status) {
  switch (status) {
    case GUIDE_E_INVALID_ARGUMENT:
    case GUIDE_E_EMPTY_TASK:
    case GUIDE_E_UNKNOWN_SYMBOL:
    case GUIDE_E_NO_OBJECTIVE:
    case GUIDE_E_MISSING_KEY:
    case GUIDE_E_INVALID_CONFIG:
      return 1;
    default:
      return 0;
  }
}

void guide_string_free(char* s) { std::free(s); }

guide_status guide_vocab_load(const char* path, guide_vocab** out) {
  return Guard([&] {
    Require(out != nullptr, "out is null");
    *out = nullptr;
    auto v = std::make_unique<guide_vocab>();
    v->vocab = path ? guide::Vocabulary::Load(path) : guide::Vocabulary::Default();
    *out = v.release();
  });
}

void guide_vocab_free(guide_vocab* vocab) { delete vocab; }

guide_status guide_task_parse(const guide_vocab* vocab, const char* text, guide_task** out) {
  return Guard([&] {
    Require(vocab && text && out, "null argument");
    *out = nullptr;
    auto t = std::make_unique<guide_task>();
    t->vocab = vocab->vocab;
    t->spec = guide::ParseTask(text, vocab->vocab);
    const auto unknown = guide::UnknownReferences(t->spec, vocab->vocab);
    if (!unknown.empty()) {
      throw guide::Error(guide::ErrorCode::kUnknownSymbol, "unknown feature '" + unknown.front() + "'");
    }
    *out = t.release();
  });
}

guide_status guide_task_json(const guide_task* task, char** out_json) {
  return Guard([&] {
    Require(task && out_json, "null argument");
    *out_json = Dup(guide::ToJson(task->spec).dump(2));
  });
}

void guide_task_free(guide_task* task) { delete task; }

guide_status guide_tsum_build(const guide_vocab* vocab, const guide_task* task,
                              const char* embeddings, guide_tsum** out) {
  return Guard([&] {
    Require(vocab && task && embeddings && out, "null argument");
    *out = nullptr;
    guide::SimConfig env;
    env.vocab = vocab->vocab;
    auto t = std::make_unique<guide_tsum>();
    t->tsum = guide::BuildTaskTsum(task->spec, env, embeddings, guide::TsumSettings{});
    *out = t.release();
  });
}

guide_status guide_tsum_size(const guide_tsum* tsum, int* nx, int* ny, double* cell_size) {
  return Guard([&] {
    Require(tsum != nullptr, "tsum is null");
    if (nx) *nx = tsum->tsum.grid.nx;
    if (ny) *ny = tsum->tsum.grid.ny;
    if (cell_size) *cell_size = tsum->tsum.grid.cell_size;
  });
}

guide_status guide_tsum_sample(const guide_tsum* tsum, double x, double y, double* out) {
  return Guard([&] {
    Require(tsum && out, "null argument");
    *out = guide::Sample(tsum->tsum, {x, y});
  });
}

guide_status guide_tsum_write_pgm(const guide_tsum* tsum, const char* path) {
  return Guard([&] {
    Require(tsum && path, "null argument");
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    guide::WritePgm(guide::ToRaster(tsum->tsum), p);
  });
}

void guide_tsum_free(guide_tsum* tsum) { delete tsum; }

guide_status guide_config_load(const char* path, guide_config** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    *out = nullptr;
    auto c = std::make_unique<guide_config>();
    c->cfg = guide::ExperimentConfig::Load(path);
    *out = c.release();
  });
}

guide_status guide_config_from_json(const char* json, guide_config** out) {
  return Guard([&] {
    Require(json && out, "null argument");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw guide::Error(guide::ErrorCode::kInvalidConfig, e.what());
    }
    auto c = std::make_unique<guide_config>();
    c->cfg = guide::ExperimentConfig::FromJson(j);
    *out = c.release();
  });
}

guide_status guide_config_set_algo(guide_config* cfg, const char* algo) {
  return Guard([&] {
    Require(cfg != nullptr, "config is null");
    if (algo) cfg->cfg.algo = guide::ParseAlgo(algo);
  });
}

guide_status guide_config_set_seed(guide_config* cfg, uint64_t seed) {
  return Guard([&] {
    Require(cfg != nullptr, "config is null");
    cfg->cfg.seeds = {seed};
  });
}

guide_status guide_config_json(const guide_config* cfg, char** out_json) {
  return Guard([&] {
    Require(cfg && out_json, "null argument");
    *out_json = Dup(cfg->cfg.ToJson().dump(2));
  });
}

void guide_config_free(guide_config* cfg) { delete cfg; }

guide_status guide_train(const guide_config* cfg, const char* out_dir, guide_progress_fn progress,
                         void* user) {
  return Guard([&] {
    Require(cfg && out_dir, "null argument");
    guide::ExperimentConfig c = cfg->cfg;
    const uint64_t seed = c.seeds.front();
    c.seeds = {seed};
    const auto tasks = guide::BuildTasks(c);
    guide::MetricsCallback cb;
    if (progress) {
      cb = [&](const guide::EpisodeMetrics& m) { progress(m.step, m.episode, m.ret, m.tcr, user); };
    }
    const auto run = guide::Train(c, tasks, seed, cb);
    guide::SaveRun(out_dir, c, run);
  });
}

guide_status guide_evaluate(const char* run_dir, int episodes, guide_summary* out) {
  return Guard([&] {
    Require(run_dir != nullptr, "run_dir is null");
    if (episodes < 1) throw guide::Error(guide::ErrorCode::kInvalidArgument, "episodes must be >= 1");
    auto loaded = guide::LoadRun(run_dir);
    const auto tasks = guide::BuildTasks(loaded.config);
    const auto logs = guide::Evaluate(loaded.config, tasks, loaded.run, episodes,
                                      guide::EtaOverride::kPolicy, true);
    guide::SaveEvaluation(run_dir, logs);
    Fill(out, guide::Aggregate(loaded.config.category, guide::AlgoName(loaded.run.algo), logs));
  });
}

guide_status guide_experiment_run(const guide_config* cfg, const char* out_dir,
                                  guide_summary* out) {
  return Guard([&] {
    Require(cfg != nullptr, "config is null");
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = out_dir;
    Fill(out, guide::RunExperiment(cfg->cfg, dir).row);
  });
}

guide_status guide_table(const char* const* run_dirs, size_t n, const char* out_csv) {
  return Guard([&] {
    Require(run_dirs && out_csv && n > 0, "no run directories");
    std::vector<std::filesystem::path> dirs;
    for (size_t i = 0; i < n; ++i) {
      Require(run_dirs[i] != nullptr, "null run directory");
      dirs.emplace_back(run_dirs[i]);
    }
    const auto rows = guide::TableFromRuns(dirs);
    guide::WriteResultCsv(out_csv, rows);
  });
}

guide_status guide_plot(const char* log_csv, const char* env_json, const char* tsum_pgm,
                        const char* out_svg) {
  return Guard([&] {
    Require(log_csv && env_json && out_svg, "null argument");
    const auto env = LoadEnv(env_json);
    const auto log = guide::ReadTrajectoryCsv(log_csv);
    if (log.empty()) throw guide::Error(guide::ErrorCode::kEmptyLogs, "trajectory has no rows");
    std::optional<guide::Raster> raster;
    if (tsum_pgm) raster = guide::ReadPgm(tsum_pgm);
    guide::WriteText(out_svg, guide::RenderTrajectorySvg(log, env, raster ? &*raster : nullptr));
  });
}

}  // extern "C"
