#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guide/guide.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int Report(guide_status s) {
  if (s == GUIDE_OK) return 0;
  std::fprintf(stderr, "guide: %s: %s\n", guide_status_name(s), guide_last_error());
  return guide_status_is_config_error(s) ? kExitConfig : kExitRuntime;
}

// Exit code of the first failing call.
#define GUIDE_TRY(call)                  \
  do {                                   \
    const guide_status st_ = (call);     \
    if (st_ != GUIDE_OK) return Report(st_); \
  } while (0)

std::optional<uint64_t> EnvSeed(bool* bad) {
  const char* v = std::getenv("GUIDE_SEED");
  *bad = false;
  if (!v || !*v) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || v[0] == '-') {
    *bad = true;
    return std::nullopt;
  }
  return s;
}

void PrintSummary(const guide_summary& s) {
  std::printf("tcr_percent=%.4f avg_reward=%.4f avg_exact_fixes=%.4f n_episodes=%d seed_spread=%.4f\n",
              s.tcr_percent, s.avg_reward, s.avg_exact_fixes, s.n_episodes, s.seed_spread);
}

int Parse(const std::string& task, const std::string& vocab_path) {
  guide_vocab* vocab = nullptr;
  GUIDE_TRY(guide_vocab_load(vocab_path.empty() ? nullptr : vocab_path.c_str(), &vocab));
  guide_task* t = nullptr;
  const guide_status st = guide_task_parse(vocab, task.c_str(), &t);
  guide_vocab_free(vocab);
  GUIDE_TRY(st);
  char* json = nullptr;
  const guide_status js = guide_task_json(t, &json);
  guide_task_free(t);
  GUIDE_TRY(js);
  std::printf("%s\n", json);
  guide_string_free(json);
  return 0;
}

int Tsum(const std::string& task, const std::string& vocab_path, const std::string& embeddings,
         const std::string& out) {
  guide_vocab* vocab = nullptr;
  GUIDE_TRY(guide_vocab_load(vocab_path.empty() ? nullptr : vocab_path.c_str(), &vocab));
  guide_task* t = nullptr;
  guide_status st = guide_task_parse(vocab, task.c_str(), &t);
  guide_tsum* tsum = nullptr;
  if (st == GUIDE_OK) st = guide_tsum_build(vocab, t, embeddings.c_str(), &tsum);
  if (st == GUIDE_OK) st = guide_tsum_write_pgm(tsum, out.c_str());
  int nx = 0, ny = 0;
  double cell = 0.0;
  if (st == GUIDE_OK) st = guide_tsum_size(tsum, &nx, &ny, &cell);
  guide_tsum_free(tsum);
  guide_task_free(t);
  guide_vocab_free(vocab);
  GUIDE_TRY(st);
  std::printf("wrote %s (%d x %d cells of %.2f m)\n", out.c_str(), nx, ny, cell);
  return 0;
}

int LoadConfig(const std::string& path, const std::string& algo, std::optional<uint64_t> flag_seed,
               guide_config** out) {
  GUIDE_TRY(guide_config_load(path.c_str(), out));
  if (!algo.empty()) GUIDE_TRY(guide_config_set_algo(*out, algo.c_str()));
  bool bad = false;
  const auto env_seed = EnvSeed(&bad);
  if (bad) {
    std::fprintf(stderr, "guide: GUIDE_SEED must be a non-negative integer\n");
    return kExitConfig;
  }
  if (flag_seed) {
    GUIDE_TRY(guide_config_set_seed(*out, *flag_seed));
  } else if (env_seed) {
    GUIDE_TRY(guide_config_set_seed(*out, *env_seed));
  }
  return 0;
}

void Progress(long step, long episode, double ret, double tcr, void*) {
  if (episode % 50 == 0) {
    std::fprintf(stderr, "  step %ld episode %ld return %.2f tcr %.1f\n", step, episode, ret, tcr);
  }
}

int Train(const std::string& config, const std::string& algo, std::optional<uint64_t> seed,
          const std::string& out, bool verbose) {
  guide_config* cfg = nullptr;
  if (const int rc = LoadConfig(config, algo, seed, &cfg); rc != 0) {
    guide_config_free(cfg);
    return rc;
  }
  const guide_status st = guide_train(cfg, out.c_str(), verbose ? Progress : nullptr, nullptr);
  guide_config_free(cfg);
  GUIDE_TRY(st);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int Experiment(const std::string& config, const std::string& algo, std::optional<uint64_t> seed,
               const std::string& out) {
  guide_config* cfg = nullptr;
  if (const int rc = LoadConfig(config, algo, seed, &cfg); rc != 0) {
    guide_config_free(cfg);
    return rc;
  }
  guide_summary s{};
  const guide_status st = guide_experiment_run(cfg, out.empty() ? nullptr : out.c_str(), &s);
  guide_config_free(cfg);
  GUIDE_TRY(st);
  PrintSummary(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-specific uncertainty guided navigation lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", guide_version());

  std::string task, vocab, embeddings = "mock", out, config, algo, run_dir, log, env, tsum_pgm;
  std::optional<uint64_t> seed;
  std::vector<std::string> runs;
  int episodes = 20;
  bool verbose = false;

  auto* parse = app.add_subcommand("parse", "Parse a task and print its structure as JSON");
  parse->add_option("--task", task, "Task text")->required();
  parse->add_option("--vocab", vocab, "Vocabulary JSON (built-in lake when omitted)");

  auto* tsum = app.add_subcommand("tsum", "Build a task-specific uncertainty map");
  tsum->add_option("--task", task, "Task text")->required();
  tsum->add_option("--vocab", vocab, "Vocabulary JSON (built-in lake when omitted)");
  tsum->add_option("--embeddings", embeddings, "Exported embedding directory or 'mock'");
  tsum->add_option("--out", out, "Output PGM")->required();

  auto* train = app.add_subcommand("train", "Train an agent and write a run directory");
  train->add_option("--algo", algo, "gsac, sac, sacp, bsac, gppo, heu or raa");
  train->add_option("--config", config, "Experiment config JSON")->required();
  train->add_option("--seed", seed, "Seed (overrides GUIDE_SEED and the config)");
  train->add_option("--out", out, "Run directory")->required();
  train->add_flag("-v,--verbose", verbose, "Print training progress");

  auto* eval = app.add_subcommand("eval", "Evaluate a run directory greedily");
  eval->add_option("--run", run_dir, "Run directory")->required();
  eval->add_option("--episodes", episodes, "Episodes")->check(CLI::PositiveNumber);

  auto* table = app.add_subcommand("table", "Aggregate evaluated runs into a results table");
  table->add_option("--runs", runs, "Run directories")->required();
  table->add_option("--out", out, "Output CSV")->required();

  auto* plot = app.add_subcommand("plot", "Render an episode trajectory as SVG");
  plot->add_option("--log", log, "Trajectory CSV")->required();
  plot->add_option("--env", env, "Environment or run config JSON")->required();
  plot->add_option("--tsum", tsum_pgm, "TSUM PGM underlay");
  plot->add_option("--out", out, "Output SVG")->required();

  auto* exp = app.add_subcommand("experiment", "Train and evaluate every seed of a config");
  exp->add_option("--algo", algo, "Algorithm override");
  exp->add_option("--config", config, "Experiment config JSON")->required();
  exp->add_option("--seed", seed, "Run a single seed");
  exp->add_option("--out", out, "Output directory for run directories and results.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*parse) return Parse(task, vocab);
  if (*tsum) return Tsum(task, vocab, embeddings, out);
  if (*train) return Train(config, algo, seed, out, verbose);
  if (*exp) return Experiment(config, algo, seed, out);
  if (*eval) {
    guide_summary s{};
    GUIDE_TRY(guide_evaluate(run_dir.c_str(), episodes, &s));
    PrintSummary(s);
    return 0;
  }
  if (*table) {
    std::vector<const char*> ptrs;
    for (const auto& r : runs) ptrs.push_back(r.c_str());
    GUIDE_TRY(guide_table(ptrs.data(), ptrs.size(), out.c_str()));
    std::printf("wrote %s\n", out.c_str());
    return 0;
  }
  if (*plot) {
    GUIDE_TRY(guide_plot(log.c_str(), env.c_str(), tsum_pgm.empty() ? nullptr : tsum_pgm.c_str(),
                         out.c_str()));
    std::printf("wrote %s\n", out.c_str());
    return 0;
  }
  return kExitConfig;
}
