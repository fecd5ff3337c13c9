#include <math.h>
#include <stdio.h>
#include <string.h>

#include "guide/guide.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static int progress_calls = 0;

static void on_progress(long step, long episode, double ret, double tcr, void* user) {
  (void)step;
  (void)episode;
  (void)ret;
  (void)tcr;
  ++*(int*)user;
}

int main(void) {
  guide_vocab* vocab = NULL;
  guide_task* task = NULL;
  guide_task* bad = NULL;
  guide_tsum* tsum = NULL;
  guide_config* cfg = NULL;
  char* json = NULL;
  guide_summary summary;
  int nx = 0, ny = 0;
  double cell = 0.0, u = 0.0;

  CHECK(strcmp(guide_status_name(GUIDE_OK), "Ok") == 0);
  CHECK(strcmp(guide_status_name(GUIDE_E_NO_SAFE_PATH), "NoSafePath") == 0);
  CHECK(strcmp(guide_status_name((guide_status)999), "Unknown") == 0);
  CHECK(guide_status_is_config_error(GUIDE_E_INVALID_CONFIG));
  CHECK(!guide_status_is_config_error(GUIDE_E_IO));

  CHECK(guide_vocab_load(NULL, &vocab) == GUIDE_OK);
  CHECK(guide_vocab_load("/no/such/vocab.json", &vocab) != GUIDE_OK);
  CHECK(strlen(guide_last_error()) > 0);
  guide_vocab_free(vocab);
  vocab = NULL;
  CHECK(guide_vocab_load(NULL, &vocab) == GUIDE_OK);
  CHECK(strlen(guide_last_error()) == 0);

  CHECK(guide_task_parse(vocab, "go to (50, 75) while avoiding the central fountain", &task) == GUIDE_OK);
  CHECK(guide_task_json(task, &json) == GUIDE_OK);
  CHECK(json && strstr(json, "goal_waypoint") && strstr(json, "avoid_landmark"));
  guide_string_free(json);

  CHECK(guide_task_parse(vocab, "fly to the moon", &bad) == GUIDE_E_UNKNOWN_SYMBOL);
  CHECK(bad == NULL);
  CHECK(guide_task_parse(vocab, "", &bad) == GUIDE_E_EMPTY_TASK);
  CHECK(guide_task_parse(NULL, "go to (1, 1)", &bad) == GUIDE_E_INVALID_ARGUMENT);

  CHECK(guide_tsum_build(vocab, task, "mock", &tsum) == GUIDE_OK);
  CHECK(guide_tsum_size(tsum, &nx, &ny, &cell) == GUIDE_OK);
  CHECK(nx == 20 && ny == 20 && fabs(cell - 5.0) < 1e-12);
  CHECK(guide_tsum_sample(tsum, 50.0, 75.0, &u) == GUIDE_OK);
  CHECK(u >= 0.1 && u <= 2.0);
  CHECK(guide_tsum_build(vocab, task, "/no/such/table", &tsum) != GUIDE_OK);
  guide_tsum_free(tsum);

  CHECK(guide_config_from_json("{\"algo\": \"dqn\", \"task\": \"go to (1, 1)\"}", &cfg) ==
        GUIDE_E_INVALID_CONFIG);
  CHECK(guide_config_from_json("not json", &cfg) == GUIDE_E_INVALID_CONFIG);
  CHECK(guide_config_from_json(
            "{\"algo\": \"heu\", \"task\": \"go to (50, 20)\", \"seeds\": [1, 2], "
            "\"episodes_per_seed\": 2, \"env\": {\"sim\": {\"max_steps\": 200}}}",
            &cfg) == GUIDE_OK);
  CHECK(guide_experiment_run(cfg, NULL, &summary) == GUIDE_OK);
  CHECK(summary.n_episodes == 4);
  CHECK(summary.tcr_percent >= 0.0 && summary.tcr_percent <= 100.0);
  CHECK(guide_config_set_algo(cfg, "raa") == GUIDE_OK);
  CHECK(guide_config_set_algo(cfg, "nope") == GUIDE_E_INVALID_CONFIG);
  CHECK(guide_config_set_seed(cfg, 9) == GUIDE_OK);
  CHECK(guide_config_json(cfg, &json) == GUIDE_OK);
  CHECK(json && strstr(json, "\"raa\""));
  guide_string_free(json);
  guide_config_free(cfg);

  CHECK(guide_config_from_json(
            "{\"algo\": \"sac\", \"task\": \"go to (50, 20)\", \"steps\": 400, "
            "\"env\": {\"sim\": {\"max_steps\": 50}}, "
            "\"sac\": {\"hidden\": 8, \"batch\": 8, \"warmup_steps\": 100}}",
            &cfg) == GUIDE_OK);
  CHECK(guide_train(cfg, "capi_test_run", on_progress, &progress_calls) == GUIDE_OK);
  CHECK(progress_calls > 0);
  CHECK(guide_evaluate("capi_test_run", 2, &summary) == GUIDE_OK);
  CHECK(summary.n_episodes == 2);
  CHECK(guide_evaluate("capi_test_run", 0, &summary) == GUIDE_E_INVALID_ARGUMENT);
  CHECK(guide_evaluate("no_such_run", 2, &summary) == GUIDE_E_IO);
  {
    const char* runs[] = {"capi_test_run"};
    CHECK(guide_table(runs, 1, "capi_test_run/results.csv") == GUIDE_OK);
  }
  CHECK(guide_plot("capi_test_run/trajectories/episode_000.csv", "capi_test_run/config.json", NULL,
                   "capi_test_run/episode_000.svg") == GUIDE_OK);
  guide_config_free(cfg);

  guide_task_free(task);
  guide_vocab_free(vocab);
  if (failures == 0) printf("capi: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
