#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "mopr/mopr.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("mopr_capi_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config handle lifecycle and validation") {
  mopr_config* cfg = nullptr;
  REQUIRE(mopr_config_default(&cfg) == MOPR_OK);
  REQUIRE(cfg != nullptr);

  CHECK(mopr_config_set(cfg, "seed", "11") == MOPR_OK);
  CHECK(mopr_config_set(cfg, "beta", "2.0") == MOPR_OK);

  SUBCASE("unknown key is a config error with a message") {
    CHECK(mopr_config_set(cfg, "not_a_key", "1") == MOPR_ERR_CONFIG);
    CHECK(std::strstr(mopr_last_error(), "not_a_key") != nullptr);
  }

  SUBCASE("invalid value is a config error") {
    CHECK(mopr_config_set(cfg, "clip_eps", "1.5") == MOPR_ERR_CONFIG);
  }

  mopr_config_free(cfg);
}

TEST_CASE("command surface end to end") {
  TempDir dir;
  mopr_config* cfg = nullptr;
  REQUIRE(mopr_config_default(&cfg) == MOPR_OK);
  REQUIRE(mopr_config_set(cfg, "n_benign", "4") == MOPR_OK);
  REQUIRE(mopr_config_set(cfg, "n_attacked", "4") == MOPR_OK);
  REQUIRE(mopr_config_set(cfg, "n_harmful", "4") == MOPR_OK);

  std::string out = (dir.path / "suite").string();
  REQUIRE(mopr_cmd_gen_tasks(cfg, out.c_str()) == MOPR_OK);
  std::string suite = (dir.path / "suite" / "tasks.jsonl").string();
  CHECK(fs::exists(suite));

  std::string run = (dir.path / "run").string();
  REQUIRE(mopr_cmd_evolve(cfg, suite.c_str(), run.c_str(), 1) == MOPR_OK);
  std::string policy = (dir.path / "run" / "policy_round_2.json").string();
  CHECK(fs::exists(policy));

  double metrics[5] = {-1, -1, -1, -1, -1};
  REQUIRE(mopr_eval_metrics(policy.c_str(), suite.c_str(), "argmax", 0,
                            metrics) == MOPR_OK);
  for (double v : metrics) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  std::string eval_out = (dir.path / "eval").string();
  CHECK(mopr_cmd_eval(policy.c_str(), suite.c_str(), eval_out.c_str(),
                      "argmax", 0) == MOPR_OK);
  std::string candidates =
      (dir.path / "run" / "candidates_round_1.jsonl").string();
  std::string replay_out = (dir.path / "offline").string();
  CHECK(mopr_cmd_replay(cfg, candidates.c_str(), replay_out.c_str()) ==
        MOPR_OK);
  std::string report_out = (dir.path / "report").string();
  CHECK(mopr_cmd_report(run.c_str(), report_out.c_str()) == MOPR_OK);

  SUBCASE("missing inputs surface as missing-input status") {
    CHECK(mopr_cmd_evolve(cfg, (dir.path / "none.jsonl").string().c_str(),
                          run.c_str(), 1) == MOPR_ERR_MISSING_INPUT);
    CHECK(mopr_eval_metrics((dir.path / "none.json").string().c_str(),
                            suite.c_str(), "argmax", 0,
                            metrics) == MOPR_ERR_MISSING_INPUT);
  }

  SUBCASE("bad rollout name is a config error") {
    CHECK(mopr_eval_metrics(policy.c_str(), suite.c_str(), "greedy", 0,
                            metrics) == MOPR_ERR_CONFIG);
  }

  mopr_config_free(cfg);
}

TEST_CASE("null arguments are rejected") {
  CHECK(mopr_config_default(nullptr) == MOPR_ERR_CONFIG);
  CHECK(mopr_cmd_report(nullptr, "x") == MOPR_ERR_CONFIG);
  CHECK(mopr_version() != nullptr);
}
