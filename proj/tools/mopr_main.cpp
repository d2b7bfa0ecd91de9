// Batch CLI over the mopr C API. Subcommands: gen-tasks, evolve, eval,
// replay, report. Exit codes: 0 success, 2 config/schema error, 3 missing
// input, 4 internal invariant violation.

#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "mopr/mopr.h"

namespace {

struct ConfigDeleter {
  void operator()(mopr_config* cfg) const { mopr_config_free(cfg); }
};
using ConfigHandle = std::unique_ptr<mopr_config, ConfigDeleter>;

int fail(mopr_status status) {
  std::fprintf(stderr, "error: %s\n", mopr_last_error());
  return static_cast<int>(status);
}

// Builds a config handle from --config plus CLI overrides.
int make_config(const std::string& config_path, const std::string& seed,
                const std::string& variant, ConfigHandle& out) {
  mopr_config* raw = nullptr;
  mopr_status status = config_path.empty()
                           ? mopr_config_default(&raw)
                           : mopr_config_load(config_path.c_str(), &raw);
  if (status != MOPR_OK) return fail(status);
  out.reset(raw);
  if (!seed.empty()) {
    status = mopr_config_set(out.get(), "seed", seed.c_str());
    if (status != MOPR_OK) return fail(status);
  }
  if (!variant.empty()) {
    status = mopr_config_set(out.get(), "variant", variant.c_str());
    if (status != MOPR_OK) return fail(status);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-objective policy repair pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", seed, variant;
  std::string suite_path, policy_path, candidates_path, run_dir, rollout =
                                                                     "argmax";
  int n_seeds = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key = value)");
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* gen = app.add_subcommand("gen-tasks", "generate a task suite");
  add_common(gen);

  auto* evolve = app.add_subcommand("evolve", "run self-evolution rounds");
  add_common(evolve);
  evolve->add_option("--suite", suite_path, "task suite JSONL")->required();
  evolve->add_option("--variant", variant, "ablation variant name");
  evolve->add_option("--seeds", n_seeds, "number of seeded runs");

  auto* eval = app.add_subcommand("eval", "evaluate a policy snapshot");
  eval->add_option("--policy", policy_path, "policy JSON")->required();
  eval->add_option("--suite", suite_path, "task suite JSONL")->required();
  eval->add_option("--out", out_dir, "output directory");
  eval->add_option("--rollout", rollout, "argmax or sample");
  eval->add_option("--seed", seed, "sampling seed");

  auto* replay = app.add_subcommand(
      "replay", "build a replay buffer from a candidate log");
  add_common(replay);
  replay->add_option("--candidates", candidates_path, "candidate log JSONL")
      ->required();
  replay->add_option("--variant", variant, "ablation variant name");

  auto* report = app.add_subcommand("report", "aggregate run metrics");
  report->add_option("--run", run_dir, "evolve output directory")->required();
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed() || evolve->parsed() || replay->parsed()) {
    ConfigHandle cfg;
    if (int rc = make_config(config_path, seed, variant, cfg)) return rc;
    mopr_status status = MOPR_OK;
    if (gen->parsed()) {
      status = mopr_cmd_gen_tasks(cfg.get(), out_dir.c_str());
    } else if (evolve->parsed()) {
      status = mopr_cmd_evolve(cfg.get(), suite_path.c_str(), out_dir.c_str(),
                               n_seeds);
    } else {
      status =
          mopr_cmd_replay(cfg.get(), candidates_path.c_str(), out_dir.c_str());
    }
    return status == MOPR_OK ? 0 : fail(status);
  }

  if (eval->parsed()) {
    uint64_t eval_seed = seed.empty() ? 0ull : std::stoull(seed);
    mopr_status status =
        mopr_cmd_eval(policy_path.c_str(), suite_path.c_str(), out_dir.c_str(),
                      rollout.c_str(), eval_seed);
    return status == MOPR_OK ? 0 : fail(status);
  }

  mopr_status status = mopr_cmd_report(run_dir.c_str(), out_dir.c_str());
  return status == MOPR_OK ? 0 : fail(status);
}
