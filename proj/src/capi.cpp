#include "mopr/mopr.h"

#include <string>

#include "mopr/commands.hpp"

namespace {

thread_local std::string g_last_error;

mopr_status set_error(mopr_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
mopr_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MOPR_OK;
  } catch (const mopr::Error& e) {
    return set_error(static_cast<mopr_status>(static_cast<int>(e.code())),
                     e.what());
  } catch (const std::exception& e) {
    return set_error(MOPR_ERR_INTERNAL, e.what());
  }
}

mopr::evolve::RolloutMode parse_rollout(const char* rollout) {
  std::string s = rollout ? rollout : "argmax";
  if (s == "argmax") return mopr::evolve::RolloutMode::Argmax;
  if (s == "sample") return mopr::evolve::RolloutMode::Sample;
  throw mopr::Error(mopr::ErrorCode::Config,
                    "rollout must be argmax or sample");
}

}  // namespace

struct mopr_config {
  mopr::RunConfig cfg;
};

extern "C" {

const char* mopr_version(void) { return "1.0.0"; }

const char* mopr_last_error(void) { return g_last_error.c_str(); }

mopr_status mopr_config_default(mopr_config** out) {
  return guarded([&] {
    if (!out) throw mopr::Error(mopr::ErrorCode::Config, "null out pointer");
    *out = new mopr_config{};
  });
}

mopr_status mopr_config_load(const char* path, mopr_config** out) {
  return guarded([&] {
    if (!path || !out) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    auto cfg = mopr::load_config(path);
    *out = new mopr_config{std::move(cfg)};
  });
}

mopr_status mopr_config_set(mopr_config* cfg, const char* key,
                            const char* value) {
  return guarded([&] {
    if (!cfg || !key || !value) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    mopr::apply_config_override(cfg->cfg, key, value);
    mopr::validate_config(cfg->cfg);
  });
}

void mopr_config_free(mopr_config* cfg) { delete cfg; }

mopr_status mopr_cmd_gen_tasks(const mopr_config* cfg, const char* out_dir) {
  return guarded([&] {
    if (!cfg || !out_dir) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    mopr::cmd::gen_tasks(cfg->cfg, out_dir);
  });
}

mopr_status mopr_cmd_evolve(const mopr_config* cfg, const char* suite_path,
                            const char* out_dir, int n_seeds) {
  return guarded([&] {
    if (!cfg || !suite_path || !out_dir) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    mopr::cmd::evolve_run(cfg->cfg, suite_path, out_dir, n_seeds);
  });
}

mopr_status mopr_cmd_replay(const mopr_config* cfg,
                            const char* candidates_path, const char* out_dir) {
  return guarded([&] {
    if (!cfg || !candidates_path || !out_dir) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    mopr::cmd::replay_offline(cfg->cfg, candidates_path, out_dir);
  });
}

mopr_status mopr_cmd_eval(const char* policy_path, const char* suite_path,
                          const char* out_dir, const char* rollout,
                          uint64_t seed) {
  return guarded([&] {
    if (!policy_path || !suite_path || !out_dir) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    mopr::cmd::eval_policy(policy_path, suite_path, out_dir,
                           parse_rollout(rollout), seed);
  });
}

mopr_status mopr_cmd_report(const char* run_dir, const char* out_dir) {
  return guarded([&] {
    if (!run_dir || !out_dir) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    mopr::cmd::report(run_dir, out_dir);
  });
}

mopr_status mopr_eval_metrics(const char* policy_path, const char* suite_path,
                              const char* rollout, uint64_t seed,
                              double metrics_out[5]) {
  return guarded([&] {
    if (!policy_path || !suite_path || !metrics_out) {
      throw mopr::Error(mopr::ErrorCode::Config, "null argument");
    }
    auto params = mopr::io::read_policy(policy_path);
    auto suite = mopr::io::read_suite(suite_path);
    auto m =
        mopr::evolve::evaluate(params, suite, parse_rollout(rollout), seed);
    metrics_out[0] = m.asr;
    metrics_out[1] = m.tsr;
    metrics_out[2] = m.brr;
    metrics_out[3] = m.hcr;
    metrics_out[4] = m.vrr;
  });
}

}  // extern "C"
