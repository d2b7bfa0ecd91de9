#pragma once

// Flat key = value run configuration. One file drives suite generation,
// evolution, and offline replay; unknown keys are rejected and every value
// is validated with the offending key named in the error.

#include "mopr/evolve.hpp"

namespace mopr {

struct RunConfig {
  uint64_t seed = 7;

  // world
  int horizon = world::kDefaultHorizon;
  int n_benign = 10;
  int n_attacked = 10;
  int n_harmful = 10;
  double dev_fraction = 0.5;

  // supervision construction
  double lambda = 1.0;
  double beta = 5.0;
  double kappa_sec = 0.5;
  SelectStrategy strategy = SelectStrategy::Top1;
  std::array<double, 4> weights_benign{0.20, 0.35, 0.25, 0.20};
  std::array<double, 4> weights_attacked{0.35, 0.30, 0.15, 0.20};
  std::array<double, 4> weights_harmful{0.45, 0.10, 0.30, 0.15};
  std::array<double, 3> kappa_benign{0.70, 0.80, 0.70};    // util, or, ctrl
  std::array<double, 3> kappa_attacked{0.60, 0.70, 0.70};
  std::array<double, 3> kappa_harmful{0.20, 0.80, 0.70};

  // evolution
  int rounds = 2;
  int repair_candidates = 8;
  int group_size = 8;
  int replay_cap = 2048;
  double temperature = 0.7;
  evolve::Variant variant = evolve::Variant::Full;
  evolve::RolloutMode mining = evolve::RolloutMode::Argmax;
  evolve::RolloutMode eval_rollout = evolve::RolloutMode::Argmax;
  std::string init_policy = "biased";  // biased | uniform

  // training
  TrainConfig train;

  evolve::EvolveConfig evolve_config() const;
  evolve::Profiles profiles() const;
};

// Parses a config file. Missing keys keep their defaults.
RunConfig load_config(const std::string& path);

// Applies a single "key=value" assignment (CLI overrides).
void apply_config_override(RunConfig& cfg, const std::string& key,
                           const std::string& value);

// Canonical text form: every key, sorted, full float precision.
std::string serialize_config(const RunConfig& cfg);

// Re-checks cross-field invariants; throws Error(Config) naming the key.
void validate_config(const RunConfig& cfg);

}  // namespace mopr
