#pragma once

// Tabular autoregressive softmax policy over an action alphabet, conditioned
// on a context key. Logits decompose into a context-group row plus an
// exact-context row, so supervision applied under a repair context carries
// over to task contexts of the same group. Reads are safe concurrently;
// updates require exclusive access (single writer, copyable values).

#include <map>

#include "mopr/types.hpp"

namespace mopr {

struct ContextKey {
  enum class Kind { Task, Repair };

  Kind kind = Kind::Task;
  TaskMode mode = TaskMode::Benign;
  std::string goal_sig;         // compact goal signature, "none" if no goal
  int task_id = 0;
  uint8_t violation_flags = 0;  // repair contexts only
  uint64_t failed_hash = 0;     // repair contexts only

  // Full identity, e.g. "repair/4/attacked_legitimate/r1a1/f3/ha1b2...".
  std::string exact_key() const;
  // Shared across kinds within (mode, goal signature).
  std::string group_key() const;

  bool operator==(const ContextKey& o) const {
    return exact_key() == o.exact_key();
  }
};

ContextKey task_context(TaskMode mode, const std::string& goal_sig,
                        int task_id);
ContextKey repair_context(TaskMode mode, const std::string& goal_sig,
                          int task_id, uint8_t violation_flags,
                          uint64_t failed_hash);

// Logit row per (table key, step); rows absent from both tables read as
// zeros, i.e. the uniform policy.
using LogitTable = std::map<std::string, std::vector<std::vector<double>>>;

struct PolicyParams {
  int horizon = 4;
  Alphabet alphabet;
  LogitTable group_logits;
  LogitTable ctx_logits;

  std::vector<double> step_logits(const ContextKey& ctx, int step) const;
  std::vector<double>& group_row(const std::string& key, int step);
  std::vector<double>& ctx_row(const std::string& key, int step);
};

PolicyParams make_uniform_policy(const Alphabet& alphabet, int horizon);

// Softmax of the combined logit row at the given temperature (1 = policy
// itself). Sums to one; max-subtracted for stability.
std::vector<double> step_distribution(const PolicyParams& params,
                                      const ContextKey& ctx, int step,
                                      double temperature = 1.0);

struct SampledTrajectory {
  Trajectory actions;
  double log_prob = 0.0;  // under the temperature-adjusted distribution
};

// Autoregressive sampling for up to horizon steps with early stop on
// terminal symbols. temperature == 0 selects the argmax path (ties broken
// by lowest action index). Deterministic given the seed.
SampledTrajectory sample_trajectory(const PolicyParams& params,
                                    const ContextKey& ctx, double temperature,
                                    uint64_t seed);

// Argmax rollout (the temperature -> 0 limit of sample_trajectory).
Trajectory argmax_trajectory(const PolicyParams& params,
                             const ContextKey& ctx);

// Exact temperature-1 sequence log-probability. Trajectories the policy
// cannot emit (terminal mid-sequence, short non-terminal endings) get -inf.
double log_prob(const PolicyParams& params, const ContextKey& ctx,
                const Trajectory& traj);

// Exhaustive enumeration of the trajectory distribution from a context,
// honoring terminal early stopping. Throws when |alphabet|^horizon > 1e5.
std::vector<std::pair<Trajectory, double>> enumerate_distribution(
    const PolicyParams& params, const ContextKey& ctx,
    double temperature = 1.0);

// Deep copy whose rows stay fixed under later updates to the source.
PolicyParams clone_frozen(const PolicyParams& params);

// Exact per-step KL(params || ref) over the alphabet, averaged over the
// first `steps` steps (the steps reached by an evaluated completion).
double exact_token_kl(const PolicyParams& params, const PolicyParams& ref,
                      const ContextKey& ctx, int steps);

}  // namespace mopr
