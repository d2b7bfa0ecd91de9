#pragma once

// Policy refinement: supervised fine-tuning on replay entries and clipped
// group-relative policy optimization with an exact per-token KL penalty,
// both with analytic gradients over the touched logit rows, plus a central
// finite-difference gradient checker.

#include <functional>
#include <map>

#include "mopr/policy.hpp"

namespace mopr {

// (repair context, selected repair, re-scored objective vector)
struct ReplayEntry {
  ContextKey ctx;
  Trajectory repair;
  ObjectiveVector score;
};

// One optimization group: G completions sampled under theta_old for a
// single repair context, with their temperature-1 sequence log-probs and
// verifier-derived rewards.
struct RolloutGroup {
  ContextKey ctx;
  std::vector<Trajectory> completions;
  std::vector<double> old_log_probs;
  std::vector<double> rewards;
};

struct TrainConfig {
  double sft_lr = 0.5;
  int sft_epochs = 300;
  double group_lr = 0.1;
  int group_epochs = 2;    // gradient epochs per sampled group set
  double clip_eps = 0.2;
  double kl_coef = 0.01;
  bool resample_per_epoch = false;
};

// Sparse gradient over logit rows, mirroring the two policy tables.
struct LogitGrad {
  std::map<std::string, std::map<int, std::vector<double>>> group;
  std::map<std::string, std::map<int, std::vector<double>>> ctx;

  std::vector<double>& group_row(const std::string& key, int step, int n);
  std::vector<double>& ctx_row(const std::string& key, int step, int n);
};

// theta <- theta - lr * grad, creating absent rows on demand.
void apply_gradient(PolicyParams& params, const LogitGrad& grad, double lr);

// Mean negative log-likelihood of the repairs given their contexts, with
// the analytic gradient. Loss covers completion actions only.
std::pair<double, LogitGrad> sft_loss_and_grad(
    const PolicyParams& params, const std::vector<ReplayEntry>& replay);

struct SftResult {
  PolicyParams params;
  std::vector<double> epoch_losses;
};

// Full-batch gradient descent for cfg.sft_epochs epochs. Throws on empty
// replay.
SftResult sft_update(const PolicyParams& params,
                     const std::vector<ReplayEntry>& replay,
                     const TrainConfig& cfg);

// Group-relative advantages: rewards minus the group mean. Throws if the
// group has fewer than two members.
std::vector<double> group_advantages(const std::vector<double>& rewards);

// Clipped surrogate with KL penalty for one group. The advantage is
// sequence-level; the probability ratio and the exact KL are averaged over
// completion tokens against the frozen reference.
std::pair<double, LogitGrad> group_loss_and_grad(const PolicyParams& params,
                                                 const RolloutGroup& group,
                                                 const PolicyParams& ref,
                                                 const TrainConfig& cfg);

struct GroupUpdateResult {
  PolicyParams params;
  std::vector<double> epoch_losses;
  double mean_kl = 0.0;  // after the final epoch
};

// cfg.group_epochs gradient passes over all groups; theta_old is implicit
// in each group's stored old_log_probs, ref stays fixed throughout.
GroupUpdateResult group_policy_update(const PolicyParams& params,
                                      const std::vector<RolloutGroup>& groups,
                                      const PolicyParams& ref,
                                      const TrainConfig& cfg);

// Max relative error (absolute floor 1e-8) between the analytic gradient
// and central finite differences over every coordinate the gradient touches.
double finite_difference_check(
    const std::function<double(const PolicyParams&)>& loss_fn,
    const PolicyParams& params, const LogitGrad& analytic, double h);

}  // namespace mopr
