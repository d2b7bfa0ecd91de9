#include "mopr/train.hpp"

#include <algorithm>
#include <cmath>

namespace mopr {

namespace {

std::vector<double>& grad_row(
    std::map<std::string, std::map<int, std::vector<double>>>& table,
    const std::string& key, int step, int n) {
  auto& row = table[key][step];
  if (row.empty()) row.assign(static_cast<size_t>(n), 0.0);
  return row;
}

}  // namespace

std::vector<double>& LogitGrad::group_row(const std::string& key, int step,
                                          int n) {
  return grad_row(group, key, step, n);
}

std::vector<double>& LogitGrad::ctx_row(const std::string& key, int step,
                                        int n) {
  return grad_row(ctx, key, step, n);
}

void apply_gradient(PolicyParams& params, const LogitGrad& grad, double lr) {
  for (const auto& [key, steps] : grad.group) {
    for (const auto& [step, row] : steps) {
      auto& target = params.group_row(key, step);
      for (size_t a = 0; a < row.size(); ++a) target[a] -= lr * row[a];
    }
  }
  for (const auto& [key, steps] : grad.ctx) {
    for (const auto& [step, row] : steps) {
      auto& target = params.ctx_row(key, step);
      for (size_t a = 0; a < row.size(); ++a) target[a] -= lr * row[a];
    }
  }
}

namespace {

// Adds `scale * (softmax(row) - onehot(action))` to the gradient of both
// logit tables at the context's rows: the composite logit is the sum of the
// two rows, so each receives the same row gradient.
void add_logprob_grad(LogitGrad& grad, const PolicyParams& params,
                      const ContextKey& ctx, int step, int action,
                      double scale) {
  auto p = step_distribution(params, ctx, step, 1.0);
  const int n = params.alphabet.size();
  auto& g = grad.group_row(ctx.group_key(), step, n);
  auto& c = grad.ctx_row(ctx.exact_key(), step, n);
  for (int a = 0; a < n; ++a) {
    double v = scale * (p[static_cast<size_t>(a)] - (a == action ? 1.0 : 0.0));
    g[static_cast<size_t>(a)] += v;
    c[static_cast<size_t>(a)] += v;
  }
}

}  // namespace

std::pair<double, LogitGrad> sft_loss_and_grad(
    const PolicyParams& params, const std::vector<ReplayEntry>& replay) {
  if (replay.empty()) {
    throw Error(ErrorCode::Internal, "sft_loss_and_grad: empty replay");
  }
  double loss = 0.0;
  LogitGrad grad;
  const double inv_n = 1.0 / static_cast<double>(replay.size());
  for (const auto& entry : replay) {
    for (size_t t = 0; t < entry.repair.size(); ++t) {
      auto p = step_distribution(params, entry.ctx, static_cast<int>(t), 1.0);
      int a = entry.repair[t];
      loss -= inv_n * std::log(p[static_cast<size_t>(a)]);
      add_logprob_grad(grad, params, entry.ctx, static_cast<int>(t), a, inv_n);
    }
  }
  return {loss, grad};
}

SftResult sft_update(const PolicyParams& params,
                     const std::vector<ReplayEntry>& replay,
                     const TrainConfig& cfg) {
  if (replay.empty()) {
    throw Error(ErrorCode::Internal, "sft_update: empty replay");
  }
  SftResult result{params, {}};
  for (int epoch = 0; epoch < cfg.sft_epochs; ++epoch) {
    auto [loss, grad] = sft_loss_and_grad(result.params, replay);
    apply_gradient(result.params, grad, cfg.sft_lr);
    result.epoch_losses.push_back(loss);
  }
  return result;
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw Error(ErrorCode::Internal, "group_advantages: group too small");
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  std::vector<double> adv(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - mean;
  return adv;
}

std::pair<double, LogitGrad> group_loss_and_grad(const PolicyParams& params,
                                                 const RolloutGroup& group,
                                                 const PolicyParams& ref,
                                                 const TrainConfig& cfg) {
  const size_t G = group.completions.size();
  if (G < 2 || group.old_log_probs.size() != G || group.rewards.size() != G) {
    throw Error(ErrorCode::Internal, "group_loss_and_grad: malformed group");
  }
  auto adv = group_advantages(group.rewards);
  const double inv_g = 1.0 / static_cast<double>(G);
  const int n = params.alphabet.size();

  double loss = 0.0;
  LogitGrad grad;
  int max_steps = 0;
  std::vector<double> step_weights(static_cast<size_t>(params.horizon), 0.0);
  for (size_t i = 0; i < G; ++i) {
    const auto& completion = group.completions[i];
    const int steps = static_cast<int>(completion.size());
    max_steps = std::max(max_steps, steps);
    const double inv_t = 1.0 / static_cast<double>(steps);

    // Token-averaged probability ratio against theta_old.
    double new_lp = log_prob(params, group.ctx, completion);
    double rho = std::exp((new_lp - group.old_log_probs[i]) * inv_t);
    double clipped = std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    double surrogate = std::min(rho * adv[i], clipped * adv[i]);
    loss -= inv_g * surrogate;

    // The min picks the unclipped branch when it is no larger; only that
    // branch carries a gradient (the clipped branch is locally constant
    // whenever it actually clips).
    bool unclipped_active = rho * adv[i] <= clipped * adv[i];
    if (unclipped_active) {
      // d loss / d logit = inv_g * A * rho * inv_t * (softmax - onehot)
      double scale = inv_g * adv[i] * rho * inv_t;
      for (int t = 0; t < steps; ++t) {
        add_logprob_grad(grad, params, group.ctx, t,
                         completion[static_cast<size_t>(t)], scale);
      }
    }

    // Exact per-token KL to the frozen reference, averaged over the steps
    // this completion reaches.
    loss += cfg.kl_coef * inv_g *
            exact_token_kl(params, ref, group.ctx, steps);
    for (int t = 0; t < steps; ++t) {
      step_weights[static_cast<size_t>(t)] += cfg.kl_coef * inv_g * inv_t;
    }
  }

  if (cfg.kl_coef != 0.0) {
    for (int t = 0; t < max_steps; ++t) {
      double w = step_weights[static_cast<size_t>(t)];
      if (w == 0.0) continue;
      auto p = step_distribution(params, group.ctx, t, 1.0);
      auto q = step_distribution(ref, group.ctx, t, 1.0);
      double kl = 0.0;
      for (int a = 0; a < n; ++a) {
        kl += p[static_cast<size_t>(a)] *
              std::log(p[static_cast<size_t>(a)] / q[static_cast<size_t>(a)]);
      }
      auto& g = grad.group_row(group.ctx.group_key(), t, n);
      auto& c = grad.ctx_row(group.ctx.exact_key(), t, n);
      for (int a = 0; a < n; ++a) {
        double pa = p[static_cast<size_t>(a)];
        double v = w * pa *
                   (std::log(pa / q[static_cast<size_t>(a)]) - kl);
        g[static_cast<size_t>(a)] += v;
        c[static_cast<size_t>(a)] += v;
      }
    }
  }
  return {loss, grad};
}

GroupUpdateResult group_policy_update(const PolicyParams& params,
                                      const std::vector<RolloutGroup>& groups,
                                      const PolicyParams& ref,
                                      const TrainConfig& cfg) {
  GroupUpdateResult result{params, {}, 0.0};
  if (groups.empty()) return result;
  for (int epoch = 0; epoch < cfg.group_epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& group : groups) {
      auto [loss, grad] = group_loss_and_grad(result.params, group, ref, cfg);
      apply_gradient(result.params, grad, cfg.group_lr);
      epoch_loss += loss;
    }
    result.epoch_losses.push_back(epoch_loss /
                                  static_cast<double>(groups.size()));
  }
  double kl = 0.0;
  for (const auto& group : groups) {
    kl += exact_token_kl(result.params, ref, group.ctx, result.params.horizon);
  }
  result.mean_kl = kl / static_cast<double>(groups.size());
  return result;
}

namespace {

double& param_coordinate(PolicyParams& params, bool group_table,
                         const std::string& key, int step, int a) {
  auto& row = group_table ? params.group_row(key, step)
                          : params.ctx_row(key, step);
  return row[static_cast<size_t>(a)];
}

}  // namespace

double finite_difference_check(
    const std::function<double(const PolicyParams&)>& loss_fn,
    const PolicyParams& params, const LogitGrad& analytic, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw Error(ErrorCode::Internal, "finite_difference_check: h out of range");
  }
  double max_rel = 0.0;
  auto check_table = [&](bool group_table, const auto& table) {
    for (const auto& [key, steps] : table) {
      for (const auto& [step, row] : steps) {
        for (int a = 0; a < static_cast<int>(row.size()); ++a) {
          PolicyParams perturbed = params;
          double& coord = param_coordinate(perturbed, group_table, key, step, a);
          double base = coord;
          coord = base + h;
          double up = loss_fn(perturbed);
          coord = base - h;
          double down = loss_fn(perturbed);
          double numeric = (up - down) / (2.0 * h);
          double exact = row[static_cast<size_t>(a)];
          double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
          max_rel = std::max(max_rel, std::abs(numeric - exact) / denom);
        }
      }
    }
  };
  check_table(true, analytic.group);
  check_table(false, analytic.ctx);
  return max_rel;
}

}  // namespace mopr
