#include "mopr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mopr {

namespace {

std::string hex16(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace

std::string ContextKey::exact_key() const {
  std::string s = (kind == Kind::Task) ? "task/" : "repair/";
  s += std::to_string(task_id);
  s += '/';
  s += mode_name(mode);
  s += '/';
  s += goal_sig;
  if (kind == Kind::Repair) {
    s += "/f";
    s += std::to_string(static_cast<int>(violation_flags));
    s += "/h";
    s += hex16(failed_hash);
  }
  return s;
}

std::string ContextKey::group_key() const {
  std::string s = mode_name(mode);
  s += '/';
  s += goal_sig;
  return s;
}

ContextKey task_context(TaskMode mode, const std::string& goal_sig,
                        int task_id) {
  ContextKey k;
  k.kind = ContextKey::Kind::Task;
  k.mode = mode;
  k.goal_sig = goal_sig;
  k.task_id = task_id;
  return k;
}

ContextKey repair_context(TaskMode mode, const std::string& goal_sig,
                          int task_id, uint8_t violation_flags,
                          uint64_t failed_hash) {
  ContextKey k;
  k.kind = ContextKey::Kind::Repair;
  k.mode = mode;
  k.goal_sig = goal_sig;
  k.task_id = task_id;
  k.violation_flags = violation_flags;
  k.failed_hash = failed_hash;
  return k;
}

namespace {

const std::vector<double>* find_row(const LogitTable& table,
                                    const std::string& key, int step) {
  auto it = table.find(key);
  if (it == table.end()) return nullptr;
  if (step >= static_cast<int>(it->second.size())) return nullptr;
  return &it->second[static_cast<size_t>(step)];
}

std::vector<double>& ensure_row(LogitTable& table, const std::string& key,
                                int step, int horizon, int alphabet_size) {
  auto& rows = table[key];
  if (rows.empty()) {
    rows.assign(static_cast<size_t>(horizon),
                std::vector<double>(static_cast<size_t>(alphabet_size), 0.0));
  }
  return rows[static_cast<size_t>(step)];
}

std::vector<double> softmax(const std::vector<double>& logits,
                            double inv_temp) {
  double max_l = -std::numeric_limits<double>::infinity();
  for (double l : logits) max_l = std::max(max_l, l * inv_temp);
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] * inv_temp - max_l);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

int argmax_index(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace

std::vector<double> PolicyParams::step_logits(const ContextKey& ctx,
                                              int step) const {
  if (step < 0 || step >= horizon) {
    throw Error(ErrorCode::Internal, "step_logits: step out of range");
  }
  std::vector<double> row(static_cast<size_t>(alphabet.size()), 0.0);
  if (const auto* g = find_row(group_logits, ctx.group_key(), step)) {
    for (size_t a = 0; a < row.size(); ++a) row[a] += (*g)[a];
  }
  if (const auto* c = find_row(ctx_logits, ctx.exact_key(), step)) {
    for (size_t a = 0; a < row.size(); ++a) row[a] += (*c)[a];
  }
  return row;
}

std::vector<double>& PolicyParams::group_row(const std::string& key,
                                             int step) {
  return ensure_row(group_logits, key, step, horizon, alphabet.size());
}

std::vector<double>& PolicyParams::ctx_row(const std::string& key, int step) {
  return ensure_row(ctx_logits, key, step, horizon, alphabet.size());
}

PolicyParams make_uniform_policy(const Alphabet& alphabet, int horizon) {
  PolicyParams p;
  p.horizon = horizon;
  p.alphabet = alphabet;
  return p;
}

std::vector<double> step_distribution(const PolicyParams& params,
                                      const ContextKey& ctx, int step,
                                      double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::Internal, "step_distribution: temperature <= 0");
  }
  return softmax(params.step_logits(ctx, step), 1.0 / temperature);
}

SampledTrajectory sample_trajectory(const PolicyParams& params,
                                    const ContextKey& ctx, double temperature,
                                    uint64_t seed) {
  if (temperature < 0.0) {
    throw Error(ErrorCode::Internal, "sample_trajectory: negative temperature");
  }
  SampledTrajectory out;
  if (temperature == 0.0) {
    out.actions = argmax_trajectory(params, ctx);
    return out;
  }
  Rng rng(seed);
  for (int step = 0; step < params.horizon; ++step) {
    auto p = step_distribution(params, ctx, step, temperature);
    int a = rng.categorical(p);
    out.actions.push_back(a);
    out.log_prob += std::log(p[static_cast<size_t>(a)]);
    if (params.alphabet.is_terminal(a)) break;
  }
  return out;
}

Trajectory argmax_trajectory(const PolicyParams& params,
                             const ContextKey& ctx) {
  Trajectory traj;
  for (int step = 0; step < params.horizon; ++step) {
    int a = argmax_index(params.step_logits(ctx, step));
    traj.push_back(a);
    if (params.alphabet.is_terminal(a)) break;
  }
  return traj;
}

double log_prob(const PolicyParams& params, const ContextKey& ctx,
                const Trajectory& traj) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (traj.empty() || static_cast<int>(traj.size()) > params.horizon) {
    return neg_inf;
  }
  double lp = 0.0;
  for (size_t t = 0; t < traj.size(); ++t) {
    int a = traj[t];
    if (a < 0 || a >= params.alphabet.size()) return neg_inf;
    bool last = (t + 1 == traj.size());
    bool terminal = params.alphabet.is_terminal(a);
    // The policy cannot continue past a terminal symbol, and it cannot stop
    // early on a non-terminal one.
    if (terminal && !last) return neg_inf;
    if (!terminal && last && static_cast<int>(traj.size()) < params.horizon) {
      return neg_inf;
    }
    auto p = step_distribution(params, ctx, static_cast<int>(t), 1.0);
    lp += std::log(p[static_cast<size_t>(a)]);
  }
  return lp;
}

namespace {

void enumerate_rec(const PolicyParams& params, const ContextKey& ctx,
                   double temperature, int step, Trajectory& prefix,
                   double log_p,
                   std::vector<std::pair<Trajectory, double>>& out) {
  auto p = step_distribution(params, ctx, step, temperature);
  for (int a = 0; a < params.alphabet.size(); ++a) {
    double lp = log_p + std::log(p[static_cast<size_t>(a)]);
    prefix.push_back(a);
    if (params.alphabet.is_terminal(a) || step + 1 == params.horizon) {
      out.emplace_back(prefix, std::exp(lp));
    } else {
      enumerate_rec(params, ctx, temperature, step + 1, prefix, lp, out);
    }
    prefix.pop_back();
  }
}

}  // namespace

std::vector<std::pair<Trajectory, double>> enumerate_distribution(
    const PolicyParams& params, const ContextKey& ctx, double temperature) {
  double space = std::pow(static_cast<double>(params.alphabet.size()),
                          static_cast<double>(params.horizon));
  if (space > 1e5) {
    throw Error(ErrorCode::Internal,
                "enumerate_distribution: trajectory space too large");
  }
  std::vector<std::pair<Trajectory, double>> out;
  Trajectory prefix;
  enumerate_rec(params, ctx, temperature, 0, prefix, 0.0, out);
  return out;
}

PolicyParams clone_frozen(const PolicyParams& params) { return params; }

double exact_token_kl(const PolicyParams& params, const PolicyParams& ref,
                      const ContextKey& ctx, int steps) {
  if (params.alphabet.size() != ref.alphabet.size() ||
      params.horizon != ref.horizon) {
    throw Error(ErrorCode::Internal, "exact_token_kl: shape mismatch");
  }
  if (steps < 1 || steps > params.horizon) {
    throw Error(ErrorCode::Internal, "exact_token_kl: bad step count");
  }
  double total = 0.0;
  for (int t = 0; t < steps; ++t) {
    auto p = step_distribution(params, ctx, t, 1.0);
    auto q = step_distribution(ref, ctx, t, 1.0);
    double kl = 0.0;
    for (size_t a = 0; a < p.size(); ++a) {
      if (p[a] > 0.0) kl += p[a] * std::log(p[a] / q[a]);
    }
    total += kl;
  }
  return total / static_cast<double>(steps);
}

}  // namespace mopr
