#include "mopr/pareto.hpp"

#include <algorithm>
#include <cmath>

namespace mopr {

bool is_feasible(const ScoredCandidate& c, const ModeProfile& p) {
  const ObjectiveVector& z = c.score;
  return z.util >= p.kappa_util && z.over_refusal >= p.kappa_or &&
         z.control >= p.kappa_ctrl;
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  bool any_strict = false;
  for (int m = 0; m < 4; ++m) {
    if (a[m] < b[m]) return false;
    if (a[m] > b[m]) any_strict = true;
  }
  return any_strict;
}

std::vector<ScoredCandidate> pareto_front(
    const std::vector<ScoredCandidate>& candidates, const ModeProfile& p) {
  std::vector<const ScoredCandidate*> feasible;
  feasible.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (is_feasible(c, p)) feasible.push_back(&c);
  }
  std::vector<ScoredCandidate> front;
  for (const auto* c : feasible) {
    bool dominated = false;
    for (const auto* d : feasible) {
      if (d != c && dominates(d->score, c->score)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(*c);
  }
  return front;
}

double front_score(const ObjectiveVector& z, const ModeProfile& p,
                   double lambda) {
  double sum = 0.0;
  double worst = 0.0;
  for (int m = 0; m < 4; ++m) {
    sum += p.weights[static_cast<size_t>(m)] * z[m];
    worst = std::max(worst, p.weights[static_cast<size_t>(m)] * (1.0 - z[m]));
  }
  return sum - lambda * worst;
}

SupervisionDistribution supervision_distribution(
    const std::vector<ScoredCandidate>& front, const ModeProfile& p,
    double lambda, double beta) {
  if (front.empty()) {
    throw Error(ErrorCode::Internal,
                "supervision_distribution: empty Pareto front");
  }
  // Log-space weights with max subtraction before exponentiation.
  std::vector<double> logw(front.size());
  double max_w = -1e300;
  for (size_t k = 0; k < front.size(); ++k) {
    if (!(front[k].proposal_prob > 0.0)) {
      throw Error(ErrorCode::Internal,
                  "supervision_distribution: nonpositive proposal probability");
    }
    logw[k] = std::log(front[k].proposal_prob) +
              beta * front_score(front[k].score, p, lambda);
    max_w = std::max(max_w, logw[k]);
  }
  double total = 0.0;
  std::vector<double> probs(front.size());
  for (size_t k = 0; k < front.size(); ++k) {
    probs[k] = std::exp(logw[k] - max_w);
    total += probs[k];
  }
  for (double& q : probs) q /= total;
  return {front, probs};
}

ScoredCandidate select_repair(const SupervisionDistribution& d,
                              SelectStrategy strategy, uint64_t seed) {
  if (d.support.empty()) {
    throw Error(ErrorCode::Internal, "select_repair: empty distribution");
  }
  if (strategy == SelectStrategy::Top1) {
    size_t best = 0;
    for (size_t k = 1; k < d.support.size(); ++k) {
      if (d.probs[k] > d.probs[best] ||
          (d.probs[k] == d.probs[best] &&
           d.support[k].candidate_index < d.support[best].candidate_index)) {
        best = k;
      }
    }
    return d.support[best];
  }
  Rng rng(seed);
  return d.support[static_cast<size_t>(rng.categorical(d.probs))];
}

double selection_objective(const std::vector<ScoredCandidate>& front,
                           const ModeProfile& p, double lambda, double beta,
                           const std::vector<double>& q) {
  // Reference distribution: proposal restricted to the front, renormalized.
  double prop_total = 0.0;
  for (const auto& c : front) prop_total += c.proposal_prob;
  double value = 0.0;
  for (size_t k = 0; k < front.size(); ++k) {
    if (q[k] <= 0.0) continue;
    double ref = front[k].proposal_prob / prop_total;
    value += q[k] * front_score(front[k].score, p, lambda);
    value -= (1.0 / beta) * q[k] * std::log(q[k] / ref);
  }
  return value;
}

namespace {

// Enumerates grid points q with components that are multiples of `step`
// summing to one, invoking fn on each.
template <typename Fn>
void for_each_grid_point(int n, int ticks, Fn&& fn) {
  std::vector<int> counts(static_cast<size_t>(n), 0);
  // Recursive composition enumeration without recursion depth concerns
  // (n <= 4): iterative nested loops via simple recursion lambda.
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n - 1) {
      counts[static_cast<size_t>(pos)] = remaining;
      fn(counts);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<size_t>(pos)] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  rec(rec, 0, ticks);
}

}  // namespace

SupervisionDistribution q_star_oracle(
    const std::vector<ScoredCandidate>& front, const ModeProfile& p,
    double lambda, double beta, double grid_step) {
  const int n = static_cast<int>(front.size());
  if (n < 2 || n > 4) {
    throw Error(ErrorCode::Internal, "q_star_oracle: front size must be 2..4");
  }
  if (!(grid_step > 0.0) || grid_step > 0.01 + 1e-15) {
    throw Error(ErrorCode::Internal, "q_star_oracle: grid_step must be <= 0.01");
  }
  const int ticks = static_cast<int>(std::llround(1.0 / grid_step));
  std::vector<double> best_q;
  double best_value = -1e300;
  std::vector<double> q(static_cast<size_t>(n));
  for_each_grid_point(n, ticks, [&](const std::vector<int>& counts) {
    for (int i = 0; i < n; ++i) {
      q[static_cast<size_t>(i)] = static_cast<double>(counts[static_cast<size_t>(i)]) * grid_step;
    }
    double value = selection_objective(front, p, lambda, beta, q);
    if (value > best_value) {
      best_value = value;
      best_q = q;
    }
  });
  return {front, best_q};
}

}  // namespace mopr
