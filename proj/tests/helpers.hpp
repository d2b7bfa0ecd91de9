#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here recomputes expectations from first principles so the library paths
// under test stay uncorroborated by themselves.

#include <cmath>
#include <vector>

#include "mopr/pareto.hpp"
#include "mopr/types.hpp"

namespace testing {

inline mopr::ScoredCandidate cand(std::initializer_list<double> z,
                                  double proposal_prob, int index,
                                  mopr::Trajectory traj = {}) {
  auto it = z.begin();
  mopr::ScoredCandidate c;
  c.score = {*it, *(it + 1), *(it + 2), *(it + 3)};
  c.proposal_prob = proposal_prob;
  c.candidate_index = index;
  c.trajectory = traj.empty() ? mopr::Trajectory{index} : std::move(traj);
  return c;
}

// Independent feasibility check written directly from the thresholds.
inline bool feasible_oracle(const mopr::ScoredCandidate& c,
                            const mopr::ModeProfile& p) {
  return c.score.util >= p.kappa_util && c.score.over_refusal >= p.kappa_or &&
         c.score.control >= p.kappa_ctrl;
}

// Independent strict-dominance check.
inline bool dominates_oracle(const mopr::ObjectiveVector& a,
                             const mopr::ObjectiveVector& b) {
  int geq = 0, strict = 0;
  for (int m = 0; m < 4; ++m) {
    if (a[m] >= b[m]) ++geq;
    if (a[m] > b[m]) ++strict;
  }
  return geq == 4 && strict >= 1;
}

// Exhaustive pairwise front computation: candidate indices that are
// feasible and not strictly dominated by another feasible candidate.
inline std::vector<int> front_oracle(
    const std::vector<mopr::ScoredCandidate>& cs, const mopr::ModeProfile& p) {
  std::vector<int> front;
  for (const auto& c : cs) {
    if (!feasible_oracle(c, p)) continue;
    bool dominated = false;
    for (const auto& d : cs) {
      if (d.candidate_index != c.candidate_index && feasible_oracle(d, p) &&
          dominates_oracle(d.score, c.score)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(c.candidate_index);
  }
  return front;
}

inline mopr::ObjectiveVector random_score(mopr::Rng& rng) {
  return {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
}

inline mopr::TaskMode random_mode(mopr::Rng& rng) {
  switch (rng.index(3)) {
    case 0: return mopr::TaskMode::Benign;
    case 1: return mopr::TaskMode::AttackedLegitimate;
    default: return mopr::TaskMode::HarmfulRequest;
  }
}

// Random candidate set with distinct single-action trajectories.
inline std::vector<mopr::ScoredCandidate> random_candidates(mopr::Rng& rng,
                                                            int n) {
  std::vector<mopr::ScoredCandidate> cs;
  for (int i = 0; i < n; ++i) {
    mopr::ScoredCandidate c;
    c.score = random_score(rng);
    c.proposal_prob = 0.01 + 0.99 * rng.uniform();
    c.candidate_index = i;
    c.trajectory = {i};
    cs.push_back(std::move(c));
  }
  return cs;
}

inline double l1_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace testing
