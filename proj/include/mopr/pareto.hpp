#pragma once

// Selection math over verifier-scored repair candidates: feasibility
// thresholds, Pareto dominance, a shortfall-penalized ranking score, and the
// exponentially tilted selection distribution over the front. All functions
// here are pure and safe to call concurrently.

#include "mopr/types.hpp"

namespace mopr {

// True iff the candidate clears the protected-objective thresholds
// (utility, over-refusal, control; inclusive). Security is intentionally
// not part of feasibility.
bool is_feasible(const ScoredCandidate& c, const ModeProfile& p);

// Strict Pareto dominance: a >= b componentwise with at least one strict.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

// Feasible candidates not strictly dominated by any feasible candidate.
// Preserves input order; may be empty. Candidates must already be
// deduplicated by trajectory identity.
std::vector<ScoredCandidate> pareto_front(
    const std::vector<ScoredCandidate>& candidates, const ModeProfile& p);

// Weighted objective sum minus lambda times the largest weighted shortfall.
double front_score(const ObjectiveVector& z, const ModeProfile& p,
                   double lambda);

// Selection distribution over the front: probs proportional to
// proposal_prob * exp(beta * front_score). Throws on an empty front
// (callers skip that failure and count it).
SupervisionDistribution supervision_distribution(
    const std::vector<ScoredCandidate>& front, const ModeProfile& p,
    double lambda, double beta);

enum class SelectStrategy { Top1, Sample };

// Top1 returns the argmax-probability member (ties by lowest
// candidate_index); Sample draws deterministically from the given seed.
ScoredCandidate select_repair(const SupervisionDistribution& d,
                              SelectStrategy strategy, uint64_t seed = 0);

// Brute-force maximizer of  E_q[r] - (1/beta) KL(q || proposal restricted
// and renormalized to the front)  over a simplex grid with the given step.
// Independent check of the closed form above; front size must be 2..4.
SupervisionDistribution q_star_oracle(
    const std::vector<ScoredCandidate>& front, const ModeProfile& p,
    double lambda, double beta, double grid_step);

// Objective value of the KL-regularized selection problem at distribution q
// over the given front (q parallel to front; zero entries contribute no KL).
double selection_objective(const std::vector<ScoredCandidate>& front,
                           const ModeProfile& p, double lambda, double beta,
                           const std::vector<double>& q);

}  // namespace mopr
