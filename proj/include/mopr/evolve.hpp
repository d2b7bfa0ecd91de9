#pragma once

// End-to-end self-evolution loop: failure mining, repair-context
// construction, same-policy proposal with verifier re-scoring, replay
// construction via feasibility/front/tie-break selection, SFT plus group
// policy optimization, round iteration, and test-split metrics.

#include "mopr/pareto.hpp"
#include "mopr/train.hpp"
#include "mopr/world.hpp"

namespace mopr {
namespace evolve {

enum class Variant {
  Full,
  NoRescoring,    // candidate scores are the policy's own claim (all ones)
  NoOrObjective,  // drop over-refusal from feasibility and reweight scores
  NoPareto,       // feasibility filter only, no dominance pruning
  SafetyOnly,     // argmax security selection, security-only group rewards
  SftOnly,        // skip group policy optimization
};

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

enum class RolloutMode { Argmax, Sample };

struct Profiles {
  ModeProfile benign = default_profile(TaskMode::Benign);
  ModeProfile attacked = default_profile(TaskMode::AttackedLegitimate);
  ModeProfile harmful = default_profile(TaskMode::HarmfulRequest);

  const ModeProfile& for_mode(TaskMode mode) const;
};

struct EvolveConfig {
  int rounds = 2;
  int repair_candidates = 8;  // K
  int group_size = 8;         // G
  int replay_cap = 2048;
  double lambda = 1.0;
  double beta = 5.0;
  double temperature = 0.7;
  SelectStrategy strategy = SelectStrategy::Top1;
  Variant variant = Variant::Full;
  RolloutMode mining = RolloutMode::Argmax;
  RolloutMode eval_rollout = RolloutMode::Argmax;
  Profiles profiles;
  uint64_t seed = 7;
};

// Violation flag bits (set when the component is below its threshold).
inline constexpr uint8_t kViolSec = 1;
inline constexpr uint8_t kViolUtil = 2;
inline constexpr uint8_t kViolOr = 4;
inline constexpr uint8_t kViolCtrl = 8;

struct Failure {
  world::Task task;
  Trajectory trajectory;
  ObjectiveVector score;
  uint8_t violation_flags = 0;
};

struct MetricsReport {
  double asr = 0.0;  // attacked: injected instruction followed
  double tsr = 0.0;  // attacked: legitimate goal still completed
  double brr = 0.0;  // benign: refused before any progress
  double hcr = 0.0;  // harmful: harmful action executed
  double vrr = 0.0;  // harmful: valid refusal
};

struct RoundReport {
  int round = 0;
  std::string variant;
  int failures = 0;
  int skipped = 0;  // failures whose candidate set had an empty front
  double mean_front_size = 0.0;
  int replay_size = 0;
  MetricsReport before;
  MetricsReport after;
};

// Per-failure selection outcome shared by the online pipeline and the
// offline replay command.
struct SelectionOutcome {
  std::optional<ScoredCandidate> selected;
  int feasible_count = 0;
  int front_size = 0;
  bool skipped = false;
  std::vector<int> dominated_indices;   // feasible but dominated
  std::vector<int> infeasible_indices;  // below a protected threshold
};

struct FailureRecord {
  Failure failure;
  ContextKey ctx;
  std::vector<ScoredCandidate> candidates;
  SelectionOutcome outcome;
};

struct CurveRow {
  int round = 0;
  std::string phase;  // "sft" or "group"
  int epoch = 0;
  double loss = 0.0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
};

struct RoundResult {
  PolicyParams params;
  RoundReport report;
  std::vector<FailureRecord> records;
  std::vector<ReplayEntry> replay;
  std::vector<double> replay_scores;  // selection score per replay entry
  std::vector<CurveRow> curves;
};

// Seeded "pretrained but unsafe" starting policy: injection-prone on
// attacked groups, compliance-prone on harmful groups, mediocre on benign
// ones, with per-task jitter so behavior varies across tasks and seeds.
PolicyParams make_base_policy(const world::TaskSuite& suite, int horizon,
                              uint64_t seed);

ContextKey task_context_for(const world::Task& task);
ContextKey repair_context_for(const Failure& failure);

// Rolls the policy once per Dev task and keeps scored failures.
std::vector<Failure> mine_failures(const PolicyParams& params,
                                   const world::TaskSuite& suite,
                                   const EvolveConfig& cfg, int round);

// K proposals from the repair context, deduplicated with exact proposal
// probabilities and fresh verifier scores (or claimed ones, per variant).
std::vector<ScoredCandidate> propose_and_score(const PolicyParams& params,
                                               const Failure& failure,
                                               const EvolveConfig& cfg,
                                               int round);

// Feasibility filter, front projection, tilted selection; variant-aware.
// Candidates with identical trajectories are merged before filtering.
SelectionOutcome select_for_failure(const std::vector<ScoredCandidate>& candidates,
                                    const ModeProfile& profile,
                                    const EvolveConfig& cfg);

// Reward used for selection ranking and group optimization under the
// configured variant (front score, or raw security for SafetyOnly).
double candidate_reward(const ObjectiveVector& z, const ModeProfile& profile,
                        const EvolveConfig& cfg);

struct ReplayBuild {
  std::vector<FailureRecord> records;
  std::vector<ReplayEntry> replay;
  std::vector<double> replay_scores;
  int skipped = 0;
};

ReplayBuild build_replay(const PolicyParams& params,
                         const std::vector<Failure>& failures,
                         const EvolveConfig& cfg, int round);

MetricsReport evaluate(const PolicyParams& params,
                       const world::TaskSuite& suite, RolloutMode mode,
                       uint64_t seed);

struct TaskEval {
  int task_id = 0;
  TaskMode mode = TaskMode::Benign;
  world::Split split = world::Split::Test;
  Trajectory actions;
  ObjectiveVector score;
};

std::vector<TaskEval> evaluate_detailed(const PolicyParams& params,
                                        const world::TaskSuite& suite,
                                        RolloutMode mode, uint64_t seed);

RoundResult run_round(const PolicyParams& params,
                      const world::TaskSuite& suite, const EvolveConfig& cfg,
                      const TrainConfig& train_cfg, int round);

struct EvolutionResult {
  PolicyParams params;
  std::vector<RoundResult> rounds;
};

EvolutionResult run_evolution(const PolicyParams& params0,
                              const world::TaskSuite& suite,
                              const EvolveConfig& cfg,
                              const TrainConfig& train_cfg);

}  // namespace evolve
}  // namespace mopr
