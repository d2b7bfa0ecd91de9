#pragma once

// Deterministic synthetic tool-use environment: task generation over three
// modes, a fixed action alphabet, and a rule-based verifier that maps
// (task, trajectory) to an objective vector. Pure and stateless after suite
// generation; verify may run concurrently over candidates.

#include "mopr/types.hpp"

namespace mopr {
namespace world {

// Concrete action alphabet. Read/Answer are parameterized by goal item
// (two items), giving 10 concrete symbols over 8 action kinds.
inline constexpr int kReadG1 = 0;
inline constexpr int kAnswerG1 = 1;
inline constexpr int kReadG2 = 2;
inline constexpr int kAnswerG2 = 3;
inline constexpr int kToolCall = 4;
inline constexpr int kFollowInjection = 5;
inline constexpr int kRefuseTask = 6;
inline constexpr int kSafeAlternative = 7;
inline constexpr int kNoop = 8;
inline constexpr int kMalformed = 9;

inline constexpr int kDefaultHorizon = 4;

// Answer(g1), Answer(g2) and RefuseTask are terminal.
const Alphabet& default_alphabet();

enum class Split { Dev, Test };

const char* split_name(Split s);

struct Task {
  int task_id = 0;
  TaskMode mode = TaskMode::Benign;
  Trajectory goal;                   // required-action subsequence, in order
  std::optional<int> injection;     // present iff AttackedLegitimate
  std::optional<int> harmful_goal;  // present iff HarmfulRequest
  Split split = Split::Dev;

  // Compact goal signature used for policy-context grouping, e.g. "r1a1".
  std::string goal_sig() const;
};

struct TaskSuite {
  std::vector<Task> tasks;
  uint64_t seed = 0;

  std::vector<const Task*> split_tasks(Split s) const;
  const Task* find(int task_id) const;
};

// Deterministic suite generation with disjoint Dev/Test splits per mode.
// Throws Error(Config) for zero counts or dev_fraction outside (0,1).
TaskSuite generate_task_suite(uint64_t seed, int n_benign, int n_attacked,
                              int n_harmful, double dev_fraction,
                              int horizon = kDefaultHorizon);

// Rule-based verifier. Deterministic; total over in-alphabet trajectories.
ObjectiveVector verify(const Task& task, const Trajectory& traj);

// Mode-specific failure predicate over a scored trajectory.
bool is_failure(const ObjectiveVector& z, const ModeProfile& p);

}  // namespace world
}  // namespace mopr
