#pragma once

// Shared domain types for the multi-objective policy-repair library.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopr {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode : int {
  Config = 2,        // invalid configuration or malformed input schema
  MissingInput = 3,  // referenced file or split does not exist
  Internal = 4,      // broken invariant inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Objective vectors and mode profiles
// ---------------------------------------------------------------------------

// Four verifier scores in [0,1]: security, task utility, over-refusal
// control, trajectory control. Component order is fixed; index m in 0..3
// addresses them in that order.
struct ObjectiveVector {
  double sec = 0.0;
  double util = 0.0;
  double over_refusal = 0.0;
  double control = 0.0;

  double operator[](int m) const {
    switch (m) {
      case 0: return sec;
      case 1: return util;
      case 2: return over_refusal;
      case 3: return control;
    }
    throw Error(ErrorCode::Internal, "objective index out of range");
  }

  bool operator==(const ObjectiveVector& o) const {
    return sec == o.sec && util == o.util && over_refusal == o.over_refusal &&
           control == o.control;
  }
};

bool is_valid_objective(const ObjectiveVector& z);  // finite and in [0,1]

enum class TaskMode { Benign, AttackedLegitimate, HarmfulRequest };

const char* mode_name(TaskMode mode);
std::optional<TaskMode> mode_from_name(const std::string& name);

// Per-mode selection weights and feasibility thresholds. Weights sum to 1;
// kappa_sec only enters the failure predicate, never feasibility.
struct ModeProfile {
  TaskMode mode = TaskMode::Benign;
  std::array<double, 4> weights{};  // sec, util, or, ctrl
  double kappa_util = 0.0;
  double kappa_or = 0.0;
  double kappa_ctrl = 0.0;
  double kappa_sec = 0.5;
};

// Built-in profiles for the three task modes.
ModeProfile default_profile(TaskMode mode);

// ---------------------------------------------------------------------------
// Action alphabet and trajectories
// ---------------------------------------------------------------------------

// A trajectory is a bounded sequence of alphabet indices. Terminal symbols
// (per Alphabet::terminal) end generation early.
using Trajectory = std::vector<int>;

struct Alphabet {
  std::vector<std::string> symbols;
  std::vector<uint8_t> terminal;  // parallel to symbols

  int size() const { return static_cast<int>(symbols.size()); }
  bool is_terminal(int a) const { return terminal[static_cast<size_t>(a)] != 0; }
  int index_of(const std::string& name) const;  // -1 if absent
};

// Stable 64-bit content hash of a trajectory (FNV-1a over action indices).
uint64_t trajectory_hash(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Candidates and supervision distributions
// ---------------------------------------------------------------------------

// A repair proposal with its re-scored objective vector and the exact
// probability the proposing policy assigns to the trajectory.
struct ScoredCandidate {
  Trajectory trajectory;
  ObjectiveVector score;
  double proposal_prob = 0.0;  // in (0,1]
  int candidate_index = 0;     // proposal order; unique within a set
};

// Distribution over Pareto-front candidates; probs parallel to support.
struct SupervisionDistribution {
  std::vector<ScoredCandidate> support;
  std::vector<double> probs;
};

// ---------------------------------------------------------------------------
// Deterministic RNG (portable across platforms, unlike std distributions)
// ---------------------------------------------------------------------------

uint64_t mix_seed(uint64_t seed, uint64_t tag);
uint64_t mix_seed(uint64_t seed, uint64_t tag, uint64_t tag2);

class Rng {
 public:
  explicit Rng(uint64_t seed);
  uint64_t next_u64();
  double uniform();                       // [0, 1)
  double normal(double mean, double sd);  // Box-Muller on uniform()
  size_t index(size_t n);                 // uniform in [0, n)
  // Inverse-CDF draw from a normalized probability vector.
  int categorical(const std::vector<double>& probs);

 private:
  uint64_t state_;
};

// Shortest round-trip decimal form of a double (to_chars).
std::string fmt_double(double x);

}  // namespace mopr
