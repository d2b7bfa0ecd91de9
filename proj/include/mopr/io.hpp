#pragma once

// File formats: JSON-lines for trajectory-shaped data, CSV/TSV for metrics
// and curves, a versioned JSON document for policies. Every artifact embeds
// a schema version; writes are atomic (temp file + rename). Floating-point
// values serialize with full round-trip precision.

#include <filesystem>

#include "mopr/config.hpp"

namespace mopr {
namespace io {

void atomic_write(const std::filesystem::path& path,
                  const std::string& content);

std::string read_file(const std::filesystem::path& path);

// --- task suites -----------------------------------------------------------

void write_suite(const std::filesystem::path& path,
                 const world::TaskSuite& suite);
world::TaskSuite read_suite(const std::filesystem::path& path);

// --- policies ---------------------------------------------------------------

void write_policy(const std::filesystem::path& path,
                  const PolicyParams& params);
PolicyParams read_policy(const std::filesystem::path& path);

// --- evolution artifacts ----------------------------------------------------

// Candidate log: one line per mined failure with its full scored candidate
// set; consumed by the offline replay command.
std::string candidate_log_text(const std::vector<evolve::FailureRecord>& records);

struct OfflineCandidateSet {
  int task_id = 0;
  TaskMode mode = TaskMode::Benign;
  std::string ctx;
  std::vector<ScoredCandidate> candidates;
};

std::vector<OfflineCandidateSet> read_candidate_log(
    const std::filesystem::path& path, const Alphabet& alphabet);

// Replay buffer lines; identical bytes whether produced in-process or by
// the offline replay command on an exported candidate log.
struct ReplayLine {
  std::string ctx;
  int task_id = 0;
  TaskMode mode = TaskMode::Benign;
  Trajectory repair;
  ObjectiveVector score;
  double selection_score = 0.0;
};

std::string replay_text(const std::vector<ReplayLine>& lines,
                        const Alphabet& alphabet);

std::string round_reports_text(const std::vector<evolve::RoundReport>& reports);

std::string curves_csv(const std::vector<evolve::CurveRow>& rows);

std::string metrics_csv(const std::vector<std::pair<int, evolve::MetricsReport>>& rows);

std::vector<std::pair<int, evolve::MetricsReport>> read_metrics_csv(
    const std::filesystem::path& path);

std::string task_evals_text(const std::vector<evolve::TaskEval>& evals,
                            const Alphabet& alphabet);

// Action name list <-> index trajectory helpers.
std::vector<std::string> action_names(const Trajectory& traj,
                                      const Alphabet& alphabet);
Trajectory actions_from_names(const std::vector<std::string>& names,
                              const Alphabet& alphabet, int line_no);

}  // namespace io
}  // namespace mopr
