#pragma once

// Command entry points behind the CLI: suite generation, evolution runs,
// offline replay construction from candidate logs, evaluation, and
// plot-ready reporting. Each throws mopr::Error; the C API and CLI map the
// error codes to exit codes.

#include "mopr/io.hpp"

namespace mopr {
namespace cmd {

// Writes tasks.jsonl plus an echo of the resolved configuration.
void gen_tasks(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Full evolution run: per-round policy snapshots, candidate logs, replay
// buffers, round reports, training curves, and metrics. With n_seeds > 1
// the runs land in seed_<s>/ subdirectories for later aggregation.
void evolve_run(const RunConfig& cfg, const std::filesystem::path& suite_path,
                const std::filesystem::path& out_dir, int n_seeds = 1);

// Offline application of the supervision-construction math to an exported
// candidate log; writes replay.jsonl and per-failure diagnostics.
void replay_offline(const RunConfig& cfg,
                    const std::filesystem::path& candidates_path,
                    const std::filesystem::path& out_dir);

// Test-split metrics plus per-task trajectories for a policy snapshot.
void eval_policy(const std::filesystem::path& policy_path,
                 const std::filesystem::path& suite_path,
                 const std::filesystem::path& out_dir,
                 evolve::RolloutMode rollout, uint64_t seed);

// Round-vs-metric TSV (mean and standard deviation across seed runs).
void report(const std::filesystem::path& run_dir,
            const std::filesystem::path& out_dir);

}  // namespace cmd
}  // namespace mopr
