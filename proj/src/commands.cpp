#include "mopr/commands.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace mopr {
namespace cmd {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void gen_tasks(const RunConfig& cfg, const fs::path& out_dir) {
  validate_config(cfg);
  auto suite = world::generate_task_suite(cfg.seed, cfg.n_benign,
                                          cfg.n_attacked, cfg.n_harmful,
                                          cfg.dev_fraction, cfg.horizon);
  io::write_suite(out_dir / "tasks.jsonl", suite);
  io::atomic_write(out_dir / "config_resolved.cfg", serialize_config(cfg));
}

namespace {

std::vector<io::ReplayLine> replay_lines(
    const std::vector<ReplayEntry>& replay,
    const std::vector<double>& scores) {
  std::vector<io::ReplayLine> lines;
  for (size_t i = 0; i < replay.size(); ++i) {
    const auto& entry = replay[i];
    lines.push_back({entry.ctx.exact_key(), entry.ctx.task_id, entry.ctx.mode,
                     entry.repair, entry.score, scores[i]});
  }
  return lines;
}

void evolve_single(const RunConfig& cfg, const world::TaskSuite& suite,
                   const fs::path& out_dir) {
  const Alphabet& alphabet = world::default_alphabet();
  PolicyParams params0 =
      cfg.init_policy == "uniform"
          ? make_uniform_policy(alphabet, cfg.horizon)
          : evolve::make_base_policy(suite, cfg.horizon, cfg.seed);
  io::atomic_write(out_dir / "config_resolved.cfg", serialize_config(cfg));
  io::write_policy(out_dir / "policy_round_0.json", params0);

  auto ecfg = cfg.evolve_config();
  auto result = evolve::run_evolution(params0, suite, ecfg, cfg.train);

  std::vector<evolve::RoundReport> reports;
  std::vector<evolve::CurveRow> curves;
  std::vector<std::pair<int, evolve::MetricsReport>> metrics;
  for (size_t i = 0; i < result.rounds.size(); ++i) {
    const auto& round = result.rounds[i];
    int round_no = round.report.round;
    io::write_policy(
        out_dir / ("policy_round_" + std::to_string(round_no) + ".json"),
        round.params);
    io::atomic_write(
        out_dir / ("candidates_round_" + std::to_string(round_no) + ".jsonl"),
        io::candidate_log_text(round.records));
    io::atomic_write(
        out_dir / ("replay_round_" + std::to_string(round_no) + ".jsonl"),
        io::replay_text(replay_lines(round.replay, round.replay_scores),
                        alphabet));
    reports.push_back(round.report);
    curves.insert(curves.end(), round.curves.begin(), round.curves.end());
    if (i == 0) metrics.emplace_back(0, round.report.before);
    metrics.emplace_back(round_no, round.report.after);
  }
  io::atomic_write(out_dir / "rounds.jsonl", io::round_reports_text(reports));
  io::atomic_write(out_dir / "curves.csv", io::curves_csv(curves));
  io::atomic_write(out_dir / "metrics.csv", io::metrics_csv(metrics));
}

}  // namespace

void evolve_run(const RunConfig& cfg, const fs::path& suite_path,
                const fs::path& out_dir, int n_seeds) {
  validate_config(cfg);
  if (n_seeds < 1) throw Error(ErrorCode::Config, "seeds must be >= 1");
  if (!fs::exists(suite_path)) {
    throw Error(ErrorCode::MissingInput,
                "missing task suite: " + suite_path.string());
  }
  auto suite = io::read_suite(suite_path);
  if (n_seeds == 1) {
    evolve_single(cfg, suite, out_dir);
    return;
  }
  for (int s = 0; s < n_seeds; ++s) {
    RunConfig seeded = cfg;
    seeded.seed = cfg.seed + static_cast<uint64_t>(s);
    evolve_single(seeded, suite,
                  out_dir / ("seed_" + std::to_string(seeded.seed)));
  }
  io::atomic_write(out_dir / "config_resolved.cfg", serialize_config(cfg));
}

void replay_offline(const RunConfig& cfg, const fs::path& candidates_path,
                    const fs::path& out_dir) {
  validate_config(cfg);
  if (!fs::exists(candidates_path)) {
    throw Error(ErrorCode::MissingInput,
                "missing candidate log: " + candidates_path.string());
  }
  const Alphabet& alphabet = world::default_alphabet();
  auto sets = io::read_candidate_log(candidates_path, alphabet);
  auto ecfg = cfg.evolve_config();

  std::vector<io::ReplayLine> pending;
  std::string diag_text;
  ordered_json diag_header;
  diag_header["artifact"] = "replay_diagnostics";
  diag_header["schema_version"] = 1;
  diag_text += diag_header.dump();
  diag_text += "\n";

  for (const auto& set : sets) {
    const ModeProfile& profile = ecfg.profiles.for_mode(set.mode);
    auto outcome = evolve::select_for_failure(set.candidates, profile, ecfg);
    ordered_json dj;
    dj["task_id"] = set.task_id;
    dj["ctx"] = set.ctx;
    dj["feasible"] = outcome.feasible_count;
    dj["front_size"] = outcome.front_size;
    dj["skipped"] = outcome.skipped;
    dj["dominated"] = outcome.dominated_indices;
    dj["infeasible"] = outcome.infeasible_indices;
    diag_text += dj.dump();
    diag_text += "\n";
    if (outcome.skipped) continue;
    const auto& sel = *outcome.selected;
    pending.push_back({set.ctx, set.task_id, set.mode, sel.trajectory,
                       sel.score,
                       evolve::candidate_reward(sel.score, profile, ecfg)});
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const io::ReplayLine& a, const io::ReplayLine& b) {
                     if (a.selection_score != b.selection_score) {
                       return a.selection_score > b.selection_score;
                     }
                     return a.task_id < b.task_id;
                   });
  if (static_cast<int>(pending.size()) > ecfg.replay_cap) {
    pending.resize(static_cast<size_t>(ecfg.replay_cap));
  }
  io::atomic_write(out_dir / "replay.jsonl",
                   io::replay_text(pending, alphabet));
  io::atomic_write(out_dir / "diagnostics.jsonl", diag_text);
}

void eval_policy(const fs::path& policy_path, const fs::path& suite_path,
                 const fs::path& out_dir, evolve::RolloutMode rollout,
                 uint64_t seed) {
  if (!fs::exists(policy_path)) {
    throw Error(ErrorCode::MissingInput,
                "missing policy snapshot: " + policy_path.string());
  }
  if (!fs::exists(suite_path)) {
    throw Error(ErrorCode::MissingInput,
                "missing task suite: " + suite_path.string());
  }
  auto params = io::read_policy(policy_path);
  auto suite = io::read_suite(suite_path);
  auto metrics = evolve::evaluate(params, suite, rollout, seed);
  auto evals = evolve::evaluate_detailed(params, suite, rollout, seed);
  io::atomic_write(out_dir / "metrics.csv", io::metrics_csv({{0, metrics}}));
  io::atomic_write(out_dir / "trajectories.jsonl",
                   io::task_evals_text(evals, params.alphabet));
}

void report(const fs::path& run_dir, const fs::path& out_dir) {
  std::vector<std::vector<std::pair<int, evolve::MetricsReport>>> runs;
  if (fs::exists(run_dir / "metrics.csv")) {
    runs.push_back(io::read_metrics_csv(run_dir / "metrics.csv"));
  } else if (fs::exists(run_dir)) {
    std::vector<fs::path> seed_dirs;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      if (entry.is_directory() &&
          entry.path().filename().string().rfind("seed_", 0) == 0 &&
          fs::exists(entry.path() / "metrics.csv")) {
        seed_dirs.push_back(entry.path());
      }
    }
    std::sort(seed_dirs.begin(), seed_dirs.end());
    for (const auto& dir : seed_dirs) {
      runs.push_back(io::read_metrics_csv(dir / "metrics.csv"));
    }
  }
  if (runs.empty()) {
    throw Error(ErrorCode::MissingInput,
                "incomplete run directory: " + run_dir.string());
  }

  // round -> metric values across runs
  const char* metric_names[5] = {"asr", "tsr", "brr", "hcr", "vrr"};
  auto metric_value = [](const evolve::MetricsReport& m, int idx) {
    switch (idx) {
      case 0: return m.asr;
      case 1: return m.tsr;
      case 2: return m.brr;
      case 3: return m.hcr;
      default: return m.vrr;
    }
  };
  std::vector<int> rounds;
  for (const auto& [round, m] : runs.front()) rounds.push_back(round);
  for (const auto& run : runs) {
    if (run.size() != rounds.size()) {
      throw Error(ErrorCode::MissingInput,
                  "seed runs disagree on round count");
    }
  }

  std::string tsv = "metric\tround\tmean\tstd\n";
  for (int idx = 0; idx < 5; ++idx) {
    for (size_t r = 0; r < rounds.size(); ++r) {
      double mean = 0.0;
      for (const auto& run : runs) mean += metric_value(run[r].second, idx);
      mean /= static_cast<double>(runs.size());
      double var = 0.0;
      for (const auto& run : runs) {
        double d = metric_value(run[r].second, idx) - mean;
        var += d * d;
      }
      var /= static_cast<double>(runs.size());
      tsv += std::string(metric_names[idx]) + "\t" +
             std::to_string(rounds[r]) + "\t" + fmt_double(mean) + "\t" +
             fmt_double(std::sqrt(var)) + "\n";
    }
  }
  io::atomic_write(out_dir / "report.tsv", tsv);
}

}  // namespace cmd
}  // namespace mopr
