// Acceptance suite: every release gate runs here with its tolerance pinned
// in code, one pass/fail line per criterion. Exits nonzero if any gate
// fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mopr/commands.hpp"

using namespace mopr;
using namespace mopr::evolve;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using CriterionFn = std::function<Outcome()>;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Support guarantees of the selection distribution
// ---------------------------------------------------------------------------

Outcome support_guarantees() {
  Rng rng(9001);
  int violations = 0;
  int sets_with_front = 0;
  int total_sets = 0;
  // Random scores clear the protected thresholds rarely, so keep drawing
  // sets until a thousand of them exercise a nonempty front.
  while (sets_with_front < 1000) {
    ++total_sets;
    int n = 1 + static_cast<int>(rng.index(16));
    auto candidates = testing::random_candidates(rng, n);
    auto profile = default_profile(testing::random_mode(rng));
    auto front = pareto_front(candidates, profile);
    auto oracle = testing::front_oracle(candidates, profile);
    if (front.empty()) continue;
    ++sets_with_front;
    auto dist = supervision_distribution(front, profile, 1.0, 5.0);
    std::set<int> front_set(oracle.begin(), oracle.end());
    std::set<int> support;
    for (size_t k = 0; k < dist.support.size(); ++k) {
      if (dist.probs[k] > 0.0) {
        support.insert(dist.support[k].candidate_index);
        if (!front_set.count(dist.support[k].candidate_index) ||
            !testing::feasible_oracle(dist.support[k], profile)) {
          ++violations;
        }
      }
    }
    for (const auto& c : candidates) {
      bool dominated_feasible = testing::feasible_oracle(c, profile) &&
                                !front_set.count(c.candidate_index);
      if (dominated_feasible && support.count(c.candidate_index)) {
        ++violations;
      }
    }
  }
  Outcome out;
  out.pass = violations == 0 && sets_with_front >= 1000;
  out.detail = std::to_string(total_sets) + " sets, " +
               std::to_string(sets_with_front) + " with nonempty fronts, " +
               std::to_string(violations) + " violations";
  return out;
}

// ---------------------------------------------------------------------------
// 2. KL-regularized projection: the closed form maximizes the objective
// ---------------------------------------------------------------------------

Outcome kl_projection() {
  Rng rng(9002);
  int instances = 0;
  int objective_violations = 0;
  double worst_argmax_l1 = 0.0;
  while (instances < 200) {
    auto candidates = testing::random_candidates(rng, 6);
    auto profile = default_profile(testing::random_mode(rng));
    auto front = pareto_front(candidates, profile);
    if (front.size() < 2 || front.size() > 4) continue;
    ++instances;
    double beta = 0.5 + 5.5 * rng.uniform();
    double lambda = 2.0 * rng.uniform();
    auto closed = supervision_distribution(front, profile, lambda, beta);
    double closed_value =
        selection_objective(front, profile, lambda, beta, closed.probs);

    // Exhaustive simplex grid at step 0.01, enumerated independently here.
    const int ticks = 100;
    const int n = static_cast<int>(front.size());
    std::vector<int> counts(static_cast<size_t>(n), 0);
    std::vector<double> q(static_cast<size_t>(n), 0.0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
      if (pos == n - 1) {
        counts[static_cast<size_t>(pos)] = remaining;
        for (int i = 0; i < n; ++i) {
          q[static_cast<size_t>(i)] = counts[static_cast<size_t>(i)] / 100.0;
        }
        if (selection_objective(front, profile, lambda, beta, q) >
            closed_value + 1e-12) {
          ++objective_violations;
        }
        return;
      }
      for (int c = 0; c <= remaining; ++c) {
        counts[static_cast<size_t>(pos)] = c;
        rec(pos + 1, remaining - c);
      }
    };
    rec(0, ticks);

    // 10,000 random simplex points per instance.
    for (int draw = 0; draw < 10000; ++draw) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        q[static_cast<size_t>(i)] = -std::log(u);
        total += q[static_cast<size_t>(i)];
      }
      for (int i = 0; i < n; ++i) q[static_cast<size_t>(i)] /= total;
      if (selection_objective(front, profile, lambda, beta, q) >
          closed_value + 1e-12) {
        ++objective_violations;
      }
    }

    auto oracle = q_star_oracle(front, profile, lambda, beta, 0.01);
    worst_argmax_l1 = std::max(
        worst_argmax_l1, testing::l1_distance(closed.probs, oracle.probs));
  }
  Outcome out;
  out.pass = objective_violations == 0 && worst_argmax_l1 <= 0.02;
  out.detail = "200 instances, " + std::to_string(objective_violations) +
               " objective violations, worst argmax L1 " +
               fmt(worst_argmax_l1);
  return out;
}

// ---------------------------------------------------------------------------
// 3. Analytic gradients vs central finite differences
// ---------------------------------------------------------------------------

Alphabet grad_alphabet() {
  return {{"a0", "a1", "a2", "a3", "a4", "stop"}, {0, 0, 0, 0, 0, 1}};
}

PolicyParams grad_policy(Rng& rng, int horizon = 3) {
  auto params = make_uniform_policy(grad_alphabet(), horizon);
  for (int id = 0; id < 3; ++id) {
    auto ctx = repair_context(TaskMode::AttackedLegitimate, "r1a1", id, 3,
                              0x20 + static_cast<uint64_t>(id));
    for (int t = 0; t < horizon; ++t) {
      auto& g = params.group_row(ctx.group_key(), t);
      auto& c = params.ctx_row(ctx.exact_key(), t);
      for (size_t a = 0; a < g.size(); ++a) {
        g[a] = rng.normal(0.0, 0.8);
        c[a] = rng.normal(0.0, 0.8);
      }
    }
  }
  return params;
}

Outcome gradient_correctness() {
  Rng rng(9003);
  double worst = 0.0;
  TrainConfig cfg;  // clip_eps = 0.2, kl_coef = 0.01
  for (int it = 0; it < 50; ++it) {
    // SFT instance.
    auto params = grad_policy(rng);
    std::vector<ReplayEntry> replay;
    int n = 1 + static_cast<int>(rng.index(4));
    for (int i = 0; i < n; ++i) {
      Trajectory repair;
      int len = 1 + static_cast<int>(rng.index(2));
      for (int t = 0; t < len; ++t) {
        repair.push_back(static_cast<int>(rng.index(5)));
      }
      repair.push_back(5);
      replay.push_back({repair_context(TaskMode::AttackedLegitimate, "r1a1",
                                       static_cast<int>(rng.index(3)), 3,
                                       0x20 + rng.index(3)),
                        repair,
                        ObjectiveVector{1, 1, 1, 1}});
    }
    auto [sft_loss, sft_grad] = sft_loss_and_grad(params, replay);
    auto sft_fn = [&replay](const PolicyParams& p) {
      return sft_loss_and_grad(p, replay).first;
    };
    worst = std::max(worst, finite_difference_check(sft_fn, params, sft_grad, 1e-5));

    // Clipped-objective instance with theta, theta_old and ref all distinct.
    auto theta = grad_policy(rng);
    auto sampler = grad_policy(rng);
    auto ref = grad_policy(rng);
    RolloutGroup group;
    group.ctx = repair_context(TaskMode::AttackedLegitimate, "r1a1",
                               static_cast<int>(rng.index(3)), 3,
                               0x20 + rng.index(3));
    int g_size = 3 + static_cast<int>(rng.index(3));
    for (int g = 0; g < g_size; ++g) {
      auto s = sample_trajectory(sampler, group.ctx, 1.0, rng.next_u64());
      group.old_log_probs.push_back(log_prob(sampler, group.ctx, s.actions));
      group.completions.push_back(s.actions);
      group.rewards.push_back(rng.uniform());
    }
    auto [g_loss, g_grad] = group_loss_and_grad(theta, group, ref, cfg);
    auto g_fn = [&group, &ref, &cfg](const PolicyParams& p) {
      return group_loss_and_grad(p, group, ref, cfg).first;
    };
    worst = std::max(worst, finite_difference_check(g_fn, theta, g_grad, 1e-5));
  }
  Outcome out;
  out.pass = worst < 1e-4;
  out.detail = "50 SFT + 50 clipped-objective instances, worst rel err " + fmt(worst);
  return out;
}

// ---------------------------------------------------------------------------
// 4. Group-objective algebra
// ---------------------------------------------------------------------------

Outcome group_algebra() {
  Rng rng(9004);
  double worst_sum = 0.0;
  double worst_loss = 0.0;
  bool shift_exact = true;
  for (int it = 0; it < 300; ++it) {
    // Mean-zero advantages on arbitrary real rewards.
    std::vector<double> rewards;
    int n = 2 + static_cast<int>(rng.index(10));
    for (int i = 0; i < n; ++i) rewards.push_back(rng.normal(0, 2));
    auto adv = group_advantages(rewards);
    double total = 0.0;
    for (double a : adv) total += a;
    worst_sum = std::max(worst_sum, std::abs(total));

    // Exact shift invariance on dyadic rewards with power-of-two sizes.
    const int sizes[3] = {2, 4, 8};
    std::vector<double> dyadic;
    int m = sizes[rng.index(3)];
    for (int i = 0; i < m; ++i) {
      dyadic.push_back(static_cast<double>(rng.index(129)) / 64.0);
    }
    auto base = group_advantages(dyadic);
    double shift = static_cast<double>(rng.index(17)) / 4.0;
    for (auto& r : dyadic) r += shift;
    if (group_advantages(dyadic) != base) shift_exact = false;
  }
  // Loss at theta == theta_old with kl_coef = 0.
  TrainConfig cfg;
  cfg.kl_coef = 0.0;
  for (int it = 0; it < 50; ++it) {
    auto params = grad_policy(rng);
    RolloutGroup group;
    group.ctx = repair_context(TaskMode::AttackedLegitimate, "r1a1",
                               static_cast<int>(rng.index(3)), 3, 0x21);
    for (int g = 0; g < 4; ++g) {
      auto s = sample_trajectory(params, group.ctx, 1.0, rng.next_u64());
      group.old_log_probs.push_back(log_prob(params, group.ctx, s.actions));
      group.completions.push_back(s.actions);
      group.rewards.push_back(rng.uniform());
    }
    auto [loss, grad] = group_loss_and_grad(params, group, params, cfg);
    worst_loss = std::max(worst_loss, std::abs(loss));
  }
  Outcome out;
  out.pass = worst_sum <= 1e-12 && worst_loss <= 1e-12 && shift_exact;
  out.detail = "worst advantage sum " + fmt(worst_sum) +
               ", worst on-policy loss " + fmt(worst_loss) +
               (shift_exact ? ", shift invariance exact" : ", SHIFT DRIFT");
  return out;
}

// ---------------------------------------------------------------------------
// 5. Exact-enumeration consistency on the default run
// ---------------------------------------------------------------------------

Outcome enumeration_consistency() {
  auto suite = world::generate_task_suite(7, 10, 10, 10, 0.5);
  auto params0 = make_base_policy(suite, world::kDefaultHorizon, 7);
  EvolveConfig cfg;
  TrainConfig tcfg;
  auto result = run_evolution(params0, suite, cfg, tcfg);
  const auto& params = result.params;

  // Every context the run touched: task contexts for the whole suite plus
  // the repair contexts of both rounds (and any still minable failures).
  std::vector<ContextKey> all_ctx;
  for (const auto& task : suite.tasks) all_ctx.push_back(task_context_for(task));
  std::vector<ContextKey> sampled_ctx;
  std::set<std::string> seen;
  for (const auto& round : result.rounds) {
    for (const auto& record : round.records) {
      all_ctx.push_back(record.ctx);
    }
    for (const auto& entry : round.replay) {
      if (seen.insert(entry.ctx.exact_key()).second) {
        sampled_ctx.push_back(entry.ctx);
      }
    }
  }
  for (const auto& failure : mine_failures(params, suite, cfg, 99)) {
    all_ctx.push_back(repair_context_for(failure));
  }

  double worst_sum_err = 0.0;
  for (const auto& ctx : all_ctx) {
    for (double temp : {1.0, cfg.temperature}) {
      auto dist = enumerate_distribution(params, ctx, temp);
      double total = 0.0;
      for (const auto& [traj, p] : dist) total += p;
      worst_sum_err = std::max(worst_sum_err, std::abs(total - 1.0));
    }
  }

  // Monte Carlo agreement where the pipeline actually samples: the trained
  // repair contexts of the replay buffer. (A 1e5-sample histogram cannot
  // resolve an L1 of 0.02 against a diffuse distribution over ~3.6e3
  // outcomes; training concentrates these contexts, making the bound
  // meaningful.)
  double worst_l1 = 0.0;
  const int n_samples = 100000;
  int ctx_no = 0;
  for (const auto& ctx : sampled_ctx) {
    auto dist = enumerate_distribution(params, ctx);
    std::map<Trajectory, double> expected;
    for (const auto& [traj, p] : dist) expected[traj] = p;
    std::map<Trajectory, int> counts;
    for (int i = 0; i < n_samples; ++i) {
      auto s = sample_trajectory(params, ctx, 1.0,
                                 mix_seed(7777, static_cast<uint64_t>(ctx_no),
                                          static_cast<uint64_t>(i)));
      counts[s.actions] += 1;
    }
    double l1 = 0.0;
    for (const auto& [traj, p] : expected) {
      auto it = counts.find(traj);
      double f = it == counts.end() ? 0.0
                                    : static_cast<double>(it->second) / n_samples;
      l1 += std::abs(p - f);
    }
    worst_l1 = std::max(worst_l1, l1);
    ++ctx_no;
  }

  Outcome out;
  out.pass = worst_sum_err <= 1e-9 && worst_l1 < 0.02 && !sampled_ctx.empty();
  out.detail = std::to_string(all_ctx.size()) + " contexts, worst |sum-1| " +
               fmt(worst_sum_err) + "; " + std::to_string(sampled_ctx.size()) +
               " sampled contexts, worst MC L1 " + fmt(worst_l1);
  return out;
}

// ---------------------------------------------------------------------------
// 6. Directional end-to-end evolution across seeds
// ---------------------------------------------------------------------------

Outcome directional_evolution() {
  double base_asr = 0.0, final_asr = 0.0, base_tsr = 0.0, final_tsr = 0.0;
  bool hcr_down = true, vrr_up = true;
  for (uint64_t seed : {7ull, 8ull, 9ull}) {
    auto suite = world::generate_task_suite(seed, 10, 10, 10, 0.5);
    auto params0 = make_base_policy(suite, world::kDefaultHorizon, seed);
    EvolveConfig cfg;
    cfg.seed = seed;
    TrainConfig tcfg;
    auto result = run_evolution(params0, suite, cfg, tcfg);
    const auto& base = result.rounds.front().report.before;
    const auto& fin = result.rounds.back().report.after;
    base_asr += base.asr / 3.0;
    final_asr += fin.asr / 3.0;
    base_tsr += base.tsr / 3.0;
    final_tsr += fin.tsr / 3.0;
    if (!(fin.hcr < base.hcr)) hcr_down = false;
    if (!(fin.vrr > base.vrr)) vrr_up = false;
  }
  double rel_drop = (base_asr - final_asr) / base_asr;
  Outcome out;
  out.pass = base_asr > 0.0 && rel_drop >= 0.30 &&
             (final_tsr - base_tsr) >= 0.10 && hcr_down && vrr_up;
  out.detail = "ASR " + fmt(base_asr) + "->" + fmt(final_asr) + " (rel drop " +
               fmt(rel_drop) + "), TSR " + fmt(base_tsr) + "->" +
               fmt(final_tsr) + ", HCR down in every seed: " +
               (hcr_down ? "yes" : "NO") + ", VRR up in every seed: " +
               (vrr_up ? "yes" : "NO");
  return out;
}

// ---------------------------------------------------------------------------
// 7. Degenerate-refusal exclusion fixture
// ---------------------------------------------------------------------------

Outcome refusal_exclusion() {
  auto benign = default_profile(TaskMode::Benign);
  // Benign-mode failure; the refusal-only candidate has the best security
  // score of the set but fails the over-refusal threshold.
  std::vector<ScoredCandidate> candidates = {
      testing::cand({1.00, 0.20, 0.00, 1.00}, 0.40, 0, {world::kRefuseTask}),
      testing::cand({0.90, 0.90, 1.00, 0.90}, 0.25, 1,
                    {world::kReadG1, world::kAnswerG1}),
      testing::cand({0.80, 0.75, 1.00, 0.85}, 0.15, 2,
                    {world::kReadG1, world::kNoop, world::kAnswerG1}),
  };
  EvolveConfig cfg;
  bool pareto_ok = true;
  // The front path must avoid the refusal-only candidate regardless of how
  // the candidate set is rotated.
  for (size_t rotation = 0; rotation < candidates.size(); ++rotation) {
    std::vector<ScoredCandidate> rotated;
    for (size_t i = 0; i < candidates.size(); ++i) {
      rotated.push_back(candidates[(i + rotation) % candidates.size()]);
    }
    auto outcome = select_for_failure(rotated, benign, cfg);
    if (!outcome.selected ||
        outcome.selected->trajectory == Trajectory{world::kRefuseTask}) {
      pareto_ok = false;
    }
  }
  EvolveConfig safety_cfg;
  safety_cfg.variant = Variant::SafetyOnly;
  auto safety = select_for_failure(candidates, benign, safety_cfg);
  bool safety_picks_refusal =
      safety.selected &&
      safety.selected->trajectory == Trajectory{world::kRefuseTask};
  Outcome out;
  out.pass = pareto_ok && safety_picks_refusal;
  out.detail = std::string("front path avoids refusal: ") +
               (pareto_ok ? "yes" : "NO") + ", security-only selects it: " +
               (safety_picks_refusal ? "yes" : "NO");
  return out;
}

// ---------------------------------------------------------------------------
// 8. Ablation ordering across fixed seeds
// ---------------------------------------------------------------------------

Outcome ablation_ordering() {
  auto mean_final = [](Variant variant) {
    MetricsReport mean;
    for (uint64_t seed : {7ull, 8ull, 9ull}) {
      auto suite = world::generate_task_suite(seed, 10, 10, 10, 0.5);
      auto params0 = make_base_policy(suite, world::kDefaultHorizon, seed);
      EvolveConfig cfg;
      cfg.seed = seed;
      cfg.variant = variant;
      TrainConfig tcfg;
      auto result = run_evolution(params0, suite, cfg, tcfg);
      const auto& fin = result.rounds.back().report.after;
      mean.asr += fin.asr / 3.0;
      mean.tsr += fin.tsr / 3.0;
      mean.hcr += fin.hcr / 3.0;
      mean.vrr += fin.vrr / 3.0;
    }
    return mean;
  };
  auto full = mean_final(Variant::Full);
  auto no_pareto = mean_final(Variant::NoPareto);
  auto sft_only = mean_final(Variant::SftOnly);
  auto safety_only = mean_final(Variant::SafetyOnly);
  auto no_rescoring = mean_final(Variant::NoRescoring);

  Outcome out;
  out.pass = full.tsr >= no_pareto.tsr && full.tsr >= sft_only.tsr &&
             full.tsr >= safety_only.tsr && full.asr <= no_rescoring.asr;
  out.detail = "TSR full " + fmt(full.tsr) + " vs no_pareto " +
               fmt(no_pareto.tsr) + ", sft_only " + fmt(sft_only.tsr) +
               ", safety_only " + fmt(safety_only.tsr) + "; ASR full " +
               fmt(full.asr) + " vs no_rescoring " + fmt(no_rescoring.asr);
  return out;
}

// ---------------------------------------------------------------------------
// 9. Offline/online replay equivalence
// ---------------------------------------------------------------------------

Outcome offline_equivalence() {
  fs::path dir = fs::temp_directory_path() /
                 ("mopr_accept_" + std::to_string(static_cast<long long>(
                                       now_seconds() * 1e6)));
  fs::create_directories(dir);
  int compared = 0;
  bool all_equal = true;
  for (uint64_t seed : {7ull, 8ull, 9ull}) {
    RunConfig cfg;
    cfg.seed = seed;
    fs::path run = dir / ("run_" + std::to_string(seed));
    cmd::gen_tasks(cfg, run);
    cmd::evolve_run(cfg, run / "tasks.jsonl", run / "out");
    for (int round = 1; round <= cfg.rounds; ++round) {
      fs::path cands =
          run / "out" / ("candidates_round_" + std::to_string(round) + ".jsonl");
      fs::path offline = run / ("offline_" + std::to_string(round));
      cmd::replay_offline(cfg, cands, offline);
      auto a = io::read_file(offline / "replay.jsonl");
      auto b = io::read_file(
          run / "out" / ("replay_round_" + std::to_string(round) + ".jsonl"));
      ++compared;
      if (a != b) all_equal = false;
    }
  }
  fs::remove_all(dir);
  Outcome out;
  out.pass = all_equal && compared == 6;
  out.detail = std::to_string(compared) + " replay files compared, " +
               (all_equal ? "all byte-identical" : "MISMATCH");
  return out;
}

}  // namespace

int main() {
  struct Gate {
    const char* name;
    CriterionFn fn;
    double budget_seconds;  // 0 = no stated budget
  };
  const std::vector<Gate> gates = {
      {"support guarantees over random candidate sets", support_guarantees, 10.0},
      {"KL-regularized projection optimality", kl_projection, 60.0},
      {"analytic gradients match finite differences", gradient_correctness, 0.0},
      {"group-objective algebra", group_algebra, 0.0},
      {"exact-enumeration consistency", enumeration_consistency, 0.0},
      {"directional evolution across seeds", directional_evolution, 120.0},
      {"degenerate-refusal exclusion", refusal_exclusion, 0.0},
      {"ablation ordering", ablation_ordering, 0.0},
      {"offline/online replay equivalence", offline_equivalence, 0.0},
  };

  int failures = 0;
  for (size_t i = 0; i < gates.size(); ++i) {
    double start = now_seconds();
    Outcome outcome;
    try {
      outcome = gates[i].fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    double elapsed = now_seconds() - start;
    if (gates[i].budget_seconds > 0.0 && elapsed > gates[i].budget_seconds) {
      outcome.pass = false;
      outcome.detail += " [over " + fmt(gates[i].budget_seconds) + "s budget]";
    }
    std::printf("[%s] %zu. %s (%.2fs) %s\n", outcome.pass ? "PASS" : "FAIL",
                i + 1, gates[i].name, elapsed, outcome.detail.c_str());
    if (!outcome.pass) ++failures;
  }
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", gates.size());
  return 0;
}
