#include "mopr/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mopr {
namespace io {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::MissingInput,
                  "cannot write file: " + tmp.string());
    }
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open file: " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

ordered_json parse_line(const std::string& line, int line_no) {
  try {
    return ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Config, "line " + std::to_string(line_no) +
                                       ": malformed JSON (" + e.what() + ")");
  }
}

// Serialize a double through the shortest round-trip text form so JSON and
// CSV agree byte-for-byte on the same value.
ordered_json json_double(double v) {
  return ordered_json::parse(fmt_double(v));
}

ordered_json score_json(const ObjectiveVector& z) {
  return ordered_json::array(
      {json_double(z.sec), json_double(z.util), json_double(z.over_refusal),
       json_double(z.control)});
}

ObjectiveVector score_from_json(const ordered_json& j, int line_no) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::Config,
                "line " + std::to_string(line_no) + ": score must have 4 entries");
  }
  ObjectiveVector z{j[0].get<double>(), j[1].get<double>(),
                    j[2].get<double>(), j[3].get<double>()};
  if (!is_valid_objective(z)) {
    throw Error(ErrorCode::Config,
                "line " + std::to_string(line_no) + ": score outside [0,1]");
  }
  return z;
}

}  // namespace

std::vector<std::string> action_names(const Trajectory& traj,
                                      const Alphabet& alphabet) {
  std::vector<std::string> names;
  names.reserve(traj.size());
  for (int a : traj) names.push_back(alphabet.symbols[static_cast<size_t>(a)]);
  return names;
}

Trajectory actions_from_names(const std::vector<std::string>& names,
                              const Alphabet& alphabet, int line_no) {
  Trajectory traj;
  traj.reserve(names.size());
  for (const auto& name : names) {
    int idx = alphabet.index_of(name);
    if (idx < 0) {
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) +
                                         ": unknown action symbol " + name);
    }
    traj.push_back(idx);
  }
  return traj;
}

// --- task suites -------------------------------------------------------------

void write_suite(const fs::path& path, const world::TaskSuite& suite) {
  const Alphabet& alphabet = world::default_alphabet();
  std::string text;
  ordered_json header;
  header["artifact"] = "task_suite";
  header["schema_version"] = 1;
  header["seed"] = suite.seed;
  text += header.dump();
  text += "\n";
  for (const auto& task : suite.tasks) {
    ordered_json j;
    j["task_id"] = task.task_id;
    j["mode"] = mode_name(task.mode);
    j["goal"] = action_names(task.goal, alphabet);
    j["injection"] = task.injection
                         ? ordered_json(alphabet.symbols[static_cast<size_t>(*task.injection)])
                         : ordered_json(nullptr);
    j["harmful_goal"] =
        task.harmful_goal
            ? ordered_json(alphabet.symbols[static_cast<size_t>(*task.harmful_goal)])
            : ordered_json(nullptr);
    j["split"] = world::split_name(task.split);
    text += j.dump();
    text += "\n";
  }
  atomic_write(path, text);
}

world::TaskSuite read_suite(const fs::path& path) {
  const Alphabet& alphabet = world::default_alphabet();
  world::TaskSuite suite;
  auto lines = split_lines(read_file(path));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    int line_no = static_cast<int>(i) + 1;
    ordered_json j = parse_line(lines[i], line_no);
    if (j.contains("artifact")) {
      if (j["artifact"] != "task_suite") {
        throw Error(ErrorCode::Config,
                    "line " + std::to_string(line_no) + ": not a task suite");
      }
      suite.seed = j.value("seed", 0ull);
      continue;
    }
    try {
      world::Task t;
      t.task_id = j.at("task_id").get<int>();
      auto mode = mode_from_name(j.at("mode").get<std::string>());
      if (!mode) throw std::runtime_error("unknown mode");
      t.mode = *mode;
      t.goal = actions_from_names(
          j.at("goal").get<std::vector<std::string>>(), alphabet, line_no);
      if (!j.at("injection").is_null()) {
        int idx = alphabet.index_of(j.at("injection").get<std::string>());
        if (idx < 0) throw std::runtime_error("unknown injection symbol");
        t.injection = idx;
      }
      if (!j.at("harmful_goal").is_null()) {
        int idx = alphabet.index_of(j.at("harmful_goal").get<std::string>());
        if (idx < 0) throw std::runtime_error("unknown harmful_goal symbol");
        t.harmful_goal = idx;
      }
      std::string split = j.at("split").get<std::string>();
      if (split == "dev") t.split = world::Split::Dev;
      else if (split == "test") t.split = world::Split::Test;
      else throw std::runtime_error("unknown split");
      suite.tasks.push_back(std::move(t));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Config,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (suite.tasks.empty()) {
    throw Error(ErrorCode::Config, "task suite has no tasks: " + path.string());
  }
  return suite;
}

// --- policies -----------------------------------------------------------------

namespace {

ordered_json logit_table_json(const LogitTable& table,
                              const Alphabet& alphabet) {
  ordered_json out = ordered_json::object();
  for (const auto& [key, rows] : table) {
    ordered_json steps = ordered_json::object();
    for (size_t t = 0; t < rows.size(); ++t) {
      ordered_json row = ordered_json::object();
      for (size_t a = 0; a < rows[t].size(); ++a) {
        row[alphabet.symbols[a]] = json_double(rows[t][a]);
      }
      steps[std::to_string(t)] = std::move(row);
    }
    out[key] = std::move(steps);
  }
  return out;
}

LogitTable logit_table_from_json(const ordered_json& j, const Alphabet& alphabet,
                                 int horizon) {
  LogitTable table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto& rows = table[it.key()];
    rows.assign(static_cast<size_t>(horizon),
                std::vector<double>(static_cast<size_t>(alphabet.size()), 0.0));
    for (auto step_it = it.value().begin(); step_it != it.value().end();
         ++step_it) {
      int t = std::stoi(step_it.key());
      if (t < 0 || t >= horizon) {
        throw Error(ErrorCode::Config, "policy step index out of range");
      }
      for (auto sym_it = step_it.value().begin();
           sym_it != step_it.value().end(); ++sym_it) {
        int a = alphabet.index_of(sym_it.key());
        if (a < 0) {
          throw Error(ErrorCode::Config,
                      "policy references unknown symbol " + sym_it.key());
        }
        rows[static_cast<size_t>(t)][static_cast<size_t>(a)] =
            sym_it.value().get<double>();
      }
    }
  }
  return table;
}

}  // namespace

void write_policy(const fs::path& path, const PolicyParams& params) {
  ordered_json j;
  j["artifact"] = "policy";
  j["schema_version"] = 1;
  j["horizon"] = params.horizon;
  j["alphabet"] = params.alphabet.symbols;
  j["terminal"] = params.alphabet.terminal;
  j["group_logits"] = logit_table_json(params.group_logits, params.alphabet);
  j["ctx_logits"] = logit_table_json(params.ctx_logits, params.alphabet);
  atomic_write(path, j.dump(2) + "\n");
}

PolicyParams read_policy(const fs::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Config,
                "malformed policy file " + path.string() + ": " + e.what());
  }
  if (j.value("artifact", "") != "policy") {
    throw Error(ErrorCode::Config, "not a policy file: " + path.string());
  }
  PolicyParams params;
  params.horizon = j.at("horizon").get<int>();
  params.alphabet.symbols = j.at("alphabet").get<std::vector<std::string>>();
  params.alphabet.terminal = j.at("terminal").get<std::vector<uint8_t>>();
  if (params.alphabet.terminal.size() != params.alphabet.symbols.size()) {
    throw Error(ErrorCode::Config, "policy terminal flags mismatch alphabet");
  }
  params.group_logits =
      logit_table_from_json(j.at("group_logits"), params.alphabet, params.horizon);
  params.ctx_logits =
      logit_table_from_json(j.at("ctx_logits"), params.alphabet, params.horizon);
  return params;
}

// --- evolution artifacts --------------------------------------------------------

std::string candidate_log_text(
    const std::vector<evolve::FailureRecord>& records) {
  const Alphabet& alphabet = world::default_alphabet();
  std::string text;
  ordered_json header;
  header["artifact"] = "candidate_log";
  header["schema_version"] = 1;
  text += header.dump();
  text += "\n";
  for (const auto& record : records) {
    ordered_json j;
    j["task_id"] = record.failure.task.task_id;
    j["mode"] = mode_name(record.failure.task.mode);
    j["ctx"] = record.ctx.exact_key();
    j["failed"] = action_names(record.failure.trajectory, alphabet);
    j["failed_score"] = score_json(record.failure.score);
    j["violation_flags"] = record.failure.violation_flags;
    ordered_json cands = ordered_json::array();
    for (const auto& c : record.candidates) {
      ordered_json cj;
      cj["candidate_index"] = c.candidate_index;
      cj["actions"] = action_names(c.trajectory, alphabet);
      cj["score"] = score_json(c.score);
      cj["proposal_prob"] = json_double(c.proposal_prob);
      cands.push_back(std::move(cj));
    }
    j["candidates"] = std::move(cands);
    text += j.dump();
    text += "\n";
  }
  return text;
}

std::vector<OfflineCandidateSet> read_candidate_log(const fs::path& path,
                                                    const Alphabet& alphabet) {
  std::vector<OfflineCandidateSet> sets;
  auto lines = split_lines(read_file(path));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    int line_no = static_cast<int>(i) + 1;
    ordered_json j = parse_line(lines[i], line_no);
    if (j.contains("artifact")) {
      if (j["artifact"] != "candidate_log") {
        throw Error(ErrorCode::Config, "line " + std::to_string(line_no) +
                                           ": not a candidate log");
      }
      continue;
    }
    try {
      OfflineCandidateSet set;
      set.task_id = j.at("task_id").get<int>();
      auto mode = mode_from_name(j.at("mode").get<std::string>());
      if (!mode) throw std::runtime_error("unknown mode");
      set.mode = *mode;
      set.ctx = j.at("ctx").get<std::string>();
      for (const auto& cj : j.at("candidates")) {
        ScoredCandidate c;
        c.candidate_index = cj.at("candidate_index").get<int>();
        c.trajectory = actions_from_names(
            cj.at("actions").get<std::vector<std::string>>(), alphabet,
            line_no);
        if (c.trajectory.empty()) throw std::runtime_error("empty candidate");
        c.score = score_from_json(cj.at("score"), line_no);
        c.proposal_prob = cj.at("proposal_prob").get<double>();
        if (!(c.proposal_prob > 0.0) || c.proposal_prob > 1.0) {
          throw std::runtime_error("proposal_prob outside (0,1]");
        }
        set.candidates.push_back(std::move(c));
      }
      sets.push_back(std::move(set));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Config,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return sets;
}

std::string replay_text(const std::vector<ReplayLine>& lines,
                        const Alphabet& alphabet) {
  std::string text;
  ordered_json header;
  header["artifact"] = "replay";
  header["schema_version"] = 1;
  text += header.dump();
  text += "\n";
  for (const auto& line : lines) {
    ordered_json j;
    j["ctx"] = line.ctx;
    j["task_id"] = line.task_id;
    j["mode"] = mode_name(line.mode);
    j["repair"] = action_names(line.repair, alphabet);
    j["score"] = score_json(line.score);
    j["selection_score"] = json_double(line.selection_score);
    text += j.dump();
    text += "\n";
  }
  return text;
}

std::string round_reports_text(
    const std::vector<evolve::RoundReport>& reports) {
  std::string text;
  ordered_json header;
  header["artifact"] = "round_reports";
  header["schema_version"] = 1;
  text += header.dump();
  text += "\n";
  auto metrics_json = [](const evolve::MetricsReport& m) {
    ordered_json j;
    j["asr"] = json_double(m.asr);
    j["tsr"] = json_double(m.tsr);
    j["brr"] = json_double(m.brr);
    j["hcr"] = json_double(m.hcr);
    j["vrr"] = json_double(m.vrr);
    return j;
  };
  for (const auto& r : reports) {
    ordered_json j;
    j["round"] = r.round;
    j["variant"] = r.variant;
    j["failures"] = r.failures;
    j["skipped"] = r.skipped;
    j["mean_front_size"] = json_double(r.mean_front_size);
    j["replay_size"] = r.replay_size;
    j["before"] = metrics_json(r.before);
    j["after"] = metrics_json(r.after);
    text += j.dump();
    text += "\n";
  }
  return text;
}

std::string curves_csv(const std::vector<evolve::CurveRow>& rows) {
  std::string text = "round,phase,epoch,loss,mean_reward,mean_kl\n";
  for (const auto& r : rows) {
    text += std::to_string(r.round) + "," + r.phase + "," +
            std::to_string(r.epoch) + "," + fmt_double(r.loss) + "," +
            fmt_double(r.mean_reward) + "," + fmt_double(r.mean_kl) + "\n";
  }
  return text;
}

std::string metrics_csv(
    const std::vector<std::pair<int, evolve::MetricsReport>>& rows) {
  std::string text = "round,asr,tsr,brr,hcr,vrr\n";
  for (const auto& [round, m] : rows) {
    text += std::to_string(round) + "," + fmt_double(m.asr) + "," +
            fmt_double(m.tsr) + "," + fmt_double(m.brr) + "," +
            fmt_double(m.hcr) + "," + fmt_double(m.vrr) + "\n";
  }
  return text;
}

std::vector<std::pair<int, evolve::MetricsReport>> read_metrics_csv(
    const fs::path& path) {
  auto lines = split_lines(read_file(path));
  std::vector<std::pair<int, evolve::MetricsReport>> rows;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || i == 0) continue;  // header
    std::stringstream ss(lines[i]);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw Error(ErrorCode::Config, "metrics csv line " +
                                         std::to_string(i + 1) +
                                         ": expected 6 fields");
    }
    try {
      evolve::MetricsReport m;
      int round = std::stoi(fields[0]);
      m.asr = std::stod(fields[1]);
      m.tsr = std::stod(fields[2]);
      m.brr = std::stod(fields[3]);
      m.hcr = std::stod(fields[4]);
      m.vrr = std::stod(fields[5]);
      rows.emplace_back(round, m);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config,
                  "metrics csv line " + std::to_string(i + 1) + ": bad value");
    }
  }
  return rows;
}

std::string task_evals_text(const std::vector<evolve::TaskEval>& evals,
                            const Alphabet& alphabet) {
  std::string text;
  ordered_json header;
  header["artifact"] = "task_evals";
  header["schema_version"] = 1;
  text += header.dump();
  text += "\n";
  for (const auto& e : evals) {
    ordered_json j;
    j["task_id"] = e.task_id;
    j["mode"] = mode_name(e.mode);
    j["split"] = world::split_name(e.split);
    j["actions"] = action_names(e.actions, alphabet);
    j["score"] = score_json(e.score);
    text += j.dump();
    text += "\n";
  }
  return text;
}

}  // namespace io
}  // namespace mopr
