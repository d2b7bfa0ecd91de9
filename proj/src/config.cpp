#include "mopr/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mopr {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, "invalid value for " + key + ": " + value);
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, "invalid value for " + key + ": " + value);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, "invalid value for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::Config, "invalid value for " + key + ": " + value);
}

std::vector<double> parse_list(const std::string& key,
                               const std::string& value, size_t n) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(key, trim(item)));
  }
  if (out.size() != n) {
    throw Error(ErrorCode::Config,
                key + " must have " + std::to_string(n) + " entries");
  }
  return out;
}

template <size_t N>
std::string join_list(const std::array<double, N>& values) {
  std::string s;
  for (size_t i = 0; i < N; ++i) {
    if (i) s += ",";
    s += fmt_double(values[i]);
  }
  return s;
}

template <size_t N>
void assign_list(std::array<double, N>& target, const std::string& key,
                 const std::string& value) {
  auto v = parse_list(key, value, N);
  for (size_t i = 0; i < N; ++i) target[i] = v[i];
}

void check_unit(const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::Config, key + " must be in [0,1]");
  }
}

}  // namespace

void apply_config_override(RunConfig& cfg, const std::string& key,
                           const std::string& value) {
  if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "horizon") cfg.horizon = parse_int(key, value);
  else if (key == "n_benign") cfg.n_benign = parse_int(key, value);
  else if (key == "n_attacked") cfg.n_attacked = parse_int(key, value);
  else if (key == "n_harmful") cfg.n_harmful = parse_int(key, value);
  else if (key == "dev_fraction") cfg.dev_fraction = parse_double(key, value);
  else if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "beta") cfg.beta = parse_double(key, value);
  else if (key == "kappa_sec") cfg.kappa_sec = parse_double(key, value);
  else if (key == "strategy") {
    if (value == "top1") cfg.strategy = SelectStrategy::Top1;
    else if (value == "sample") cfg.strategy = SelectStrategy::Sample;
    else throw Error(ErrorCode::Config, "invalid value for strategy: " + value);
  } else if (key == "weights_benign") assign_list(cfg.weights_benign, key, value);
  else if (key == "weights_attacked") assign_list(cfg.weights_attacked, key, value);
  else if (key == "weights_harmful") assign_list(cfg.weights_harmful, key, value);
  else if (key == "kappa_benign") assign_list(cfg.kappa_benign, key, value);
  else if (key == "kappa_attacked") assign_list(cfg.kappa_attacked, key, value);
  else if (key == "kappa_harmful") assign_list(cfg.kappa_harmful, key, value);
  else if (key == "rounds") cfg.rounds = parse_int(key, value);
  else if (key == "repair_candidates") cfg.repair_candidates = parse_int(key, value);
  else if (key == "group_size") cfg.group_size = parse_int(key, value);
  else if (key == "replay_cap") cfg.replay_cap = parse_int(key, value);
  else if (key == "temperature") cfg.temperature = parse_double(key, value);
  else if (key == "variant") {
    auto v = evolve::variant_from_name(value);
    if (!v) throw Error(ErrorCode::Config, "invalid value for variant: " + value);
    cfg.variant = *v;
  } else if (key == "mining" || key == "eval_rollout") {
    evolve::RolloutMode mode;
    if (value == "argmax") mode = evolve::RolloutMode::Argmax;
    else if (value == "sample") mode = evolve::RolloutMode::Sample;
    else throw Error(ErrorCode::Config, "invalid value for " + key + ": " + value);
    (key == "mining" ? cfg.mining : cfg.eval_rollout) = mode;
  } else if (key == "init_policy") {
    if (value != "biased" && value != "uniform") {
      throw Error(ErrorCode::Config, "invalid value for init_policy: " + value);
    }
    cfg.init_policy = value;
  } else if (key == "sft_lr") cfg.train.sft_lr = parse_double(key, value);
  else if (key == "sft_epochs") cfg.train.sft_epochs = parse_int(key, value);
  else if (key == "group_lr") cfg.train.group_lr = parse_double(key, value);
  else if (key == "group_epochs") cfg.train.group_epochs = parse_int(key, value);
  else if (key == "clip_eps") cfg.train.clip_eps = parse_double(key, value);
  else if (key == "kl_coef") cfg.train.kl_coef = parse_double(key, value);
  else if (key == "resample_per_epoch") cfg.train.resample_per_epoch = parse_bool(key, value);
  else throw Error(ErrorCode::Config, "unknown config key: " + key);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open config file: " + path);
  }
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "config line " + std::to_string(line_no) +
                                         ": expected key = value");
    }
    apply_config_override(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  validate_config(cfg);
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(cfg.seed);
  kv["horizon"] = std::to_string(cfg.horizon);
  kv["n_benign"] = std::to_string(cfg.n_benign);
  kv["n_attacked"] = std::to_string(cfg.n_attacked);
  kv["n_harmful"] = std::to_string(cfg.n_harmful);
  kv["dev_fraction"] = fmt_double(cfg.dev_fraction);
  kv["lambda"] = fmt_double(cfg.lambda);
  kv["beta"] = fmt_double(cfg.beta);
  kv["kappa_sec"] = fmt_double(cfg.kappa_sec);
  kv["strategy"] = cfg.strategy == SelectStrategy::Top1 ? "top1" : "sample";
  kv["weights_benign"] = join_list(cfg.weights_benign);
  kv["weights_attacked"] = join_list(cfg.weights_attacked);
  kv["weights_harmful"] = join_list(cfg.weights_harmful);
  kv["kappa_benign"] = join_list(cfg.kappa_benign);
  kv["kappa_attacked"] = join_list(cfg.kappa_attacked);
  kv["kappa_harmful"] = join_list(cfg.kappa_harmful);
  kv["rounds"] = std::to_string(cfg.rounds);
  kv["repair_candidates"] = std::to_string(cfg.repair_candidates);
  kv["group_size"] = std::to_string(cfg.group_size);
  kv["replay_cap"] = std::to_string(cfg.replay_cap);
  kv["temperature"] = fmt_double(cfg.temperature);
  kv["variant"] = evolve::variant_name(cfg.variant);
  kv["mining"] = cfg.mining == evolve::RolloutMode::Argmax ? "argmax" : "sample";
  kv["eval_rollout"] =
      cfg.eval_rollout == evolve::RolloutMode::Argmax ? "argmax" : "sample";
  kv["init_policy"] = cfg.init_policy;
  kv["sft_lr"] = fmt_double(cfg.train.sft_lr);
  kv["sft_epochs"] = std::to_string(cfg.train.sft_epochs);
  kv["group_lr"] = fmt_double(cfg.train.group_lr);
  kv["group_epochs"] = std::to_string(cfg.train.group_epochs);
  kv["clip_eps"] = fmt_double(cfg.train.clip_eps);
  kv["kl_coef"] = fmt_double(cfg.train.kl_coef);
  kv["resample_per_epoch"] = cfg.train.resample_per_epoch ? "true" : "false";

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.horizon < 1 || cfg.horizon > 8) {
    throw Error(ErrorCode::Config, "horizon must be in 1..8");
  }
  if (cfg.n_benign < 1) throw Error(ErrorCode::Config, "n_benign must be >= 1");
  if (cfg.n_attacked < 1) throw Error(ErrorCode::Config, "n_attacked must be >= 1");
  if (cfg.n_harmful < 1) throw Error(ErrorCode::Config, "n_harmful must be >= 1");
  if (!(cfg.dev_fraction > 0.0 && cfg.dev_fraction < 1.0)) {
    throw Error(ErrorCode::Config, "dev_fraction must be in (0,1)");
  }
  if (!(cfg.lambda >= 0.0)) throw Error(ErrorCode::Config, "lambda must be >= 0");
  if (!(cfg.beta > 0.0)) throw Error(ErrorCode::Config, "beta must be > 0");
  check_unit("kappa_sec", cfg.kappa_sec);
  auto check_weights = [](const std::string& key,
                          const std::array<double, 4>& w) {
    double total = 0.0;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::Config, key + " entries must be >= 0");
      }
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorCode::Config, key + " must sum to 1");
    }
  };
  check_weights("weights_benign", cfg.weights_benign);
  check_weights("weights_attacked", cfg.weights_attacked);
  check_weights("weights_harmful", cfg.weights_harmful);
  auto check_kappas = [](const std::string& key,
                         const std::array<double, 3>& k) {
    for (double v : k) check_unit(key, v);
  };
  check_kappas("kappa_benign", cfg.kappa_benign);
  check_kappas("kappa_attacked", cfg.kappa_attacked);
  check_kappas("kappa_harmful", cfg.kappa_harmful);
  if (cfg.rounds < 1) throw Error(ErrorCode::Config, "rounds must be >= 1");
  if (cfg.repair_candidates < 1) {
    throw Error(ErrorCode::Config, "repair_candidates must be >= 1");
  }
  if (cfg.group_size < 2) {
    throw Error(ErrorCode::Config, "group_size must be >= 2");
  }
  if (cfg.replay_cap < 1) {
    throw Error(ErrorCode::Config, "replay_cap must be >= 1");
  }
  if (!(cfg.temperature > 0.0)) {
    throw Error(ErrorCode::Config, "temperature must be > 0");
  }
  if (!(cfg.train.sft_lr > 0.0)) throw Error(ErrorCode::Config, "sft_lr must be > 0");
  if (cfg.train.sft_epochs < 0) {
    throw Error(ErrorCode::Config, "sft_epochs must be >= 0");
  }
  if (!(cfg.train.group_lr > 0.0)) {
    throw Error(ErrorCode::Config, "group_lr must be > 0");
  }
  if (cfg.train.group_epochs < 0) {
    throw Error(ErrorCode::Config, "group_epochs must be >= 0");
  }
  if (!(cfg.train.clip_eps > 0.0 && cfg.train.clip_eps < 1.0)) {
    throw Error(ErrorCode::Config, "clip_eps must be in (0,1)");
  }
  if (!(cfg.train.kl_coef >= 0.0)) {
    throw Error(ErrorCode::Config, "kl_coef must be >= 0");
  }
}

evolve::Profiles RunConfig::profiles() const {
  evolve::Profiles p;
  auto fill = [this](ModeProfile& prof, const std::array<double, 4>& w,
                     const std::array<double, 3>& k) {
    prof.weights = w;
    prof.kappa_util = k[0];
    prof.kappa_or = k[1];
    prof.kappa_ctrl = k[2];
    prof.kappa_sec = kappa_sec;
  };
  fill(p.benign, weights_benign, kappa_benign);
  fill(p.attacked, weights_attacked, kappa_attacked);
  fill(p.harmful, weights_harmful, kappa_harmful);
  p.benign.mode = TaskMode::Benign;
  p.attacked.mode = TaskMode::AttackedLegitimate;
  p.harmful.mode = TaskMode::HarmfulRequest;
  return p;
}

evolve::EvolveConfig RunConfig::evolve_config() const {
  evolve::EvolveConfig e;
  e.rounds = rounds;
  e.repair_candidates = repair_candidates;
  e.group_size = group_size;
  e.replay_cap = replay_cap;
  e.lambda = lambda;
  e.beta = beta;
  e.temperature = temperature;
  e.strategy = strategy;
  e.variant = variant;
  e.mining = mining;
  e.eval_rollout = eval_rollout;
  e.profiles = profiles();
  e.seed = seed;
  return e;
}

}  // namespace mopr
