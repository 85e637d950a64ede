#include "optail/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include "optail/oracles.hpp"
#include "optail/plot.hpp"
#include "optail/rng.hpp"

namespace optail {

using nlohmann::json;

namespace {

// ---- strict JSON reading ---------------------------------------------------

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "manifest" : path) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ConfigError("unknown key '" + child(path, key) + "'");
  }
}

void read(const json& j, const std::string& path, const char* key, int& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(child(path, key) + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(child(path, key) + ": integer out of range");
  }
  out = static_cast<int>(x);
}

std::uint64_t as_seed(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(where + ": expected a non-negative integer");
}

void read(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
  if (j.contains(key)) out = as_seed(j.at(key), child(path, key));
}

void read(const json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(child(path, key) + ": expected a number");
  out = v.get<double>();
}

void read(const json& j, const std::string& path, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_null()) {
    out.reset();
    return;
  }
  if (!v.is_number()) throw ConfigError(child(path, key) + ": expected a number or null");
  out = v.get<double>();
}

void read(const json& j, const std::string& path, const char* key, bool& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(child(path, key) + ": expected true or false");
  out = v.get<bool>();
}

void read(const json& j, const std::string& path, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(child(path, key) + ": expected a string");
  out = v.get<std::string>();
}

template <class E>
using Names = std::initializer_list<std::pair<E, const char*>>;

template <class E>
const char* name_of(E value, Names<E> names) {
  for (const auto& [v, n] : names) {
    if (v == value) return n;
  }
  return "?";
}

template <class E>
E enum_from(const json& v, const std::string& where, Names<E> names) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  const auto s = v.get<std::string>();
  std::string options;
  for (const auto& [value, n] : names) {
    if (s == n) return value;
    options += options.empty() ? n : std::string(", ") + n;
  }
  throw ConfigError(where + ": unknown value '" + s + "' (expected one of " + options + ")");
}

template <class E>
void read(const json& j, const std::string& path, const char* key, E& out, Names<E> names) {
  if (j.contains(key)) out = enum_from(j.at(key), child(path, key), names);
}

const Names<EnvFamily> kFamilies = {{EnvFamily::gridworld, "gridworld"},
                                    {EnvFamily::combination_lock, "combination_lock"},
                                    {EnvFamily::cliff, "cliff"},
                                    {EnvFamily::garnet_random, "garnet_random"}};
const Names<ExpertKind> kExpertKinds = {{ExpertKind::optimal, "optimal"},
                                        {ExpertKind::epsilon_soft, "epsilon_soft"}};
const Names<RewardAlgorithm> kRewardAlgorithms = {{RewardAlgorithm::ogd, "ogd"},
                                                  {RewardAlgorithm::ftrl, "ftrl"}};
const Names<StepSchedule> kSchedules = {{StepSchedule::horizon_known, "horizon_known"},
                                        {StepSchedule::anytime, "anytime"}};
const Names<RewardInit> kInits = {{RewardInit::half, "half"}, {RewardInit::zero, "zero"}};
const Names<QSolveMode> kModes = {{QSolveMode::theoretical, "theoretical"},
                                  {QSolveMode::practical, "practical"}};
const Names<QInitializer> kInitializers = {
    {QInitializer::optimistic_ceiling, "optimistic_ceiling"},
    {QInitializer::empirical_backup, "empirical_backup"},
    {QInitializer::zero, "zero"}};
const Names<Algorithm> kAlgorithms = {{Algorithm::opt_ail, "opt_ail"}, {Algorithm::bc, "bc"}};

ExpertSpec expert_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "epsilon"});
  ExpertSpec e;
  read(j, path, "kind", e.kind, kExpertKinds);
  read(j, path, "epsilon", e.epsilon);
  return e;
}

RewardSettings reward_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"algorithm", "schedule", "step_scale", "beta", "init"});
  RewardSettings r;
  read(j, path, "algorithm", r.algorithm, kRewardAlgorithms);
  read(j, path, "schedule", r.schedule, kSchedules);
  read(j, path, "step_scale", r.step_scale);
  read(j, path, "beta", r.beta);
  read(j, path, "init", r.init, kInits);
  return r;
}

QSettings q_from_json(const json& j, const std::string& path) {
  check_keys(j, path,
             {"lambda", "lambda_scale", "gec_guess", "mode", "max_iterations", "step_size",
              "initializers", "random_restarts", "polyak_rate", "tight_clip", "tolerance"});
  QSettings q;
  read(j, path, "lambda", q.lambda);
  read(j, path, "lambda_scale", q.lambda_scale);
  read(j, path, "gec_guess", q.gec_guess);
  auto& s = q.solver;
  read(j, path, "mode", s.mode, kModes);
  read(j, path, "max_iterations", s.max_iterations);
  read(j, path, "step_size", s.step_size);
  read(j, path, "random_restarts", s.random_restarts);
  read(j, path, "polyak_rate", s.polyak_rate);
  read(j, path, "tight_clip", s.tight_clip);
  read(j, path, "tolerance", s.tolerance);
  if (j.contains("initializers")) {
    const auto& list = j.at("initializers");
    const auto where = child(path, "initializers");
    if (!list.is_array()) throw ConfigError(where + ": expected an array");
    s.initializers.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.initializers.push_back(
          enum_from(list[i], where + "[" + std::to_string(i) + "]", kInitializers));
    }
  }
  return q;
}

ExperimentCell cell_from_json(const json& j, const std::string& path) {
  check_keys(j, path,
             {"name", "algorithm", "env", "expert", "num_demos", "iterations", "eval_every",
              "reward", "q"});
  if (!j.contains("name")) throw ConfigError(child(path, "name") + ": required");
  ExperimentCell cell;
  read(j, path, "name", cell.name);
  read(j, path, "algorithm", cell.algorithm, kAlgorithms);
  auto& c = cell.config;
  if (j.contains("env")) c.env = env_spec_from_json(j.at("env"), child(path, "env"));
  if (j.contains("expert")) c.expert = expert_from_json(j.at("expert"), child(path, "expert"));
  read(j, path, "num_demos", c.num_demos);
  read(j, path, "iterations", c.iterations);
  read(j, path, "eval_every", c.eval_every);
  if (j.contains("reward")) c.reward = reward_from_json(j.at("reward"), child(path, "reward"));
  if (j.contains("q")) c.q = q_from_json(j.at("q"), child(path, "q"));
  return cell;
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---- number formatting -----------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
  written.push_back(path.string());
}

std::string run_key(const std::string& cell, std::uint64_t seed) {
  return cell + "__seed" + std::to_string(seed);
}

}  // namespace

EnvSpec env_spec_from_json(const json& j, const std::string& path) {
  check_keys(j, path,
             {"family", "horizon", "width", "height", "num_states", "num_actions", "branching",
              "lock_width", "noise", "reward_density", "seed"});
  EnvSpec e;
  read(j, path, "family", e.family, kFamilies);
  read(j, path, "horizon", e.horizon);
  read(j, path, "width", e.width);
  read(j, path, "height", e.height);
  read(j, path, "num_states", e.num_states);
  read(j, path, "num_actions", e.num_actions);
  read(j, path, "branching", e.branching);
  read(j, path, "lock_width", e.lock_width);
  read(j, path, "noise", e.noise);
  read(j, path, "reward_density", e.reward_density);
  read(j, path, "seed", e.seed);
  return e;
}

json env_spec_to_json(const EnvSpec& e) {
  return json{{"family", name_of(e.family, kFamilies)},
              {"horizon", e.horizon},
              {"width", e.width},
              {"height", e.height},
              {"num_states", e.num_states},
              {"num_actions", e.num_actions},
              {"branching", e.branching},
              {"lock_width", e.lock_width},
              {"noise", e.noise},
              {"reward_density", e.reward_density},
              {"seed", e.seed}};
}

ExperimentManifest manifest_from_json(const json& j) {
  check_keys(j, "", {"name", "seeds", "output_dir", "parallel", "cells"});
  for (const char* key : {"name", "seeds", "cells"}) {
    if (!j.contains(key)) throw ConfigError(std::string(key) + ": required");
  }
  ExperimentManifest m;
  read(j, "", "name", m.name);
  read(j, "", "output_dir", m.output_dir);
  read(j, "", "parallel", m.parallel);
  const auto& seeds = j.at("seeds");
  if (!seeds.is_array()) throw ConfigError("seeds: expected an array");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    m.seeds.push_back(as_seed(seeds[i], "seeds[" + std::to_string(i) + "]"));
  }
  const auto& cells = j.at("cells");
  if (!cells.is_array()) throw ConfigError("cells: expected an array");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    m.cells.push_back(cell_from_json(cells[i], "cells[" + std::to_string(i) + "]"));
  }
  validate_manifest(m);
  return m;
}

ExperimentManifest parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

json manifest_to_json(const ExperimentManifest& m) {
  json cells = json::array();
  for (const auto& cell : m.cells) {
    const auto& c = cell.config;
    json inits = json::array();
    for (auto init : c.q.solver.initializers) inits.push_back(name_of(init, kInitializers));
    cells.push_back(json{
        {"name", cell.name},
        {"algorithm", name_of(cell.algorithm, kAlgorithms)},
        {"env", env_spec_to_json(c.env)},
        {"expert", {{"kind", name_of(c.expert.kind, kExpertKinds)}, {"epsilon", c.expert.epsilon}}},
        {"num_demos", c.num_demos},
        {"iterations", c.iterations},
        {"eval_every", c.eval_every},
        {"reward",
         {{"algorithm", name_of(c.reward.algorithm, kRewardAlgorithms)},
          {"schedule", name_of(c.reward.schedule, kSchedules)},
          {"step_scale", c.reward.step_scale},
          {"beta", optional_to_json(c.reward.beta)},
          {"init", name_of(c.reward.init, kInits)}}},
        {"q",
         {{"lambda", optional_to_json(c.q.lambda)},
          {"lambda_scale", c.q.lambda_scale},
          {"gec_guess", optional_to_json(c.q.gec_guess)},
          {"mode", name_of(c.q.solver.mode, kModes)},
          {"max_iterations", c.q.solver.max_iterations},
          {"step_size", c.q.solver.step_size},
          {"initializers", inits},
          {"random_restarts", c.q.solver.random_restarts},
          {"polyak_rate", c.q.solver.polyak_rate},
          {"tight_clip", c.q.solver.tight_clip},
          {"tolerance", c.q.solver.tolerance}}}});
  }
  return json{{"name", m.name},
              {"seeds", m.seeds},
              {"output_dir", m.output_dir},
              {"parallel", m.parallel},
              {"cells", cells}};
}

void validate_manifest(const ExperimentManifest& m) {
  if (m.name.empty()) throw ConfigError("name: must be nonempty");
  if (m.seeds.empty()) throw ConfigError("seeds: must be nonempty");
  for (std::size_t i = 0; i < m.seeds.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (m.seeds[i] == m.seeds[k]) {
        throw ConfigError("seeds[" + std::to_string(i) + "]: duplicate seed " +
                          std::to_string(m.seeds[i]));
      }
    }
  }
  if (m.cells.empty()) throw ConfigError("cells: must be nonempty");
  if (m.parallel < 1) throw ConfigError("parallel: must be >= 1");
  for (std::size_t i = 0; i < m.cells.size(); ++i) {
    const std::string path = "cells[" + std::to_string(i) + "]";
    const auto& name = m.cells[i].name;
    const bool safe = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
    if (!safe) throw ConfigError(path + ".name: use letters, digits, '_', '-', '.' only");
    for (std::size_t k = 0; k < i; ++k) {
      if (m.cells[k].name == name) throw ConfigError(path + ".name: duplicate cell name " + name);
    }
    try {
      validate_run_config(m.cells[i].config);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
}

RunRecord run_bc(const RunConfig& cfg) {
  validate_run_config(cfg);
  const TabularMdp mdp = instantiate(cfg.env);
  auto [expert, demos] = generate_expert(mdp, cfg.expert, cfg.num_demos,
                                         derive_seed(cfg.seed, SeedStream::expert_demos, 0));
  const Policy bc = bc_baseline(mdp, demos);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  RunRecord record;
  record.rng_algorithm = kRngAlgorithm;
  record.v_expert_true = policy_value(mdp, mdp.true_reward, expert);
  record.mixture_value = policy_value(mdp, mdp.true_reward, bc);
  record.imitation_gap = record.v_expert_true - record.mixture_value;
  record.reward_error = nan;
  record.policy_error = nan;
  record.eps_r_opt = nan;
  record.lambda = nan;
  for (int k = 1; k <= cfg.iterations; ++k) {
    if (k % cfg.eval_every != 0 && k != cfg.iterations) continue;
    IterationLog row;
    row.iteration = k;
    row.interactions = static_cast<long long>(k) * mdp.shape.horizon;
    row.v_policy_true = record.mixture_value;
    row.v_expert_true = record.v_expert_true;
    row.v_policy_learned = row.v_expert_learned = nan;
    row.be = row.optimism = row.objective = nan;
    row.eps_q_opt_proxy = row.eps_r_opt = nan;
    row.mixture_value = record.mixture_value;
    row.gap = record.imitation_gap;
    row.reward_error = row.policy_error = nan;
    record.log.push_back(row);
  }
  return record;
}

RunRecord run_cell(const ExperimentCell& cell, std::uint64_t seed) {
  RunConfig cfg = cell.config;
  cfg.seed = seed;
  return cell.algorithm == Algorithm::bc ? run_bc(cfg) : run_opt_ail(cfg);
}

const std::string& run_csv_header() {
  static const std::string header = [] {
    std::string h = "iteration,interactions";
    for (const auto& m : metric_names()) h += "," + m;
    return h;
  }();
  return header;
}

std::string run_csv(const RunRecord& record) {
  std::string out = run_csv_header() + "\n";
  for (const auto& row : record.log) {
    out += std::to_string(row.iteration) + "," + std::to_string(row.interactions);
    for (double v : metric_values(row)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string aggregate_csv(const std::vector<std::pair<std::string, Aggregate>>& cells) {
  std::string out = "cell,iteration,interactions";
  for (const auto& m : metric_names()) out += "," + m + "_mean," + m + "_std";
  out += "\n";
  for (const auto& [name, agg] : cells) {
    for (const auto& row : agg.rows) {
      out += name + "," + std::to_string(row.iteration) + "," + std::to_string(row.interactions);
      for (std::size_t j = 0; j < row.mean.size(); ++j) {
        out += "," + format_double(row.mean[j]) + "," + format_double(row.std[j]);
      }
      out += "\n";
    }
  }
  return out;
}

int effective_parallelism(const ExperimentManifest& manifest) {
  if (const char* env = std::getenv("OPT_AIL_LAB_THREADS"); env && *env) {
    int n = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec != std::errc() || ptr != end || n < 1) {
      throw ConfigError(std::string("OPT_AIL_LAB_THREADS: expected a positive integer, got '") +
                        env + "'");
    }
    return n;
  }
  return std::max(1, manifest.parallel);
}

ExecutionResult execute(const ExperimentManifest& manifest) {
  validate_manifest(manifest);
  struct Job {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < manifest.cells.size(); ++c) {
    for (auto seed : manifest.seeds) jobs.push_back({c, seed});
  }
  std::vector<std::optional<RunRecord>> records(jobs.size());
  std::vector<std::string> errors(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        records[i] = run_cell(manifest.cells[jobs[i].cell], jobs[i].seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const auto threads = std::min<std::size_t>(
      static_cast<std::size_t>(effective_parallelism(manifest)), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  namespace fs = std::filesystem;
  const fs::path root(manifest.output_dir);
  fs::create_directories(root / "runs");
  ExecutionResult result;

  std::vector<std::pair<std::string, Aggregate>> aggregates;
  json cells_summary = json::array();
  for (std::size_t c = 0; c < manifest.cells.size(); ++c) {
    const auto& cell = manifest.cells[c];
    std::map<std::uint64_t, RunRecord> ok;
    json runs = json::array();
    json failed = json::object();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].cell != c) continue;
      const auto key = run_key(cell.name, jobs[i].seed);
      if (!records[i]) {
        result.failures[key] = errors[i];
        failed[std::to_string(jobs[i].seed)] = errors[i];
        continue;
      }
      const auto& rec = *records[i];
      write_file(root / "runs" / (key + ".csv"), run_csv(rec), result.written);
      runs.push_back(json{{"seed", jobs[i].seed},
                          {"final_gap", rec.imitation_gap},
                          {"mixture_value", rec.mixture_value},
                          {"v_expert_true", rec.v_expert_true},
                          {"reward_error", rec.reward_error},
                          {"policy_error", rec.policy_error},
                          {"eps_r_opt", rec.eps_r_opt},
                          {"lambda", rec.lambda}});
      ok.emplace(jobs[i].seed, rec);
    }
    json entry{{"name", cell.name},
               {"algorithm", name_of(cell.algorithm, kAlgorithms)},
               {"status", failed.empty() ? "ok" : "failed"},
               {"runs", runs},
               {"failures", failed}};
    if (!ok.empty()) {
      double mean = 0.0;
      for (const auto& [seed, rec] : ok) mean += rec.imitation_gap;
      mean /= static_cast<double>(ok.size());
      double var = 0.0;
      for (const auto& [seed, rec] : ok) var += (rec.imitation_gap - mean) * (rec.imitation_gap - mean);
      const double sd = ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
      entry["final_gap_mean"] = mean;
      entry["final_gap_std"] = sd;
      try {
        aggregates.emplace_back(cell.name, aggregate(ok));
      } catch (const std::exception& e) {
        result.failures[cell.name] = e.what();
        entry["status"] = "failed";
      }
    }
    cells_summary.push_back(std::move(entry));
  }

  const auto agg_path = root / "aggregate.csv";
  write_file(agg_path, aggregate_csv(aggregates), result.written);
  if (!aggregates.empty()) {
    for (auto& p : render_curves(agg_path.string(), (root / "plots").string())) {
      result.written.push_back(std::move(p));
    }
  }
  result.exit_code = result.failures.empty() ? 0 : 1;
  const json summary{{"name", manifest.name},
                     {"rng_algorithm", kRngAlgorithm},
                     {"status", result.exit_code == 0 ? "ok" : "failed"},
                     {"cells", cells_summary}};
  write_file(root / "summary.json", summary.dump(2) + "\n", result.written);
  write_file(root / "manifest.json", manifest_to_json(manifest).dump(2) + "\n", result.written);
  return result;
}

}  // namespace optail
