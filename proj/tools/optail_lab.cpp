// optail_lab: run imitation-learning experiments from JSON manifests.
//
//   optail_lab run <config> [--seed-list 0,1,2] [--parallel N] [--out DIR]
//   optail_lab bc <config>  [same flags]       every cell runs the BC baseline
//   optail_lab export-env <spec.json> <mdp.json>
//   optail_lab plot <aggregate.csv> <outdir>
//   optail_lab verify
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "optail/bench.hpp"
#include "optail/json_io.hpp"
#include "optail/plot.hpp"
#include "optail/simulator.hpp"
#include "optail/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw optail::ConfigError("--seed-list: '" + item + "' is not a non-negative integer");
    }
    seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw optail::ConfigError("--seed-list: no seeds given");
  return seeds;
}

struct ExperimentFlags {
  std::string config;
  std::string seed_list;
  int parallel = 0;
  std::string out;
};

int run_experiment(const ExperimentFlags& flags, bool force_bc) {
  optail::ExperimentManifest manifest;
  try {
    manifest = optail::parse_config(flags.config);
    if (!flags.seed_list.empty()) manifest.seeds = parse_seed_list(flags.seed_list);
    if (flags.parallel > 0) manifest.parallel = flags.parallel;
    if (!flags.out.empty()) manifest.output_dir = flags.out;
    if (force_bc) {
      for (auto& cell : manifest.cells) cell.algorithm = optail::Algorithm::bc;
    }
    optail::validate_manifest(manifest);
    optail::effective_parallelism(manifest);
  } catch (const optail::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto result = optail::execute(manifest);
  for (const auto& [key, message] : result.failures) {
    std::cerr << "run failed: " << key << ": " << message << '\n';
  }
  std::cout << "wrote " << result.written.size() << " files to " << manifest.output_dir << '\n';
  return result.exit_code == 0 ? kOk : kRunFailure;
}

int export_env(const std::string& spec_path, const std::string& out_path) {
  optail::EnvSpec spec;
  try {
    std::ifstream in(spec_path);
    if (!in) throw optail::ConfigError("cannot open " + spec_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw optail::ConfigError(spec_path + ": invalid JSON: " + e.what());
    }
    spec = optail::env_spec_from_json(j, "");
    optail::validate_env_spec(spec);
  } catch (const optail::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_path << '\n';
    return kRunFailure;
  }
  out << optail::to_json(optail::instantiate(spec)).dump() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular imitation-learning lab: optimistic adversarial imitation vs. behavioral cloning"};
  app.require_subcommand(1);

  ExperimentFlags run_flags;
  auto* run = app.add_subcommand("run", "Run every cell of a manifest over its seeds");
  ExperimentFlags bc_flags;
  auto* bc = app.add_subcommand("bc", "Run the behavioral-cloning baseline for every cell");
  for (auto [cmd, flags] : {std::pair{run, &run_flags}, std::pair{bc, &bc_flags}}) {
    cmd->add_option("config", flags->config, "Manifest JSON file")->required();
    cmd->add_option("--seed-list", flags->seed_list, "Comma-separated seeds replacing the manifest's");
    cmd->add_option("--parallel", flags->parallel, "Concurrent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags->out, "Output directory");
  }

  std::string spec_path, mdp_path;
  auto* exp = app.add_subcommand("export-env", "Instantiate an environment spec and write the MDP JSON");
  exp->add_option("spec", spec_path, "Environment spec JSON")->required();
  exp->add_option("path", mdp_path, "Output MDP JSON")->required();

  std::string csv_path, plot_dir;
  auto* plot = app.add_subcommand("plot", "Render SVG learning curves from an aggregate CSV");
  plot->add_option("aggregate", csv_path, "aggregate.csv from a run")->required();
  plot->add_option("outdir", plot_dir, "Directory for the SVG files")->required();

  auto* verify = app.add_subcommand("verify", "Run the oracle and property self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_experiment(run_flags, false);
    if (*bc) return run_experiment(bc_flags, true);
    if (*exp) return export_env(spec_path, mdp_path);
    if (*plot) {
      for (const auto& p : optail::render_curves(csv_path, plot_dir)) std::cout << p << '\n';
      return kOk;
    }
    if (*verify) {
      const auto results = optail::run_self_checks(std::cout);
      for (const auto& r : results) {
        if (!r.passed) return kRunFailure;
      }
      return kOk;
    }
  } catch (const optail::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}
