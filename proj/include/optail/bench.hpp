#pragma once

// Experiment manifests, orchestration across (cell, seed) pairs, and result
// files. A manifest is a JSON document:
//
//   {
//     "name": "lock",                  required
//     "seeds": [0, 1, 2],              required, nonempty, distinct
//     "output_dir": "results",         default "results"
//     "parallel": 1,                   default 1
//     "cells": [ { "name": "optail", "algorithm": "opt_ail", ... } ]
//   }
//
// Every cell carries a full run configuration; see README.md for the keys and
// defaults. Unknown keys are rejected with their path.
//
// Output layout under output_dir:
//   runs/<cell>__seed<seed>.csv   one row per logged iteration
//   aggregate.csv                 per cell and iteration, mean and std over seeds
//   summary.json                  final gaps per cell and seed, failures
//   plots/<metric>.svg            learning curves
//   manifest.json                 canonical form of the manifest that ran

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "optail/analysis.hpp"
#include "optail/opt_ail.hpp"

namespace optail {

enum class Algorithm { opt_ail, bc };

struct ExperimentCell {
  std::string name;
  Algorithm algorithm = Algorithm::opt_ail;
  RunConfig config;  ///< config.seed is replaced by each manifest seed

  bool operator==(const ExperimentCell&) const = default;
};

struct ExperimentManifest {
  std::string name;
  std::vector<ExperimentCell> cells;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "results";
  int parallel = 1;

  bool operator==(const ExperimentManifest&) const = default;
};

/// Schema violations; the message names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentManifest manifest_from_json(const nlohmann::json& j);
/// Reads and parses a manifest file. Throws ConfigError.
ExperimentManifest parse_config(const std::string& path);
/// Canonical form: every field written, defaults included.
nlohmann::json manifest_to_json(const ExperimentManifest& manifest);

/// EnvSpec in the same schema as a cell's "env" object.
EnvSpec env_spec_from_json(const nlohmann::json& j, const std::string& path = "env");
nlohmann::json env_spec_to_json(const EnvSpec& spec);

/// Throws ConfigError on duplicate cell names, empty seed lists, and the like.
void validate_manifest(const ExperimentManifest& manifest);

/// The behavioral-cloning baseline on the demos run_opt_ail(cfg) would draw,
/// logged on the same iteration grid. Its value is constant across rows;
/// metrics that do not apply are NaN.
RunRecord run_bc(const RunConfig& cfg);

/// Runs one (cell, seed) pair.
RunRecord run_cell(const ExperimentCell& cell, std::uint64_t seed);

/// CSV text of one run; values in shortest round-trip form, LF line endings.
std::string run_csv(const RunRecord& record);
std::string aggregate_csv(const std::vector<std::pair<std::string, Aggregate>>& cells);

const std::string& run_csv_header();

struct ExecutionResult {
  int exit_code = 0;  ///< 0 when every run succeeded, 1 otherwise
  std::map<std::string, std::string> failures;  ///< "<cell>__seed<seed>" -> message
  std::vector<std::string> written;             ///< files written
};

/// Thread count: OPT_AIL_LAB_THREADS if set, else manifest.parallel.
int effective_parallelism(const ExperimentManifest& manifest);

/// Runs every (cell, seed) pair and writes all outputs. Files are identical
/// for any thread count.
ExecutionResult execute(const ExperimentManifest& manifest);

}  // namespace optail
