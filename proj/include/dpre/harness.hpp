#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpre/disorder.hpp"
#include "dpre/engine.hpp"

namespace dpre {

enum class ExperimentKind { tables, simulate, clt, decouple, moments, taylor, supercritical };

std::string kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  std::vector<int64_t> N_values{64};
  std::vector<int> M_values{1};
  std::vector<double> beta_hats{0.5};
  Family family = Family::gaussian;
  uint64_t master_seed = 1;
  int64_t replicates = 100;
  double epsilon0 = 0.5;
  double alpha = 1.0;
  int workers = 0;  // 0 = all available cores
  std::string out_dir = "runs/out";
};

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(const std::string& field_, const std::string& what_)
      : std::runtime_error(what_), field(field_) {}
};

// Flat key=value text, one pair per line, lists comma-separated,
// '#' starts a comment. Unknown keys are rejected by name.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& config);

// Per-cell seeds derive from the master seed and the flat cell index;
// the replicate index enters the keyed generator directly.
uint64_t derive_cell_seed(uint64_t master_seed, uint64_t cell_index);

struct CellParams {
  int64_t N = 0;
  int M = 1;
  double beta_hat = 0.5;
  Family family = Family::gaussian;
  uint64_t cell_seed = 0;
  bool windows_only = false;
};

struct CellResult {
  double beta = 0.0;
  DyadicGrid grid;
  std::vector<PartitionSample> samples;                     // replicate order
  std::vector<std::pair<int64_t, std::string>> failures;    // (replicate, reason)
};

/// Replicate pool: workers pull replicate indices from a shared counter,
// results land in replicate-index order, so the output stream does not
// depend on the worker count. A failing replicate is recorded and
// excluded without touching its neighbours.
CellResult run_cell(const CellParams& params, int64_t replicates, int workers);

struct RunManifest {
  std::string version;
  std::string out_dir;
  std::string config_echo;
  uint64_t table_checksum = 0;  // FNV-1a over the return-probability table bytes
  double wall_seconds = 0.0;
  int64_t total_replicates = 0;
  int64_t excluded_replicates = 0;
  std::vector<std::string> files;
  std::string manifest_path;
};

RunManifest run(const ExperimentConfig& config);
std::vector<RunManifest> sweep(const std::vector<ExperimentConfig>& configs);

}  // namespace dpre
