#pragma once

// Experiment orchestration: strict JSON configs, presets, run manifests with
// checksummed snapshots, resume, and long-format plot data.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chaoslab/diagnostics.hpp"
#include "chaoslab/error.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/torus.hpp"

namespace chaoslab {

std::string version_string();

struct KernelConfig {
  std::string name = "kuramoto";  // zero | kuramoto | biot_savart_2d | attractive_log_2d
  double length = 0.0;            // 0 selects 2 pi
  double epsilon = 0.0;           // > 0 mollifies
  int cutoff = 32;                // series cutoff of singular kernels
};

struct InitialConfig {
  /// uniform | cosine (1 + a cos(m x)) | product_cosine (prod_i (1 + a cos(m x_i)))
  /// | kuramoto_stationary (Bessel state at `sigma_state`)
  std::string kind = "uniform";
  double amplitude = 0.0;
  int mode = 1;
  double sigma_state = 0.0;  // 0 selects the run's sigma
};

struct ExperimentConfig {
  std::string preset = "custom";
  KernelConfig kernel;
  InitialConfig initial;
  int N = 2;
  std::size_t M = 1000;
  int d = 1;
  double sigma = 0.5;
  double sigma_factor = 0.0;  // > 0: sigma = factor * sigma0(R = ||f0||_2)
  double dt = 0.01;
  double t_max = 1.0;
  std::uint64_t seed = 1;
  std::vector<double> snapshot_times;  // empty: every output_interval
  double output_interval = 0.5;
  int grid_points = 128;
  int bins = 0;  // 0: default per k*d
  int k_max = 2;
  int workers = 1;
  std::vector<int> N_list;     // chaos-rate
  std::vector<int> cutoffs;    // sigma0-audit
  int sobolev_tests = 200;
  int sobolev_n_min = 3;
  int sobolev_n_max = 8;
  double meanfield_t_max = 50.0;  // counterexample stage (a)
  double meanfield_dt = 0.01;
  std::string output_dir = "chaoslab_out";
  std::map<std::string, double> thresholds;

  double threshold(const std::string& key) const;
  double length() const;
};

/// Every preset name, in listing order.
const std::vector<std::string>& preset_names();
/// One-line description per preset.
std::string preset_description(const std::string& preset);

/// Preset defaults (acceptance scale) merged with `overrides`. Unknown keys
/// anywhere throw ConfigError naming the key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig preset_config(const std::string& preset);
/// Canonical JSON (sorted keys, full precision).
std::string config_to_json(const ExperimentConfig& config, int indent = -1);
/// CRC-32 of the canonical JSON, hex.
std::string config_hash(const ExperimentConfig& config);
/// Semantic validation beyond the schema; throws ConfigError.
void validate_config(const ExperimentConfig& config);

struct Verdict {
  std::string id;
  std::string description;
  bool passed;
  double measured;
  double threshold;
  bool hard = true;  // soft verdicts never change the exit status
  std::string note;
};

/// Diagnostic CSV row: t,k,N,metric,value,stderr,bound,violated.
/// N = 0 marks rows not tied to one particle number.
struct SeriesRow {
  double t;
  int k;
  int N;
  std::string metric;
  double value;
  double error;
  double bound;  // NaN when not applicable
  bool violated;
};

struct RunOptions {
  /// Abort (as if killed) after this many persisted snapshots.
  std::optional<int> interrupt_after;
  bool quiet = false;
};

/// Thrown by --interrupt-after; the run directory is left resumable.
class Interrupted : public Error {
 public:
  using Error::Error;
};

struct RunResult {
  std::vector<Verdict> verdicts;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  bool resumed = false;
  bool already_complete = false;
  int exit_code() const;
};

/// Runs a preset into config.output_dir (overridden by CHAOSLAB_OUTPUT_DIR).
RunResult run_preset(const ExperimentConfig& config, const RunOptions& options = {});

/// Continues the run recorded in `<dir>/manifest.json`; a complete run is a no-op.
RunResult resume(const std::string& run_dir, const RunOptions& options = {});

/// Merges series CSVs into one long-format CSV with columns
/// t,k,N,sigma,metric,value,stderr,seed. Missing inputs throw, listing all.
void emit_plotdata(const std::vector<std::string>& series_files, const std::string& out_path);

/// Output directory after applying CHAOSLAB_OUTPUT_DIR.
std::string resolve_output_dir(const ExperimentConfig& config);

/// CRC-32 of a file's bytes, hex.
std::string file_crc32(const std::string& path);

/// Spectral JSON dump: [{"mode": [...], "re": x, "im": y}, ...].
void write_spectral_json(const std::string& path, const DensityField& field);

/// True when the two files agree byte for byte after dropping lines that
/// start with "# generated".
bool same_diagnostics(const std::string& a, const std::string& b);

}  // namespace chaoslab
