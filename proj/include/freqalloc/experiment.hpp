#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freqalloc/allocation.hpp"
#include "freqalloc/metrics.hpp"
#include "freqalloc/topology.hpp"
#include "json.hpp"

namespace freqalloc {

using Json = nlohmann::json;

enum class ExperimentKind { Static, SizeSweep, Relaxation, Variance };

struct TopologySpec {
  std::string kind = "ula";  ///< ula | random_linear | rectangular | hexagonal | file
  std::size_t n = 100;
  double spacing = 1.0;
  double min_sep = 0.5;
  std::size_t rows = 10;
  std::size_t cols = 10;
  std::string path;
  std::uint64_t seed = 0;  ///< random_linear placement; defaults to base_seed
};

/// Output file names, resolved against the output directory. Empty disables
/// that file.
struct OutputSpec {
  std::string trace_csv;
  std::string summary_json;
  std::string config_echo;
  std::string series_csv;
  /// Replicas written to the trace CSV (all when unset).
  std::optional<std::size_t> trace_replicas;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::Static;
  TopologySpec topology;
  /// size_sweep only: cluster counts for linear layouts, side lengths for lattices.
  std::vector<std::size_t> sizes;
  int r = 2;
  double eta = 2.0;
  double p0 = 1.0;
  InitialAssignment initial = InitialAssignment::AllFirstBand;
  SchedulerConfig scheduler{SchedulerKind::RandomPermutationRounds, 1.0};
  double alpha = 1.0;
  /// variance only: values of 1 - alpha to sweep.
  std::vector<double> switching_rates;
  double horizon = 10.0;
  std::optional<double> warmup;  ///< default 10 tau / rho
  std::size_t replicas = 1;
  std::uint64_t base_seed = 0;
  double grid_step = 0.01;
  LinkParams link;
  double rho = 3.0;
  OutputSpec outputs;
};

std::string to_string(ExperimentKind kind);

/// Parses and fully validates a config document. Errors name the offending
/// field as a JSON pointer, e.g. "/scheduler/delta_t".
ExperimentConfig parse_config(const Json& doc);

/// Reads a config file. Syntax errors carry line and column.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved config with every default filled in.
Json config_to_json(const ExperimentConfig& cfg);

struct ValidationReport {
  Json derived;  ///< tau, lambda, stability margin, ...
  std::vector<std::string> warnings;
};

ValidationReport validate_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// Figure-reproduction config; throws ValidationError for unknown names.
Json preset(const std::string& name);

struct RunResult {
  int exit_code = 0;  ///< 0 ok, 2 non-convergence or bound violation
  std::string message;
  Json summary;
  std::vector<std::filesystem::path> files;
};

/// Runs the experiment and writes its outputs under `out_dir`. Identical
/// configs give byte-identical files. I/O failures throw
/// std::ios_base::failure; validation problems throw ValidationError.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// "%.17g"; non-finite values print as "nan", "inf" or "-inf".
std::string format_double(double v);

/// Deterministic JSON text: sorted keys, two-space indent, floats with 17
/// significant digits, non-finite numbers as null.
std::string dump_json(const Json& doc);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace freqalloc
