#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqalloc/allocation.hpp"
#include "freqalloc/interference.hpp"
#include "freqalloc/rng.hpp"
#include "freqalloc/topology.hpp"

namespace freqalloc {

/// Time-varying run parameters. tau = N * delta_t.
struct DynamicsConfig {
  double delta_t = 0.01;
  double alpha = 1.0;
  double horizon = 10.0;
  std::size_t replicas = 1;
  double warmup = 0.0;
  InitialAssignment initial = InitialAssignment::AllFirstBand;
};

void validate(const DynamicsConfig& cfg);

/// Default steady-state warmup: ten relaxation times, 10 tau / rho.
double default_warmup(double tau, double rho);

/// One step of the symmetric two-state chain for every cluster: each keeps
/// its state with probability alpha and flips otherwise.
ActivityState markov_toggle_all(ActivityState act, Rng& rng);

/// Same step applied in place through the simulation state so its cache
/// stays current. Returns the number of flips.
std::size_t markov_step(SimState& state, double alpha, Rng& rng);

/// On/off Poisson rate N^2 (1 - alpha) / (2 tau).
double lambda_from_alpha(double alpha, std::size_t n, double tau);

/// Warning text when more than a tenth of the clusters are expected to
/// toggle per slot.
std::optional<std::string> near_equilibrium_warning(double alpha, std::size_t n);

struct TraceSample {
  std::uint64_t event = 0;
  double time = 0.0;
  long cluster = -1;  ///< -1 when no cluster was active to update
  int old_band = 0;
  int new_band = 0;
  double aggregate = 0.0;
  std::size_t active_count = 0;
};

/// Event trace of one replica. samples[0] is the initial state at t = 0.
struct SimTrace {
  std::size_t clusters = 0;
  std::vector<TraceSample> samples;
};

/// Event-driven run: updates arrive as a Poisson process of rate 1/delta_t,
/// a uniformly chosen active cluster applies the best-band rule, then every
/// cluster advances one activity step. Runs until `horizon`.
SimTrace simulate_time_varying(std::shared_ptr<const Topology> top, const DynamicsConfig& cfg, int r,
                               std::uint64_t seed);

/// Replica k uses seed base_seed + k.
std::vector<SimTrace> simulate_ensemble(std::shared_ptr<const Topology> top, const DynamicsConfig& cfg,
                                        int r, std::uint64_t base_seed);

/// Converts static-run update records into a trace (initial sample first).
SimTrace trace_from_updates(std::size_t clusters, double initial_aggregate, std::size_t active,
                            std::span<const UpdateRecord> updates);

struct TimeSeries {
  std::vector<double> time;
  std::vector<double> value;
};

/// Sample-and-hold ensemble mean of aggregate / normalizer on the grid
/// 0, step, 2 step, ... <= horizon.
TimeSeries ensemble_mean(std::span<const SimTrace> traces, double step, double horizon,
                         double normalizer = 1.0);

struct DecayFit {
  double rho = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through log((I(t) - i_a) / (i_w - i_a)) over the
/// leading stretch where that bracket exceeds 0.05; rho = -slope * tau.
DecayFit fit_exponential_decay(const TimeSeries& mean, double i_a, double i_w, double tau);

struct DynamicsPrediction {
  double rho = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  double sigma_ss_sq = 0.0;  ///< +inf when divergent
  double margin = 0.0;       ///< 16 lambda tau / (N^2 rho)
  bool divergent = false;
};

/// Steady-state variance i_a^2 * 16 lambda tau / (N^2 rho - 16 lambda tau),
/// flagged divergent when the margin reaches 1.
DynamicsPrediction predicted_variance(double i_a, double lambda, double tau, std::size_t n, double rho);

/// 8 (1 - alpha) / rho.
double stability_margin(double alpha, double rho);

struct VarianceEstimate {
  double variance = 0.0;
  double mean = 0.0;
  double within = 0.0;   ///< pooled within-replica part
  double between = 0.0;  ///< spread of the per-replica means
  std::size_t samples = 0;
  std::size_t replicas = 0;
};

/// Population variance of every post-warmup sample of aggregate / normalizer
/// across the ensemble. Per-replica means are formed first and the total is
/// pooled as within-replica plus between-replica spread.
VarianceEstimate empirical_steady_state_variance(std::span<const SimTrace> traces, double warmup,
                                                 double normalizer = 1.0);

std::string variance_estimator_description();

}  // namespace freqalloc
