#include "freqalloc/dynamics.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "freqalloc/error.hpp"

namespace freqalloc {

namespace {

constexpr double kFitFloor = 0.05;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

// Independent Bernoulli(p) flip per cluster, drawn as geometric gaps between
// flips so quiet slots cost one draw instead of n.
template <class Fn>
std::size_t for_each_flip(std::size_t n, double p, Rng& rng, Fn&& flip) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) {
    for (std::size_t i = 0; i < n; ++i) flip(i);
    return n;
  }
  std::geometric_distribution<std::size_t> gap(p);
  std::size_t flips = 0;
  for (std::size_t i = gap(rng); i < n; i += 1 + gap(rng)) {
    flip(i);
    ++flips;
  }
  return flips;
}

}  // namespace

void validate(const DynamicsConfig& cfg) {
  require(std::isfinite(cfg.delta_t) && cfg.delta_t > 0.0, "delta_t must be positive");
  require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "alpha must lie in [0, 1]");
  require(std::isfinite(cfg.horizon) && cfg.horizon > 0.0, "horizon must be positive");
  require(cfg.replicas >= 1, "replicas must be >= 1");
  require(cfg.warmup >= 0.0 && cfg.warmup < cfg.horizon, "warmup must lie in [0, horizon)");
}

double default_warmup(double tau, double rho) {
  require(tau > 0.0 && rho > 0.0, "tau and rho must be positive");
  return 10.0 * tau / rho;
}

ActivityState markov_toggle_all(ActivityState act, Rng& rng) {
  for_each_flip(act.size(), 1.0 - act.alpha(), rng, [&](std::size_t i) { act.set(i, !act.active(i)); });
  return act;
}

std::size_t markov_step(SimState& state, double alpha, Rng& rng) {
  return for_each_flip(state.topology().size(), 1.0 - alpha, rng,
                       [&](std::size_t i) { state.set_active(i, !state.activity().active(i)); });
}

double lambda_from_alpha(double alpha, std::size_t n, double tau) {
  require(tau > 0.0, "tau must be positive");
  const double nn = static_cast<double>(n);
  return nn * nn * (1.0 - alpha) / (2.0 * tau);
}

std::optional<std::string> near_equilibrium_warning(double alpha, std::size_t n) {
  const double expected = (1.0 - alpha) * static_cast<double>(n);
  if (expected > 0.1 * static_cast<double>(n)) {
    return "expected toggles per slot (" + std::to_string(expected) +
           ") exceed 10% of the clusters; the near-equilibrium variance model is strained";
  }
  return std::nullopt;
}

SimTrace simulate_time_varying(std::shared_ptr<const Topology> top, const DynamicsConfig& cfg, int r,
                               std::uint64_t seed) {
  validate(cfg);
  if (!top) throw ValidationError("simulation needs a topology");
  const std::size_t n = top->size();

  Rng init_rng = make_rng(seed, 2);
  Assignment initial = make_initial_assignment(n, r, cfg.initial, init_rng);
  SimState state(std::move(top), std::move(initial), ActivityState(n, cfg.alpha), seed);
  Rng activity_rng = make_rng(seed, 1);
  Scheduler scheduler({SchedulerKind::PoissonClock, cfg.delta_t});
  std::exponential_distribution<double> idle_gap(1.0 / cfg.delta_t);

  SimTrace trace;
  trace.clusters = n;
  trace.samples.push_back({0, 0.0, -1, 0, 0, state.aggregate(), state.activity().active_count()});

  for (;;) {
    TraceSample s;
    double dt = 0.0;
    std::optional<std::size_t> who;
    if (state.activity().active_count() > 0) {
      const auto next = scheduler.next(state.activity(), state.rng());
      dt = next.dt;
      who = next.cluster;
    } else {
      dt = idle_gap(state.rng());
    }
    if (state.time() + dt > cfg.horizon) break;
    state.advance_time(dt);

    if (who) {
      const UpdateRecord rec = apply_update(state, *who);
      s.cluster = static_cast<long>(rec.cluster);
      s.old_band = rec.old_band;
      s.new_band = rec.new_band;
    } else {
      state.bump_epoch();
    }
    markov_step(state, cfg.alpha, activity_rng);

    s.event = state.epoch();
    s.time = state.time();
    s.aggregate = state.aggregate();
    s.active_count = state.activity().active_count();
    trace.samples.push_back(s);
  }
  return trace;
}

std::vector<SimTrace> simulate_ensemble(std::shared_ptr<const Topology> top, const DynamicsConfig& cfg,
                                        int r, std::uint64_t base_seed) {
  std::vector<SimTrace> out;
  out.reserve(cfg.replicas);
  for (std::size_t k = 0; k < cfg.replicas; ++k) {
    out.push_back(simulate_time_varying(top, cfg, r, base_seed + k));
  }
  return out;
}

SimTrace trace_from_updates(std::size_t clusters, double initial_aggregate, std::size_t active,
                            std::span<const UpdateRecord> updates) {
  SimTrace trace;
  trace.clusters = clusters;
  trace.samples.reserve(updates.size() + 1);
  trace.samples.push_back({0, 0.0, -1, 0, 0, initial_aggregate, active});
  for (const auto& u : updates) {
    trace.samples.push_back({u.epoch, u.time, static_cast<long>(u.cluster), u.old_band, u.new_band,
                             u.aggregate_after, active});
  }
  return trace;
}

TimeSeries ensemble_mean(std::span<const SimTrace> traces, double step, double horizon,
                         double normalizer) {
  require(step > 0.0 && horizon >= 0.0, "grid step must be positive");
  require(!traces.empty(), "ensemble is empty");
  TimeSeries out;
  const auto points = static_cast<std::size_t>(std::floor(horizon / step + 1e-9)) + 1;
  out.time.resize(points);
  out.value.assign(points, 0.0);
  for (std::size_t g = 0; g < points; ++g) out.time[g] = static_cast<double>(g) * step;

  for (const auto& trace : traces) {
    require(!trace.samples.empty(), "trace has no samples");
    std::size_t cursor = 0;
    for (std::size_t g = 0; g < points; ++g) {
      while (cursor + 1 < trace.samples.size() && trace.samples[cursor + 1].time <= out.time[g]) {
        ++cursor;
      }
      out.value[g] += trace.samples[cursor].aggregate;
    }
  }
  const double scale = 1.0 / (static_cast<double>(traces.size()) * normalizer);
  for (auto& v : out.value) v *= scale;
  return out;
}

DecayFit fit_exponential_decay(const TimeSeries& mean, double i_a, double i_w, double tau) {
  if (!(i_w > i_a)) throw FitError("decay fit needs i_w > i_a");
  if (!(tau > 0.0)) throw FitError("tau must be positive");
  if (mean.time.size() != mean.value.size()) throw FitError("time and value lengths differ");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t m = 0;
  for (std::size_t k = 0; k < mean.time.size(); ++k) {
    const double bracket = (mean.value[k] - i_a) / (i_w - i_a);
    if (!(bracket > kFitFloor)) break;
    const double x = mean.time[k];
    const double y = std::log(bracket);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw FitError("trace is already within 5% of its converged value; nothing to fit");
  const double mm = static_cast<double>(m);
  const double denom = mm * sxx - sx * sx;
  if (!(denom > 0.0)) throw FitError("fit window has no time spread");

  DecayFit fit;
  fit.slope = (mm * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / mm;
  fit.rho = -fit.slope * tau;
  fit.points = m;
  return fit;
}

DynamicsPrediction predicted_variance(double i_a, double lambda, double tau, std::size_t n, double rho) {
  require(tau > 0.0 && rho > 0.0 && n > 0, "tau, rho and n must be positive");
  require(lambda >= 0.0, "lambda must be non-negative");
  DynamicsPrediction p;
  p.rho = rho;
  p.tau = tau;
  p.lambda = lambda;
  const double nn = static_cast<double>(n);
  const double drive = 16.0 * lambda * tau;
  p.margin = drive / (nn * nn * rho);
  p.divergent = p.margin >= 1.0;
  p.sigma_ss_sq = p.divergent ? std::numeric_limits<double>::infinity()
                              : i_a * i_a * drive / (nn * nn * rho - drive);
  return p;
}

double stability_margin(double alpha, double rho) {
  require(rho > 0.0, "rho must be positive");
  return 8.0 * (1.0 - alpha) / rho;
}

VarianceEstimate empirical_steady_state_variance(std::span<const SimTrace> traces, double warmup,
                                                 double normalizer) {
  if (traces.size() < 2) throw StatisticsError("variance needs at least two replicas");
  VarianceEstimate est;
  est.replicas = traces.size();

  std::vector<double> means;
  std::vector<std::size_t> counts;
  double within_ss = 0.0;
  for (const auto& trace : traces) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : trace.samples) {
      if (s.time < warmup) continue;
      sum += s.aggregate / normalizer;
      ++count;
    }
    if (count == 0) throw StatisticsError("a replica has no samples after the warmup");
    const double mean = sum / static_cast<double>(count);
    for (const auto& s : trace.samples) {
      if (s.time < warmup) continue;
      const double dev = s.aggregate / normalizer - mean;
      within_ss += dev * dev;
    }
    means.push_back(mean);
    counts.push_back(count);
    est.samples += count;
  }

  const double total = static_cast<double>(est.samples);
  double grand = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) grand += means[k] * static_cast<double>(counts[k]);
  grand /= total;
  double between_ss = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double dev = means[k] - grand;
    between_ss += static_cast<double>(counts[k]) * dev * dev;
  }
  est.mean = grand;
  est.within = within_ss / total;
  est.between = between_ss / total;
  est.variance = est.within + est.between;
  return est;
}

std::string variance_estimator_description() {
  return "population variance of all post-warmup event samples of the normalized aggregate, pooled "
         "over replicas: per-replica means first, then within-replica plus between-replica spread";
}

}  // namespace freqalloc
