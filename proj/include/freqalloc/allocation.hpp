#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "freqalloc/interference.hpp"
#include "freqalloc/rng.hpp"
#include "freqalloc/topology.hpp"

namespace freqalloc {

/// Relative margin by which a band must beat the current one before a
/// cluster switches. Ties keep the current band.
inline constexpr double kSwitchTolerance = 1e-9;

/// Mutable state of one simulation replica: assignment, activity, update
/// counter, clock and the scheduler's generator. Single-threaded.
class SimState {
 public:
  SimState(std::shared_ptr<const Topology> topology, Assignment assignment, ActivityState activity,
           std::uint64_t seed);

  SimState(const SimState& other);
  SimState& operator=(const SimState& other);
  SimState(SimState&&) noexcept = default;
  SimState& operator=(SimState&&) noexcept = default;

  const Topology& topology() const { return *topology_; }
  const std::shared_ptr<const Topology>& topology_ptr() const { return topology_; }
  const Assignment& assignment() const { return assignment_; }
  const ActivityState& activity() const { return activity_; }
  const InterferenceCache& cache() const { return *cache_; }

  std::uint64_t epoch() const { return epoch_; }
  double time() const { return time_; }
  double aggregate() const { return cache_->aggregate(); }
  Rng& rng() { return rng_; }

  void set_band(std::size_t i, int band);
  void set_active(std::size_t i, bool on);
  void advance_time(double dt) { time_ += dt; }
  void bump_epoch() { ++epoch_; }

 private:
  std::shared_ptr<const Topology> topology_;
  Assignment assignment_;
  ActivityState activity_;
  std::unique_ptr<InterferenceCache> cache_;
  std::uint64_t epoch_ = 0;
  double time_ = 0.0;
  Rng rng_;
};

struct UpdateRecord {
  std::uint64_t epoch = 0;  // epoch after the update
  double time = 0.0;
  std::size_t cluster = 0;
  int old_band = 0;
  int new_band = 0;
  double aggregate_before = 0.0;
  double aggregate_after = 0.0;

  bool switched() const { return old_band != new_band; }
};

/// Least-interference band for cluster i. The current band is kept whenever it
/// is within kSwitchTolerance of the minimum; otherwise the lowest band index
/// attaining the minimum wins.
int best_band(const SimState& state, std::size_t i);

/// One asynchronous best-band update of active cluster i.
UpdateRecord apply_update(SimState& state, std::size_t i);

enum class SchedulerKind { RandomPermutationRounds, PoissonClock };

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::RandomPermutationRounds;
  /// Mean inter-event time (Poisson) or fixed step (permutation rounds).
  double delta_t = 1.0;
};

struct ScheduledUpdate {
  std::size_t cluster = 0;
  double dt = 0.0;
  /// Permutation rounds only: this pick closes the current round.
  bool ends_round = false;
};

/// Picks which cluster updates next and how much time passes.
class Scheduler {
 public:
  explicit Scheduler(SchedulerConfig config);

  const SchedulerConfig& config() const { return config_; }
  ScheduledUpdate next(const ActivityState& activity, Rng& rng);

 private:
  SchedulerConfig config_;
  std::vector<std::size_t> round_;
  std::size_t cursor_ = 0;
};

/// Convenience wrapper around Scheduler for a single draw.
ScheduledUpdate schedule_next(Scheduler& scheduler, SimState& state);

struct ConvergenceResult {
  SimState state;
  std::vector<UpdateRecord> trace;
  std::size_t switches = 0;
};

using UpdateObserver = std::function<void(const SimState&, const UpdateRecord&)>;

/// Default update budget 10 * N^(eta+2), saturating.
std::uint64_t default_update_guard(std::size_t n, double eta);

/// Runs the asynchronous update rule under static activity until no active
/// cluster can improve. Permutation rounds stop after a full round without a
/// switch; the Poisson clock stops after 2N consecutive quiet updates followed
/// by a successful check that every active cluster already sits in its best
/// band. Throws ConvergenceError once `max_updates` is exhausted.
ConvergenceResult run_to_convergence(SimState state, const SchedulerConfig& scheduler,
                                     std::optional<std::uint64_t> max_updates = std::nullopt,
                                     const UpdateObserver& observer = {});

/// True when no active cluster would switch.
bool is_local_minimum(const SimState& state);

enum class InitialAssignment { AllFirstBand, UniformRandom };

Assignment make_initial_assignment(std::size_t n, int r, InitialAssignment mode, Rng& rng);

}  // namespace freqalloc
