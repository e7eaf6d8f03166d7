#include "freqalloc/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "freqalloc/error.hpp"

namespace freqalloc {

SimState::SimState(std::shared_ptr<const Topology> topology, Assignment assignment,
                   ActivityState activity, std::uint64_t seed)
    : topology_(std::move(topology)),
      assignment_(std::move(assignment)),
      activity_(std::move(activity)),
      rng_(make_rng(seed)) {
  if (!topology_) throw ValidationError("simulation state needs a topology");
  cache_ = std::make_unique<InterferenceCache>(*topology_, assignment_, activity_);
}

SimState::SimState(const SimState& other)
    : topology_(other.topology_),
      assignment_(other.assignment_),
      activity_(other.activity_),
      cache_(std::make_unique<InterferenceCache>(*other.cache_)),
      epoch_(other.epoch_),
      time_(other.time_),
      rng_(other.rng_) {}

SimState& SimState::operator=(const SimState& other) {
  if (this != &other) {
    SimState copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void SimState::set_band(std::size_t i, int band) {
  assignment_.set(i, band);
  cache_->move(i, band);
}

void SimState::set_active(std::size_t i, bool on) {
  activity_.set(i, on);
  cache_->set_active(i, on);
}

int best_band(const SimState& state, std::size_t i) {
  const auto& cache = state.cache();
  const int current = state.assignment()[i];
  double lowest = std::numeric_limits<double>::infinity();
  int lowest_band = current;
  for (int k = 1; k <= cache.r(); ++k) {
    const double v = cache.band_interference(i, k);
    if (v < lowest) {
      lowest = v;
      lowest_band = k;
    }
  }
  const double here = cache.band_interference(i, current);
  if (here - lowest <= kSwitchTolerance * here) return current;
  return lowest_band;
}

UpdateRecord apply_update(SimState& state, std::size_t i) {
  if (i >= state.topology().size()) throw ValidationError("cluster index out of range");
  if (!state.activity().active(i)) {
    throw ValidationError("cluster " + std::to_string(i) + " is inactive and cannot update");
  }
  UpdateRecord rec;
  rec.cluster = i;
  rec.old_band = state.assignment()[i];
  rec.aggregate_before = state.aggregate();
  rec.new_band = best_band(state, i);
  if (rec.new_band != rec.old_band) state.set_band(i, rec.new_band);
  rec.aggregate_after = state.aggregate();
  state.bump_epoch();
  rec.epoch = state.epoch();
  rec.time = state.time();
  return rec;
}

Scheduler::Scheduler(SchedulerConfig config) : config_(config) {
  if (!(std::isfinite(config_.delta_t) && config_.delta_t > 0.0)) {
    throw ValidationError("scheduler delta_t must be positive");
  }
}

ScheduledUpdate Scheduler::next(const ActivityState& activity, Rng& rng) {
  const std::size_t n = activity.size();
  const std::size_t active = activity.active_count();
  if (active == 0) throw SchedulingError("no active cluster to schedule");

  ScheduledUpdate out;
  if (config_.kind == SchedulerKind::PoissonClock) {
    std::exponential_distribution<double> gap(1.0 / config_.delta_t);
    out.dt = gap(rng);
    std::uniform_int_distribution<std::size_t> pick(0, active - 1);
    std::size_t k = pick(rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (!activity.active(i)) continue;
      if (k-- == 0) {
        out.cluster = i;
        break;
      }
    }
    return out;
  }

  // Permutation rounds: clusters that went inactive mid-round are skipped.
  for (;;) {
    if (cursor_ >= round_.size()) {
      round_.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (activity.active(i)) round_.push_back(i);
      }
      std::shuffle(round_.begin(), round_.end(), rng);
      cursor_ = 0;
    }
    const std::size_t i = round_[cursor_++];
    if (!activity.active(i)) continue;
    out.cluster = i;
    out.dt = config_.delta_t;
    out.ends_round = cursor_ >= round_.size();
    return out;
  }
}

ScheduledUpdate schedule_next(Scheduler& scheduler, SimState& state) {
  return scheduler.next(state.activity(), state.rng());
}

std::uint64_t default_update_guard(std::size_t n, double eta) {
  const double guard = 10.0 * std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), eta + 2.0);
  if (guard >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ceil(guard));
}

bool is_local_minimum(const SimState& state) {
  for (std::size_t i = 0; i < state.topology().size(); ++i) {
    if (state.activity().active(i) && best_band(state, i) != state.assignment()[i]) return false;
  }
  return true;
}

ConvergenceResult run_to_convergence(SimState state, const SchedulerConfig& scheduler_config,
                                     std::optional<std::uint64_t> max_updates,
                                     const UpdateObserver& observer) {
  const std::size_t n = state.topology().size();
  const std::uint64_t budget = max_updates.value_or(default_update_guard(n, state.topology().eta()));
  Scheduler scheduler(scheduler_config);

  ConvergenceResult result{std::move(state), {}, 0};
  SimState& s = result.state;
  const std::size_t active = s.activity().active_count();
  if (active == 0) return result;

  const bool poisson = scheduler_config.kind == SchedulerKind::PoissonClock;
  const std::size_t quiet_needed = 2 * active;
  std::size_t quiet = 0;
  bool round_switched = false;

  for (;;) {
    if (result.trace.size() >= budget) {
      throw ConvergenceError("no convergence within " + std::to_string(budget) + " updates");
    }
    const ScheduledUpdate next = scheduler.next(s.activity(), s.rng());
    s.advance_time(next.dt);
    const UpdateRecord rec = apply_update(s, next.cluster);
    result.trace.push_back(rec);
    if (observer) observer(s, rec);

    if (rec.switched()) {
      ++result.switches;
      quiet = 0;
      round_switched = true;
    } else {
      ++quiet;
    }

    if (poisson) {
      if (quiet >= quiet_needed) {
        if (is_local_minimum(s)) break;
        quiet = 0;
      }
    } else if (next.ends_round) {
      if (!round_switched) break;
      round_switched = false;
    }
  }
  return result;
}

Assignment make_initial_assignment(std::size_t n, int r, InitialAssignment mode, Rng& rng) {
  if (mode == InitialAssignment::AllFirstBand) return Assignment::uniform(n, 1, r);
  std::uniform_int_distribution<int> pick(1, r);
  std::vector<int> bands(n);
  for (auto& b : bands) b = pick(rng);
  return Assignment(std::move(bands), r);
}

}  // namespace freqalloc
