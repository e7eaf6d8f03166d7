#include "freqalloc/interference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "freqalloc/error.hpp"

namespace freqalloc {

namespace {

void check_band(int band, int r) {
  if (band < 1 || band > r) {
    throw ValidationError("band " + std::to_string(band) + " outside 1.." + std::to_string(r));
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
}

void check_consistent(const Topology& top, const Assignment& asg, const ActivityState& act) {
  if (asg.size() != top.size() || act.size() != top.size()) {
    throw ValidationError("assignment/activity length does not match the topology");
  }
}

void check_index(const Topology& top, std::size_t i) {
  if (i >= top.size()) throw ValidationError("cluster index " + std::to_string(i) + " out of range");
}

}  // namespace

Assignment::Assignment(std::vector<int> bands, int r) : bands_(std::move(bands)), r_(r) {
  if (r_ < 1) throw ValidationError("band count r must be >= 1");
  for (int b : bands_) check_band(b, r_);
}

Assignment Assignment::uniform(std::size_t n, int band, int r) {
  return Assignment(std::vector<int>(n, band), r);
}

void Assignment::set(std::size_t i, int band) {
  check_band(band, r_);
  bands_.at(i) = band;
}

ActivityState::ActivityState(std::size_t n, double alpha) : active_(n, 1), alpha_(alpha) {
  check_alpha(alpha);
}

ActivityState::ActivityState(std::vector<bool> active, double alpha)
    : active_(active.begin(), active.end()), alpha_(alpha) {
  check_alpha(alpha);
}

void ActivityState::set(std::size_t i, bool on) { active_.at(i) = on ? 1 : 0; }

std::size_t ActivityState::active_count() const {
  return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), std::uint8_t{1}));
}

double band_interference(const Topology& top, const Assignment& asg, const ActivityState& act,
                         std::size_t i, int k) {
  check_consistent(top, asg, act);
  check_index(top, i);
  check_band(k, asg.r());
  double sum = 0.0;
  for (std::size_t j = 0; j < top.size(); ++j) {
    if (j != i && act.active(j) && asg[j] == k) sum += top.gain(i, j);
  }
  return sum;
}

double cluster_interference(const Topology& top, const Assignment& asg, const ActivityState& act,
                            std::size_t i) {
  check_consistent(top, asg, act);
  check_index(top, i);
  return band_interference(top, asg, act, i, asg[i]);
}

double aggregate_interference(const Topology& top, const Assignment& asg, const ActivityState& act) {
  check_consistent(top, asg, act);
  double total = 0.0;
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (!act.active(i)) continue;
    for (std::size_t j = 0; j < top.size(); ++j) {
      if (j != i && act.active(j) && asg[j] == asg[i]) total += top.gain(i, j);
    }
  }
  return total;
}

double worst_case_interference(const Topology& top, const ActivityState& act) {
  if (act.size() != top.size()) throw ValidationError("activity length does not match the topology");
  double total = 0.0;
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (!act.active(i)) continue;
    for (std::size_t j = 0; j < top.size(); ++j) {
      if (j != i && act.active(j)) total += top.gain(i, j);
    }
  }
  return total;
}

InterferenceCache::InterferenceCache(const Topology& top, const Assignment& asg,
                                     const ActivityState& act)
    : top_(&top), r_(asg.r()), bands_(asg.bands().begin(), asg.bands().end()) {
  check_consistent(top, asg, act);
  const std::size_t n = top.size();
  active_.resize(n);
  for (std::size_t i = 0; i < n; ++i) active_[i] = act.active(i) ? 1 : 0;

  // Pick the scale so that even the all-co-band total stays below 2^125.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double g : top.gain_row(i)) total += g;
  }
  scale_bits_ = total > 0.0 ? 124 - static_cast<int>(std::ceil(std::log2(total))) : 64;

  sums_.assign(n * static_cast<std::size_t>(r_), 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (active_[j]) radiate(j, bands_[j], true);
  }
  aggregate_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (active_[i]) aggregate_ += slot(i, bands_[i]);
  }
}

InterferenceCache::Fixed InterferenceCache::quantize(std::size_t i, std::size_t j) const {
  return static_cast<Fixed>(std::ldexp(top_->gain(i, j), scale_bits_));
}

double InterferenceCache::to_double(Fixed v) const {
  return std::ldexp(static_cast<double>(v), -scale_bits_);
}

void InterferenceCache::radiate(std::size_t i, int k, bool add) {
  for (std::size_t j = 0; j < size(); ++j) {
    if (j == i) continue;
    const Fixed q = quantize(i, j);
    if (add) {
      slot(j, k) += q;
    } else {
      slot(j, k) -= q;
    }
  }
}

double InterferenceCache::band_interference(std::size_t i, int k) const {
  check_band(k, r_);
  return to_double(slot(i, k));
}

double InterferenceCache::aggregate() const { return to_double(aggregate_); }

void InterferenceCache::move(std::size_t i, int k) {
  check_band(k, r_);
  const int old = bands_.at(i);
  if (old == k) return;
  if (active_[i]) {
    // Reciprocity: i stops receiving from and radiating into band `old`
    // symmetrically, so the aggregate moves by twice the receiver-side change.
    aggregate_ += 2 * (slot(i, k) - slot(i, old));
    radiate(i, old, false);
    radiate(i, k, true);
  }
  bands_[i] = k;
}

void InterferenceCache::set_active(std::size_t i, bool on) {
  if ((active_.at(i) != 0) == on) return;
  const int k = bands_[i];
  if (on) {
    aggregate_ += 2 * slot(i, k);
    radiate(i, k, true);
  } else {
    aggregate_ -= 2 * slot(i, k);
    radiate(i, k, false);
  }
  active_[i] = on ? 1 : 0;
}

}  // namespace freqalloc
