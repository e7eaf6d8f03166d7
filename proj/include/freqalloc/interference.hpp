#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "freqalloc/topology.hpp"

namespace freqalloc {

/// Band of every cluster; bands are numbered 1..r.
class Assignment {
 public:
  Assignment(std::vector<int> bands, int r);
  /// n clusters all in `band`.
  static Assignment uniform(std::size_t n, int band, int r);

  std::size_t size() const { return bands_.size(); }
  int r() const { return r_; }
  int operator[](std::size_t i) const { return bands_[i]; }
  std::span<const int> bands() const { return bands_; }
  void set(std::size_t i, int band);

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<int> bands_;
  int r_;
};

/// On/off indicator per cluster plus the persistence probability alpha of the
/// symmetric two-state activity chain.
class ActivityState {
 public:
  /// All clusters active.
  explicit ActivityState(std::size_t n, double alpha = 1.0);
  ActivityState(std::vector<bool> active, double alpha);

  std::size_t size() const { return active_.size(); }
  double alpha() const { return alpha_; }
  bool active(std::size_t i) const { return active_[i] != 0; }
  void set(std::size_t i, bool on);
  std::size_t active_count() const;

  friend bool operator==(const ActivityState&, const ActivityState&) = default;

 private:
  std::vector<std::uint8_t> active_;
  double alpha_;
};

// Direct summations. These are the reference the incremental cache is
// checked against, so they stay deliberately plain.

/// Interference cluster i would see in band k from active clusters using k.
double band_interference(const Topology& top, const Assignment& asg, const ActivityState& act,
                         std::size_t i, int k);
/// Interference cluster i sees in its own band.
double cluster_interference(const Topology& top, const Assignment& asg, const ActivityState& act,
                            std::size_t i);
/// Sum of cluster_interference over active receivers.
double aggregate_interference(const Topology& top, const Assignment& asg, const ActivityState& act);
/// Aggregate with every active cluster forced into one band.
double worst_case_interference(const Topology& top, const ActivityState& act);

/// Per-cluster, per-band interference sums kept current under single-cluster
/// band switches and activity toggles in O(N) per change.
///
/// Sums are held in 128-bit fixed point so repeated add/remove cycles cancel
/// exactly; values read back are within one rounding of the exact sum of the
/// quantised gains. The referenced Topology must outlive the cache.
class InterferenceCache {
 public:
  InterferenceCache(const Topology& top, const Assignment& asg, const ActivityState& act);

  std::size_t size() const { return bands_.size(); }
  int r() const { return r_; }
  int band(std::size_t i) const { return bands_[i]; }
  bool active(std::size_t i) const { return active_[i] != 0; }

  double band_interference(std::size_t i, int k) const;
  double cluster_interference(std::size_t i) const { return band_interference(i, bands_[i]); }
  double aggregate() const;

  /// Move cluster i to band k.
  void move(std::size_t i, int k);
  void set_active(std::size_t i, bool on);

 private:
  using Fixed = __int128;

  Fixed quantize(std::size_t i, std::size_t j) const;
  double to_double(Fixed v) const;
  Fixed& slot(std::size_t i, int k) { return sums_[i * static_cast<std::size_t>(r_) + (k - 1)]; }
  Fixed slot(std::size_t i, int k) const { return sums_[i * static_cast<std::size_t>(r_) + (k - 1)]; }
  void radiate(std::size_t i, int k, bool add);

  const Topology* top_;
  int r_;
  int scale_bits_;
  std::vector<int> bands_;
  std::vector<std::uint8_t> active_;
  std::vector<Fixed> sums_;
  Fixed aggregate_ = 0;
};

}  // namespace freqalloc
