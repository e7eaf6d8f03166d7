#pragma once

#include <cstddef>
#include <vector>

#include "freqalloc/interference.hpp"
#include "freqalloc/topology.hpp"

namespace freqalloc {

/// Intra-cluster link budget used for capacity: C = log2(1 + S / (N0 + I)).
struct LinkParams {
  double signal_power = 1.0;
  double noise_power = 0.1;

  /// S = P0 (link at 1 m) and N0 = 0.1 P0.
  static LinkParams defaults_for(double p0) { return {p0, 0.1 * p0}; }
};

struct CapacityFragment {
  /// bits/s/Hz per cluster; inactive clusters hold 0 and are not counted.
  std::vector<double> per_cluster;
  std::size_t active = 0;
  /// Sum over active clusters divided by the active count.
  double normalized_aggregate = 0.0;
};

struct CapacityReport {
  std::vector<double> per_cluster;
  double normalized_aggregate = 0.0;
  double reference_normalized = 0.0;
  double achieved_fraction = 0.0;
  /// False when the reference capacity is zero and the fraction is undefined.
  bool fraction_defined = true;
};

double link_capacity(double interference, const LinkParams& link);

CapacityFragment shannon_capacity(const Topology& top, const Assignment& asg, const ActivityState& act,
                                  const LinkParams& link);

/// Normalised capacity read off an up-to-date interference cache in O(N).
double normalized_capacity(const InterferenceCache& cache, const LinkParams& link);

CapacityReport capacity_comparison(const Topology& top, const ActivityState& act, const Assignment& algo,
                                   const Assignment& reference, const LinkParams& link);

/// 10 log10(i_a / i_ref); both must be positive.
double db_gap(double i_a, double i_ref);

}  // namespace freqalloc
