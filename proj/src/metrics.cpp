#include "freqalloc/metrics.hpp"

#include <cmath>

#include "freqalloc/error.hpp"

namespace freqalloc {

namespace {

void check_link(const LinkParams& link) {
  if (!(link.signal_power > 0.0) || !(link.noise_power > 0.0)) {
    throw ValidationError("signal and noise power must be positive");
  }
}

}  // namespace

double link_capacity(double interference, const LinkParams& link) {
  return std::log2(1.0 + link.signal_power / (link.noise_power + interference));
}

CapacityFragment shannon_capacity(const Topology& top, const Assignment& asg, const ActivityState& act,
                                  const LinkParams& link) {
  check_link(link);
  CapacityFragment out;
  out.per_cluster.assign(top.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (!act.active(i)) continue;
    out.per_cluster[i] = link_capacity(cluster_interference(top, asg, act, i), link);
    total += out.per_cluster[i];
    ++out.active;
  }
  out.normalized_aggregate = out.active > 0 ? total / static_cast<double>(out.active) : 0.0;
  return out;
}

double normalized_capacity(const InterferenceCache& cache, const LinkParams& link) {
  check_link(link);
  double total = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < cache.size(); ++i) {
    if (!cache.active(i)) continue;
    total += link_capacity(cache.cluster_interference(i), link);
    ++active;
  }
  return active > 0 ? total / static_cast<double>(active) : 0.0;
}

CapacityReport capacity_comparison(const Topology& top, const ActivityState& act, const Assignment& algo,
                                   const Assignment& reference, const LinkParams& link) {
  auto mine = shannon_capacity(top, algo, act, link);
  const auto ref = shannon_capacity(top, reference, act, link);
  CapacityReport rep;
  rep.per_cluster = std::move(mine.per_cluster);
  rep.normalized_aggregate = mine.normalized_aggregate;
  rep.reference_normalized = ref.normalized_aggregate;
  rep.fraction_defined = ref.normalized_aggregate > 0.0;
  rep.achieved_fraction = rep.fraction_defined ? rep.normalized_aggregate / rep.reference_normalized : 0.0;
  return rep;
}

double db_gap(double i_a, double i_ref) {
  if (!(i_a > 0.0) || !(i_ref > 0.0)) throw DomainError("dB gap needs positive interference values");
  return 10.0 * std::log10(i_a / i_ref);
}

}  // namespace freqalloc
