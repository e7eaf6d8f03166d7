#pragma once

#include <cstddef>
#include <string>

#include "freqalloc/interference.hpp"
#include "freqalloc/topology.hpp"

namespace freqalloc {

/// Largest r^(active clusters) the exhaustive search accepts.
inline constexpr double kBruteForceGuard = 1e7;

struct OptimalAssignment {
  Assignment assignment;
  double aggregate = 0.0;
};

/// Globally minimal aggregate interference over every band assignment of the
/// active clusters (inactive ones are reported in band 1). Among minimisers
/// the lexicographically smallest is returned, which is also the
/// first-occurrence canonical labelling. Throws CapacityError past the guard.
OptimalAssignment brute_force_optimal(const Topology& top, const ActivityState& act, int r);

/// bands[i] = (i mod r) + 1.
Assignment alternating_assignment(std::size_t n, int r);

/// Relabels bands in order of first appearance (first cluster gets band 1).
Assignment canonicalize(const Assignment& asg);

/// Centralised frequency-reuse reference: alternating along the line for 1-D
/// layouts, the 2x2 (1:4) pattern on rectangular lattices and the 1:4
/// sublattice colouring on hexagonal lattices. Throws ValidationError for
/// combinations without a defined pattern.
Assignment reuse_assignment(const Topology& top, int r);

/// Riemann zeta for real s > 1 to about 1e-13 absolute; throws DomainError
/// for s <= 1.
double riemann_zeta(double s);

/// Per-cluster asymptotic lower bound on the optimal aggregate interference of
/// a linear array with mean spacing d: 2 zeta(eta) P0 / (r^eta d^eta).
double asymptotic_lower_bound(int r, double eta, double p0, double d);

enum class ReferenceKind { Exhaustive, Alternating, FrequencyReuse };

std::string to_string(ReferenceKind kind);

struct BoundReport {
  double i_a = 0.0;  ///< aggregate of the supplied (converged) assignment
  double i_o = 0.0;  ///< exhaustive optimum, or the reuse reference
  double i_w = 0.0;  ///< all active clusters co-band
  double ratio_aw = 0.0;
  double ratio_ao = 0.0;
  double analytic_lower = 0.0;      ///< active count times asymptotic_lower_bound
  double analytic_ratio_cap = 0.0;  ///< r^(eta-1) / (d_min / min(d_max, d))^eta
  std::size_t active = 0;
  ReferenceKind reference = ReferenceKind::Exhaustive;
  /// Exhaustive, or alternating on a uniform linear array with r = 2 and
  /// eta >= 2 where it is provably optimal.
  bool reference_is_optimal = false;
  double d_min = 0.0;
  double d_max = 0.0;
  std::string spacing_note;

  bool upper_bound_holds = false;  ///< i_a <= i_w / r
  bool ordering_holds = false;     ///< i_o <= i_a <= i_w (only when the reference is optimal)
  bool ratio_cap_holds = false;    ///< ratio_ao <= analytic_ratio_cap
};

/// Compares a converged assignment with the worst case, the optimum (or the
/// near-optimal reuse reference) and the analytic caps. Violations are
/// reported in the flags, never thrown.
BoundReport bound_report(const Topology& top, const ActivityState& act, const Assignment& converged,
                         int r, double d_ref);

}  // namespace freqalloc
