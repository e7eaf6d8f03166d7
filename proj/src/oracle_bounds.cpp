#include "freqalloc/oracle_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <vector>

#include "freqalloc/error.hpp"

namespace freqalloc {

namespace {

// Exhaustive search inside bound_report runs below this many assignments.
constexpr double kReportSearchBudget = 1e6;
constexpr double kRelTol = 1e-9;
constexpr double kTieTol = 1e-12;

class BranchAndBound {
 public:
  BranchAndBound(const Topology& top, std::vector<std::size_t> clusters, int r)
      : top_(top), clusters_(std::move(clusters)), r_(r), bands_(clusters_.size(), 0) {}

  void run() {
    best_ = std::numeric_limits<double>::infinity();
    descend(0, 0, 0.0);
  }

  double best() const { return best_; }
  const std::vector<int>& best_bands() const { return best_bands_; }

 private:
  // Only canonical labellings are visited: a cluster may use at most one band
  // beyond those already in use. Costs are non-negative so a partial sum above
  // the incumbent can be cut.
  void descend(std::size_t depth, int used, double partial) {
    if (partial > best_ + kTieTol * best_) return;
    if (depth == clusters_.size()) {
      if (partial < best_ - kTieTol * best_ || best_bands_.empty()) {
        best_ = partial;
        best_bands_ = bands_;
      }
      return;
    }
    const std::size_t i = clusters_[depth];
    const int limit = std::min(r_, used + 1);
    for (int k = 1; k <= limit; ++k) {
      double added = 0.0;
      for (std::size_t e = 0; e < depth; ++e) {
        if (bands_[e] == k) added += top_.gain(i, clusters_[e]);
      }
      bands_[depth] = k;
      descend(depth + 1, std::max(used, k), partial + 2.0 * added);
    }
    bands_[depth] = 0;
  }

  const Topology& top_;
  std::vector<std::size_t> clusters_;
  int r_;
  std::vector<int> bands_;
  std::vector<int> best_bands_;
  double best_ = 0.0;
};

std::vector<std::size_t> active_indices(const ActivityState& act) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < act.size(); ++i) {
    if (act.active(i)) out.push_back(i);
  }
  return out;
}

// Cluster order along the line, for linear layouts.
std::vector<std::size_t> order_by_x(const Topology& top) {
  std::vector<std::size_t> idx(top.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return top.positions()[a].x < top.positions()[b].x;
  });
  return idx;
}

long positive_mod(long v, long m) { return ((v % m) + m) % m; }

}  // namespace

OptimalAssignment brute_force_optimal(const Topology& top, const ActivityState& act, int r) {
  if (r < 1) throw ValidationError("band count r must be >= 1");
  if (act.size() != top.size()) throw ValidationError("activity length does not match the topology");
  auto clusters = active_indices(act);
  const double space = std::pow(static_cast<double>(r), static_cast<double>(clusters.size()));
  if (space > kBruteForceGuard) {
    throw CapacityError("exhaustive search over " + std::to_string(r) + "^" +
                        std::to_string(clusters.size()) + " assignments exceeds the guard");
  }

  std::vector<int> bands(top.size(), 1);
  if (clusters.empty()) return {Assignment(std::move(bands), r), 0.0};

  BranchAndBound search(top, clusters, r);
  search.run();
  for (std::size_t e = 0; e < clusters.size(); ++e) bands[clusters[e]] = search.best_bands()[e];
  return {Assignment(std::move(bands), r), search.best()};
}

Assignment alternating_assignment(std::size_t n, int r) {
  if (n < 1) throw ValidationError("alternating assignment needs n >= 1");
  if (r < 1) throw ValidationError("band count r must be >= 1");
  std::vector<int> bands(n);
  for (std::size_t i = 0; i < n; ++i) bands[i] = static_cast<int>(i % static_cast<std::size_t>(r)) + 1;
  return Assignment(std::move(bands), r);
}

Assignment canonicalize(const Assignment& asg) {
  std::vector<int> relabel(static_cast<std::size_t>(asg.r()) + 1, 0);
  int next = 0;
  std::vector<int> bands(asg.size());
  for (std::size_t i = 0; i < asg.size(); ++i) {
    int& label = relabel[static_cast<std::size_t>(asg[i])];
    if (label == 0) label = ++next;
    bands[i] = label;
  }
  return Assignment(std::move(bands), asg.r());
}

Assignment reuse_assignment(const Topology& top, int r) {
  if (r < 1) throw ValidationError("band count r must be >= 1");
  std::vector<int> bands(top.size(), 1);
  switch (top.layout()) {
    case Layout::UniformLinear:
    case Layout::RandomLinear:
    case Layout::Custom: {
      if (top.dimension() != 1) {
        throw ValidationError("no reuse pattern is defined for custom 2-D placements");
      }
      const auto order = order_by_x(top);
      for (std::size_t k = 0; k < order.size(); ++k) {
        bands[order[k]] = static_cast<int>(k % static_cast<std::size_t>(r)) + 1;
      }
      break;
    }
    case Layout::Rectangular:
    case Layout::Hexagonal: {
      if (r != 4) throw ValidationError("lattice reuse patterns are defined for r = 4 only");
      for (std::size_t row = 0; row < top.rows(); ++row) {
        for (std::size_t col = 0; col < top.cols(); ++col) {
          long q = static_cast<long>(col);
          if (top.layout() == Layout::Hexagonal) {
            // Axial coordinate of the offset-row layout; co-band clusters then
            // form the sublattice scaled by two, nearest co-band distance 2d.
            q -= static_cast<long>(row / 2);
          }
          const long a = positive_mod(q, 2);
          const long b = static_cast<long>(row % 2);
          bands[row * top.cols() + col] = static_cast<int>(1 + a + 2 * b);
        }
      }
      break;
    }
  }
  return Assignment(std::move(bands), r);
}

double riemann_zeta(double s) {
  if (!(s > 1.0) || !std::isfinite(s)) throw DomainError("zeta(s) diverges for s <= 1");
  static std::mutex memo_mutex;
  static std::map<double, double> memo;
  {
    std::lock_guard lock(memo_mutex);
    if (auto it = memo.find(s); it != memo.end()) return it->second;
  }
  // Direct sum of the first M terms, smallest first, then the tail
  // sum_{j>M} j^-s by Euler-Maclaurin: integral minus half the endpoint plus
  // the first derivative correction.
  constexpr long kTerms = 1000000;
  double sum = 0.0;
  for (long j = kTerms; j >= 1; --j) sum += std::pow(static_cast<double>(j), -s);
  const double m = static_cast<double>(kTerms);
  const double tail = std::pow(m, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(m, -s) +
                      s / 12.0 * std::pow(m, -s - 1.0);
  const double value = sum + tail;
  std::lock_guard lock(memo_mutex);
  memo.emplace(s, value);
  return value;
}

double asymptotic_lower_bound(int r, double eta, double p0, double d) {
  if (r < 1) throw ValidationError("band count r must be >= 1");
  if (!(d > 0.0)) throw ValidationError("spacing must be positive");
  return 2.0 * riemann_zeta(eta) * p0 / (std::pow(static_cast<double>(r), eta) * std::pow(d, eta));
}

std::string to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::Exhaustive:
      return "exhaustive optimum";
    case ReferenceKind::Alternating:
      return "alternating assignment";
    case ReferenceKind::FrequencyReuse:
      return "near-optimal reference (1:r frequency reuse)";
  }
  return "unknown";
}

BoundReport bound_report(const Topology& top, const ActivityState& act, const Assignment& converged,
                         int r, double d_ref) {
  BoundReport rep;
  rep.active = act.active_count();
  rep.i_a = aggregate_interference(top, converged, act);
  rep.i_w = worst_case_interference(top, act);

  const double space = std::pow(static_cast<double>(r), static_cast<double>(rep.active));
  if (space <= kReportSearchBudget) {
    rep.i_o = brute_force_optimal(top, act, r).aggregate;
    rep.reference = ReferenceKind::Exhaustive;
    rep.reference_is_optimal = true;
  } else {
    rep.i_o = aggregate_interference(top, reuse_assignment(top, r), act);
    const bool linear = top.dimension() == 1;
    rep.reference = linear ? ReferenceKind::Alternating : ReferenceKind::FrequencyReuse;
    rep.reference_is_optimal = top.layout() == Layout::UniformLinear && r == 2 && top.eta() >= 2.0 &&
                               rep.active == top.size();
  }

  rep.ratio_aw = rep.i_w > 0.0 ? rep.i_a / rep.i_w : 0.0;
  rep.ratio_ao = rep.i_o > 0.0 ? rep.i_a / rep.i_o : (rep.i_a > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);

  const double tol_w = kRelTol * std::max(1.0, rep.i_w);
  rep.upper_bound_holds = rep.i_a <= rep.i_w / static_cast<double>(r) + tol_w;
  rep.ordering_holds = !rep.reference_is_optimal ||
                       (rep.i_o <= rep.i_a + kRelTol * std::max(1.0, rep.i_a) && rep.i_a <= rep.i_w + tol_w);

  std::vector<double> spacings;
  if (top.dimension() == 1) {
    spacings = top.adjacent_gaps();
    rep.spacing_note = "d_min/d_max are the smallest/largest adjacent gaps";
  } else {
    spacings = top.nearest_neighbor_distances();
    rep.spacing_note = "2-D placement: d_min/d_max are nearest-neighbour distances; the cap is heuristic";
  }
  if (spacings.empty()) {
    rep.d_min = rep.d_max = d_ref;
  } else {
    rep.d_min = *std::min_element(spacings.begin(), spacings.end());
    rep.d_max = *std::max_element(spacings.begin(), spacings.end());
  }
  const double eta = top.eta();
  rep.analytic_lower = static_cast<double>(rep.active) * asymptotic_lower_bound(r, eta, top.p0(), d_ref);
  rep.analytic_ratio_cap = std::pow(static_cast<double>(r), eta - 1.0) /
                           std::pow(rep.d_min / std::min(rep.d_max, d_ref), eta);
  rep.ratio_cap_holds = rep.ratio_ao <= rep.analytic_ratio_cap * (1.0 + kRelTol);
  return rep;
}

}  // namespace freqalloc
