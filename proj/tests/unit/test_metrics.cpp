#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "doctest.h"
#include "freqalloc/allocation.hpp"
#include "freqalloc/error.hpp"
#include "freqalloc/metrics.hpp"
#include "oracles.hpp"

using namespace freqalloc;

TEST_CASE("shannon capacity") {
  const auto t = make_uniform_linear_array(3, 1.0);
  const auto isolated = shannon_capacity(t, Assignment({1, 2, 3}, 3), ActivityState(3), {1.0, 1.0});
  for (double c : isolated.per_cluster) CHECK(c == doctest::Approx(1.0).epsilon(1e-15));

  const auto shared = shannon_capacity(t, Assignment({1, 1, 2}, 2), ActivityState(3), {1.0, 0.1});
  CHECK(shared.per_cluster[0] == doctest::Approx(std::log2(1.0 + 1.0 / 1.1)).epsilon(1e-14));
  CHECK(shared.per_cluster[0] == doctest::Approx(0.9329).epsilon(1e-4));
  CHECK(shared.per_cluster[0] < std::log2(1.0 + 1.0 / 0.1));

  const ActivityState partial(std::vector<bool>{true, false, true}, 1.0);
  const auto part = shannon_capacity(t, Assignment({1, 1, 2}, 2), partial, {1.0, 0.1});
  CHECK(part.active == 2);
  CHECK(part.per_cluster[1] == 0.0);
  CHECK(part.normalized_aggregate == doctest::Approx((part.per_cluster[0] + part.per_cluster[2]) / 2.0));

  CHECK_THROWS_AS(shannon_capacity(t, Assignment({1, 1, 2}, 2), ActivityState(3), {0.0, 0.1}), ValidationError);
}

TEST_CASE("capacity decreases with interference") {
  const LinkParams link{1.0, 0.1};
  double prev = link_capacity(0.0, link);
  for (double i = 0.01; i < 10.0; i *= 1.5) {
    const double c = link_capacity(i, link);
    CHECK(c < prev);
    CHECK(c >= 0.0);
    prev = c;
  }
}

TEST_CASE("normalised capacity ignores cluster order") {
  const auto t = make_random_linear_array(12, 1.0, 0.3, 4);
  std::vector<int> bands{1, 2, 2, 1, 2, 1, 1, 2, 1, 2, 1, 1};
  const auto base = shannon_capacity(t, Assignment(bands, 2), ActivityState(12), {1.0, 0.1});

  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[7]);
  std::vector<Point> pos(12);
  std::vector<int> pb(12);
  for (std::size_t k = 0; k < 12; ++k) {
    pos[k] = t.positions()[perm[k]];
    pb[k] = bands[perm[k]];
  }
  const auto shuffled = Topology::from_positions(pos, 1, {});
  const auto other = shannon_capacity(shuffled, Assignment(pb, 2), ActivityState(12), {1.0, 0.1});
  CHECK(other.normalized_aggregate == doctest::Approx(base.normalized_aggregate).epsilon(1e-13));
}

TEST_CASE("an update never lowers the updating cluster's capacity") {
  const auto t = std::make_shared<const Topology>(make_hexagonal_lattice(4, 4, 1.0));
  Rng rng = make_rng(17);
  SimState s(t, make_initial_assignment(16, 4, InitialAssignment::UniformRandom, rng), ActivityState(16), 17);
  const LinkParams link{1.0, 0.1};
  std::uniform_int_distribution<std::size_t> who(0, 15);
  for (int k = 0; k < 200; ++k) {
    const std::size_t i = who(rng);
    const double before = link_capacity(s.cache().cluster_interference(i), link);
    apply_update(s, i);
    CHECK(link_capacity(s.cache().cluster_interference(i), link) >= before - 1e-12);
  }
  CHECK(normalized_capacity(s.cache(), link) ==
        doctest::Approx(shannon_capacity(*t, s.assignment(), s.activity(), link).normalized_aggregate).epsilon(1e-12));
}

TEST_CASE("capacity comparison") {
  const auto t = make_uniform_linear_array(10, 1.0);
  const Assignment alt({1, 2, 1, 2, 1, 2, 1, 2, 1, 2}, 2);
  const auto same = capacity_comparison(t, ActivityState(10), alt, alt, LinkParams::defaults_for(1.0));
  CHECK(same.achieved_fraction == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(same.fraction_defined);

  const auto worse = capacity_comparison(t, ActivityState(10), Assignment::uniform(10, 1, 2), alt, {1.0, 0.1});
  CHECK(worse.achieved_fraction < 1.0);
  CHECK(worse.achieved_fraction > 0.0);

  const ActivityState none(std::vector<bool>(10, false), 1.0);
  CHECK_FALSE(capacity_comparison(t, none, alt, alt, {1.0, 0.1}).fraction_defined);
}

TEST_CASE("decibel gap") {
  CHECK(db_gap(2.5, 2.5) == 0.0);
  CHECK(db_gap(2.0, 1.0) == doctest::Approx(3.0103).epsilon(1e-5));
  CHECK_THROWS_AS(db_gap(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(db_gap(1.0, -1.0), DomainError);
}
