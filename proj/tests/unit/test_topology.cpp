#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "freqalloc/error.hpp"
#include "freqalloc/topology.hpp"
#include "freqalloc/topology_io.hpp"
#include "oracles.hpp"

using namespace freqalloc;

namespace {

void check_metric(const Topology& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.distance(i, i) == 0.0);
    CHECK(t.gain(i, i) == 0.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      CHECK(t.distance(i, j) == t.distance(j, i));
      if (i != j) CHECK(t.distance(i, j) >= t.min_sep() * (1 - 1e-12));
    }
  }
}

bool identical(const Topology& a, const Topology& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a.distance(i, j) != b.distance(i, j) || a.gain(i, j) != b.gain(i, j)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("uniform linear array distances") {
  const auto t3 = make_uniform_linear_array(3, 1.0);
  CHECK(t3.distance(0, 2) == 2.0);

  const auto t100 = make_uniform_linear_array(100, 1.0);
  CHECK(t100.size() == 100);
  CHECK(t100.distance(0, 99) == 99.0);
  CHECK(t100.p0() == 1.0);
  CHECK(t100.eta() == 2.0);

  const auto t2 = make_uniform_linear_array(2, 0.5);
  CHECK(t2.distance(0, 1) == 0.5);
  CHECK(t2.distance(1, 0) == 0.5);
  CHECK(t2.distance(0, 0) == 0.0);

  SUBCASE("exact multiples of a non-dyadic spacing") {
    const double d = 0.1;
    const auto t = make_uniform_linear_array(40, d);
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double expect = static_cast<double>(i > j ? i - j : j - i) * d;
        REQUIRE(t.distance(i, j) == expect);
      }
    }
  }
  check_metric(t100);
}

TEST_CASE("gain follows the path-loss law") {
  const auto t = make_uniform_linear_array(4, 2.0, {3.0, 3.0});
  CHECK(t.gain(0, 3) == doctest::Approx(3.0 / std::pow(6.0, 3.0)).epsilon(1e-15));
  CHECK(t.gain(1, 2) == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
}

TEST_CASE("random linear array") {
  SUBCASE("two clusters sit on the endpoints") {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
      const auto t = make_random_linear_array(2, 1.0, 1.0, seed);
      CHECK(t.positions()[0].x == 0.0);
      CHECK(t.positions()[1].x == 1.0);
    }
  }
  SUBCASE("gaps respect the separation") {
    const auto t = make_random_linear_array(10, 1.0, 0.5, 7);
    for (double g : t.adjacent_gaps()) {
      CHECK(g >= 0.5 - 1e-12);
      CHECK(g <= 9.0);
    }
    CHECK(t.positions().front().x == 0.0);
    CHECK(t.positions().back().x == 9.0);
    check_metric(t);
  }
  SUBCASE("infeasible packing") {
    CHECK_THROWS_AS(make_random_linear_array(3, 1.0, 1.5, 1), ValidationError);
  }
  SUBCASE("dense but feasible packing terminates") {
    const auto t = make_random_linear_array(50, 1.0, 0.999, 3);
    for (double g : t.adjacent_gaps()) CHECK(g >= 0.999 - 1e-12);
  }
  SUBCASE("pure function of the seed") {
    CHECK(identical(make_random_linear_array(30, 1.0, 0.3, 11), make_random_linear_array(30, 1.0, 0.3, 11)));
    CHECK_FALSE(identical(make_random_linear_array(30, 1.0, 0.3, 11), make_random_linear_array(30, 1.0, 0.3, 12)));
  }
}

TEST_CASE("rectangular lattice") {
  const auto t = make_rectangular_lattice(2, 2, 1.0);
  CHECK(t.distance(0, 3) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(make_rectangular_lattice(10, 10, 1.0).size() == 100);
  const auto line = make_rectangular_lattice(1, 3, 2.0);
  CHECK(line.distance(0, 2) == 4.0);
  check_metric(t);
}

TEST_CASE("hexagonal lattice") {
  const auto t = make_hexagonal_lattice(2, 2, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    int unit = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i != j && std::abs(t.distance(i, j) - 1.0) <= 1e-12) ++unit;
    }
    CHECK(unit >= 2);
  }
  CHECK(make_hexagonal_lattice(10, 10, 1.0).size() == 100);
  const auto pair = make_hexagonal_lattice(1, 2, 1.0);
  CHECK(pair.distance(0, 1) == 1.0);

  const auto big = make_hexagonal_lattice(6, 6, 1.0);
  check_metric(big);
  // Interior clusters have six neighbours at distance d.
  const std::size_t centre = 2 * 6 + 2;
  int six = 0;
  for (std::size_t j = 0; j < big.size(); ++j) {
    if (j != centre && std::abs(big.distance(centre, j) - 1.0) <= 1e-12) ++six;
  }
  CHECK(six == 6);
}

TEST_CASE("from_positions validation") {
  CHECK_THROWS_AS(Topology::from_positions({{0, 0}, {0, 0}}, 1, {}), ValidationError);
  CHECK_THROWS_AS(Topology::from_positions({{0, 0}, {1, 0}}, 1, {1.0, 0.5}), ValidationError);
  CHECK_THROWS_AS(Topology::from_positions({{0, 0}, {1, 0}}, 1, {0.0, 2.0}), ValidationError);
  const auto single = Topology::from_positions({{3, 0}}, 1, {});
  CHECK(single.size() == 1);
  const auto tri = Topology::from_positions({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}}, 2, {});
  CHECK(tri.distance(0, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tri.min_sep() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("topology json round trip") {
  const auto t = make_random_linear_array(12, 1.0, 0.4, 5, {2.0, 3.0});
  const auto back = topology_from_json(topology_to_json(t));
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.positions()[i].x == t.positions()[i].x);
  CHECK(back.p0() == 2.0);
  CHECK(back.eta() == 3.0);

  const auto hex = make_hexagonal_lattice(3, 3, 1.0);
  const auto hex_back = topology_from_json(topology_to_json(hex));
  CHECK(hex_back.dimension() == 2);
  CHECK(hex_back.distance(0, 8) == doctest::Approx(hex.distance(0, 8)).epsilon(1e-15));

  const auto path = std::filesystem::temp_directory_path() / "freqalloc_topology_test.json";
  save_topology(t, path);
  CHECK(load_topology(path).size() == 12);
  std::filesystem::remove(path);

  CHECK_THROWS_WITH_AS(topology_from_json(R"({"positions": [[0], [1], "x"]})"),
                       doctest::Contains("/positions/2"), ValidationError);
  CHECK_THROWS_AS(topology_from_json("{"), ValidationError);
}
