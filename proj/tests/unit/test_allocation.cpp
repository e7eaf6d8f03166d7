#include <map>
#include <memory>
#include <set>

#include "doctest.h"
#include "freqalloc/allocation.hpp"
#include "freqalloc/error.hpp"
#include "freqalloc/oracle_bounds.hpp"
#include "oracles.hpp"

using namespace freqalloc;

namespace {

std::shared_ptr<const Topology> ula(std::size_t n, double eta = 2.0) {
  return std::make_shared<const Topology>(make_uniform_linear_array(n, 1.0, {1.0, eta}));
}

SimState state_of(std::shared_ptr<const Topology> t, std::vector<int> bands, int r = 2, std::uint64_t seed = 1) {
  const std::size_t n = t->size();
  return SimState(std::move(t), Assignment(std::move(bands), r), ActivityState(n), seed);
}

std::vector<int> as_vector(const Assignment& a) { return {a.bands().begin(), a.bands().end()}; }

}  // namespace

TEST_CASE("best band") {
  CHECK(best_band(state_of(ula(3), {1, 1, 1}), 1) == 2);
  // Tie between 1.0 and 1.0 keeps the current band.
  CHECK(best_band(state_of(ula(3), {1, 1, 2}), 1) == 1);

  auto single = state_of(ula(3), {2, 1, 1}, 3);
  single.set_active(1, false);
  single.set_active(2, false);
  CHECK(best_band(single, 0) == 2);
}

TEST_CASE("apply update") {
  auto s = state_of(ula(3), {1, 1, 1});
  const auto rec = apply_update(s, 1);
  CHECK(as_vector(s.assignment()) == std::vector<int>{1, 2, 1});
  CHECK(rec.aggregate_after - rec.aggregate_before == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(rec.switched());
  CHECK(rec.epoch == 1);

  const auto again = apply_update(s, 1);
  CHECK_FALSE(again.switched());
  CHECK(again.aggregate_after == again.aggregate_before);

  auto pair = state_of(ula(2), {1, 1});
  const auto p = apply_update(pair, 0);
  CHECK(p.aggregate_after - p.aggregate_before == doctest::Approx(-2.0).epsilon(1e-14));

  auto off = state_of(ula(3), {1, 1, 1});
  off.set_active(2, false);
  CHECK_THROWS_AS(apply_update(off, 2), ValidationError);
  CHECK_THROWS_AS(apply_update(off, 7), ValidationError);
}

TEST_CASE("delta identity on random updates") {
  const auto t = std::make_shared<const Topology>(make_hexagonal_lattice(5, 5, 1.0));
  Rng rng = make_rng(3);
  auto s = SimState(t, make_initial_assignment(25, 4, InitialAssignment::UniformRandom, rng), ActivityState(25), 3);
  std::uniform_int_distribution<std::size_t> who(0, 24);
  for (int step = 0; step < 300; ++step) {
    const std::size_t i = who(rng);
    const double old_i = s.cache().band_interference(i, s.assignment()[i]);
    const auto rec = apply_update(s, i);
    const double new_i = s.cache().band_interference(i, rec.new_band);
    CHECK(rec.aggregate_after - rec.aggregate_before == doctest::Approx(2.0 * (new_i - old_i)).epsilon(1e-9));
    CHECK(rec.aggregate_after <= rec.aggregate_before + 1e-9 * std::max(1.0, rec.aggregate_before));
  }
}

TEST_CASE("run to convergence") {
  SUBCASE("four clusters respect the r-fold bound") {
    const double i_w = 2.0 * (3.0 + 2.0 * 0.25 + 1.0 / 9.0);
    for (auto kind : {SchedulerKind::RandomPermutationRounds, SchedulerKind::PoissonClock}) {
      const auto res = run_to_convergence(state_of(ula(4), {1, 1, 1, 1}), {kind, 1.0});
      CHECK(res.state.aggregate() <= i_w / 2.0 + 1e-12);
    }
  }
  SUBCASE("converged value is never below the exhaustive optimum") {
    for (std::size_t n = 2; n <= 10; ++n) {
      const auto t = ula(n);
      const auto best = oracle::exhaustive(oracle::positions_of(*t), oracle::all_on(n), 2, 1.0, 2.0);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng = make_rng(seed, 2);
        SimState s(t, make_initial_assignment(n, 2, InitialAssignment::UniformRandom, rng), ActivityState(n), seed);
        const auto res = run_to_convergence(std::move(s), {SchedulerKind::PoissonClock, 0.1});
        CHECK(res.state.aggregate() >= best.value * (1 - 1e-12));
      }
    }
  }
  SUBCASE("single cluster") {
    auto one = std::make_shared<const Topology>(Topology::from_positions({{0, 0}}, 1, {}));
    const auto res = run_to_convergence(SimState(one, Assignment({1}, 2), ActivityState(1), 0),
                                        {SchedulerKind::RandomPermutationRounds, 1.0});
    CHECK(res.trace.size() == 1);
    CHECK(res.state.aggregate() == 0.0);
  }
  SUBCASE("no active cluster returns at once") {
    auto s = state_of(ula(3), {1, 1, 1});
    for (std::size_t i = 0; i < 3; ++i) s.set_active(i, false);
    CHECK(run_to_convergence(std::move(s), {}).trace.empty());
  }
  SUBCASE("budget exhaustion raises") {
    CHECK_THROWS_AS(run_to_convergence(state_of(ula(20), std::vector<int>(20, 1)), {}, 3), ConvergenceError);
  }
  SUBCASE("converged states are local minima") {
    const auto t = std::make_shared<const Topology>(make_random_linear_array(30, 1.0, 0.3, 4, {1.0, 3.0}));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto res = run_to_convergence(SimState(t, Assignment::uniform(30, 1, 3), ActivityState(30), seed),
                                          {SchedulerKind::PoissonClock, 1.0});
      CHECK(is_local_minimum(res.state));
      CHECK(oracle::is_nash(oracle::positions_of(*t), as_vector(res.state.assignment()), oracle::all_on(30), 3, 1.0,
                            3.0));
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    auto run = [&] {
      return run_to_convergence(state_of(ula(25), std::vector<int>(25, 1), 2, 77), {SchedulerKind::PoissonClock, 0.5});
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) {
      CHECK(a.trace[k].cluster == b.trace[k].cluster);
      CHECK(a.trace[k].time == b.trace[k].time);
      CHECK(a.trace[k].aggregate_after == b.trace[k].aggregate_after);
    }
  }
}

TEST_CASE("schedulers") {
  SUBCASE("poisson clock mean gap") {
    Scheduler sched({SchedulerKind::PoissonClock, 1.0});
    ActivityState act(10);
    Rng rng = make_rng(5);
    double total = 0.0;
    const int events = 100000;
    for (int k = 0; k < events; ++k) total += sched.next(act, rng).dt;
    CHECK(std::abs(total / events - 1.0) < 0.02);
  }
  SUBCASE("permutation rounds visit each cluster once") {
    Scheduler sched({SchedulerKind::RandomPermutationRounds, 1.0});
    ActivityState act(5);
    Rng rng = make_rng(6);
    for (int round = 0; round < 20; ++round) {
      std::multiset<std::size_t> seen;
      for (int k = 0; k < 5; ++k) {
        const auto u = sched.next(act, rng);
        seen.insert(u.cluster);
        CHECK(u.ends_round == (k == 4));
        CHECK(u.dt == 1.0);
      }
      CHECK(seen == std::multiset<std::size_t>{0, 1, 2, 3, 4});
    }
  }
  SUBCASE("one active cluster is always chosen") {
    for (auto kind : {SchedulerKind::RandomPermutationRounds, SchedulerKind::PoissonClock}) {
      Scheduler sched({kind, 1.0});
      ActivityState act(std::vector<bool>{false, false, true, false}, 1.0);
      Rng rng = make_rng(8);
      for (int k = 0; k < 50; ++k) CHECK(sched.next(act, rng).cluster == 2);
    }
  }
  SUBCASE("nothing active") {
    Scheduler sched({SchedulerKind::PoissonClock, 1.0});
    Rng rng = make_rng(1);
    CHECK_THROWS_AS(sched.next(ActivityState(std::vector<bool>{false, false}, 1.0), rng), SchedulingError);
    auto s = state_of(ula(2), {1, 2});
    s.set_active(0, false);
    s.set_active(1, false);
    CHECK_THROWS_AS(schedule_next(sched, s), SchedulingError);
  }
  CHECK_THROWS_AS(Scheduler({SchedulerKind::PoissonClock, 0.0}), ValidationError);
}

TEST_CASE("update guard") {
  CHECK(default_update_guard(10, 2.0) == 100000);
  CHECK(default_update_guard(100, 2.0) == 1000000000ULL);
}

TEST_CASE("sim state copies are independent") {
  auto a = state_of(ula(5), {1, 1, 1, 1, 1});
  SimState b = a;
  apply_update(b, 2);
  CHECK(a.assignment()[2] == 1);
  CHECK(a.aggregate() != b.aggregate());
  CHECK(a.aggregate() == doctest::Approx(aggregate_interference(a.topology(), a.assignment(), a.activity())));
}
