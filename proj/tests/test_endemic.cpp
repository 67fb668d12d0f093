#include <gtest/gtest.h>

#include "episim/endemic.hpp"

using namespace episim;

namespace {

endemic_params measles_like(std::size_t n = 10000) { return {n, 2.0, 1.0, 0.01}; }

} // namespace

TEST(EndemicEquilibrium, Values) {
  const auto p = measles_like();
  EXPECT_NEAR(p.r0(), 1.9802, 1e-4);
  EXPECT_NEAR(p.delta(), 0.009901, 1e-6);
  const auto e = endemic_equilibrium(p);
  EXPECT_NEAR(e.s, 0.50500, 1e-5);
  EXPECT_NEAR(e.i, 0.004901, 1e-6);
  EXPECT_NEAR(e.r, 0.49010, 1e-5);
  EXPECT_NEAR(e.s + e.i + e.r, 1.0, 1e-15);
}

TEST(EndemicEquilibrium, DerivativesVanish) {
  for (double lambda : {1.05, 2.0, 5.0, 20.0})
    for (double mu : {1e-4, 0.01, 0.2}) {
      const endemic_params p{1000, lambda, 1.0, mu};
      if (p.r0() <= 1.0) continue;
      const auto d = endemic_derivatives(p, endemic_equilibrium(p));
      for (double x : d) EXPECT_LT(std::abs(x), 1e-12);
    }
}

TEST(EndemicEquilibrium, Limits) {
  EXPECT_THROW(endemic_equilibrium({100, 1.0, 1.0, 0.01}), precondition_error);
  EXPECT_LT(endemic_equilibrium({100, 1.01 * (1.0 + 1e-6), 1.0, 0.01}).i, 1e-6);
  const auto small_mu = endemic_equilibrium({100, 2.0 * (1.0 + 1e-7), 1.0, 1e-7});
  EXPECT_LT(small_mu.i, 1e-6);
  EXPECT_NEAR(small_mu.s, 0.5, 1e-6);
}

TEST(DeterministicEndemic, FixedPointIsStationary) {
  const auto p = measles_like();
  const auto e = endemic_equilibrium(p);
  const auto traj = deterministic_endemic_trajectory(p, e, 100.0);
  for (const auto& pt : traj) {
    EXPECT_NEAR(pt.x.s, e.s, 1e-6);
    EXPECT_NEAR(pt.x.i, e.i, 1e-6);
    EXPECT_NEAR(pt.x.r, e.r, 1e-6);
  }
}

TEST(DeterministicEndemic, ConvergesToEquilibrium) {
  const auto p = measles_like();
  const auto e = endemic_equilibrium(p);
  const auto traj = deterministic_endemic_trajectory(p, {0.99, 0.01, 0.0}, 2000.0);
  const auto last = traj.back().x;
  EXPECT_NEAR(traj.back().t, 2000.0, 1e-9);
  EXPECT_NEAR(last.s, e.s, 0.01 * e.s);
  EXPECT_NEAR(last.i, e.i, 0.01 * e.i);
  EXPECT_NEAR(last.r, e.r, 0.01 * e.r);
}

TEST(DeterministicEndemic, DiseaseFreeStart) {
  const auto traj = deterministic_endemic_trajectory(measles_like(), {0.5, 0.0, 0.5}, 2000.0);
  EXPECT_NEAR(traj.back().x.s, 1.0, 1e-6);
  EXPECT_EQ(traj.back().x.i, 0.0);
  EXPECT_THROW(deterministic_endemic_trajectory(measles_like(), {0.5, 0.0, 0.5}, 10.0, 0.0), precondition_error);
}

TEST(StartAtEquilibrium, RoundsAndRejectsTinyPopulations) {
  const auto c = start_at_equilibrium(measles_like());
  EXPECT_EQ(c.s, 5050u);
  EXPECT_EQ(c.i, 49u);
  EXPECT_EQ(c.r, 4901u);
  EXPECT_THROW(start_at_equilibrium(measles_like(100)), precondition_error);
}

TEST(SimulateEndemic, AbsorbingStart) {
  stream rng(1, 0);
  const auto r = simulate_endemic(measles_like(), {100, 0, 0}, 50.0, rng);
  ASSERT_TRUE(r.extinction_time.has_value());
  EXPECT_EQ(*r.extinction_time, 0.0);
}

TEST(SimulateEndemic, ExtinctionIsAbsorbing) {
  stream rng(2, 0);
  endemic_run_options opt;
  opt.stop_at_extinction = false;
  opt.record = true;
  const endemic_params p{200, 1.5, 1.0, 0.05};
  const auto r = simulate_endemic(p, {190, 10, 0}, 300.0, rng, opt);
  ASSERT_TRUE(r.extinction_time.has_value());
  for (const auto& s : r.trajectory)
    if (s.t >= *r.extinction_time) {
      EXPECT_EQ(s.c.i, 0u);
    }
  EXPECT_EQ(r.final.i, 0u);
}

TEST(SimulateEndemic, QuasiStationaryLevel) {
  const auto p = measles_like();
  const double i_hat = endemic_equilibrium(p).i;
  const auto q = quasi_stationary_average(p, start_at_equilibrium(p), 500.0, 10000, 123);
  ASSERT_GT(q.surviving, 0u);
  EXPECT_NEAR(q.surviving_mean, i_hat, 0.1 * i_hat);
  EXPECT_NEAR(q.alive_mean, i_hat, 0.1 * i_hat);
}

TEST(SimulateEndemic, PopulationFluctuatesAroundN) {
  stream rng(4, 0);
  endemic_run_options opt;
  opt.stop_at_extinction = false;
  const auto p = measles_like();
  const auto r = simulate_endemic(p, start_at_equilibrium(p), 1000.0, rng, opt);
  EXPECT_NEAR(r.mean_population, 10000.0, 200.0);
}

TEST(TimeToExtinction, Subcritical) {
  const endemic_params p{10000, 0.5, 1.0, 0.01};
  const auto s = time_to_extinction_mc(p, {9950, 50, 0}, 500, 7, 1000.0);
  EXPECT_LT(s.median, 20.0);
  EXPECT_EQ(s.censored_fraction, 0.0);
  EXPECT_LE(s.lower_quartile, s.median);
  EXPECT_LE(s.median, s.upper_quartile);
}

TEST(TimeToExtinction, AbsorbingStartGivesZeroTimes) {
  const auto s = time_to_extinction_mc(measles_like(), {100, 0, 0}, 100, 1, 10.0);
  EXPECT_EQ(s.median, 0.0);
  EXPECT_EQ(s.upper_quartile, 0.0);
  EXPECT_THROW(time_to_extinction_mc(measles_like(), {100, 0, 0}, 99, 1, 10.0), precondition_error);
}

TEST(TimeToExtinction, MedianGrowsWithPopulationWhenSupercritical) {
  const endemic_params base{500, 3.0, 1.0, 0.02};
  double prev = 0.0;
  for (std::size_t n : {500u, 1000u, 2000u}) {
    auto p = base;
    p.n = n;
    const auto s = time_to_extinction_mc(p, start_at_equilibrium(p), 200, 11 + n, 5000.0);
    EXPECT_GE(s.median, prev);
    prev = s.median;
  }
}

TEST(TimeToExtinction, SubcriticalMedianRoughlyIndependentOfN) {
  std::vector<double> medians;
  for (std::size_t n : {500u, 1000u, 2000u}) {
    const endemic_params p{n, 0.5, 1.0, 0.01};
    medians.push_back(time_to_extinction_mc(p, {n - 20, 20, 0}, 300, 21 + n, 1000.0).median);
  }
  const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
  EXPECT_LE(*hi, 2.0 * *lo);
}
