#include <gtest/gtest.h>

#include <cstring>

#include "episim/exact.hpp"
#include "episim/sim.hpp"
#include "support/oracles.hpp"

using namespace episim;
using episim::testing::chi2_gof_pvalue;
using episim::testing::final_size_histogram;
using episim::testing::two_sample_chi2_pvalue;

namespace {

epidemic_params standard(std::size_t n, std::size_t m, double lambda,
                         duration_distribution d = duration_distribution::exponential(1.0)) {
  epidemic_params p;
  p.n = n;
  p.m = m;
  p.lambda = lambda;
  p.infectious_period = d;
  return p;
}

} // namespace

TEST(SimulateOutbreak, NobodySusceptible) {
  stream rng(1, 0);
  auto p = standard(5, 5, 3.0, duration_distribution::constant(2.0));
  const auto r = simulate_outbreak(p, rng);
  EXPECT_EQ(r.final_size, 0u);
  EXPECT_EQ(r.extinction_time, 2.0);
  EXPECT_EQ(r.peak_infectives, 5u);

  p.infectious_period = duration_distribution::exponential(1.0);
  stream a(2, 0), b(2, 0);
  const auto r2 = simulate_outbreak(p, a);
  double longest = 0;
  for (int j = 0; j < 5; ++j) longest = std::max(longest, p.infectious_period.sample(b));
  EXPECT_EQ(r2.final_size, 0u);
  EXPECT_DOUBLE_EQ(r2.extinction_time, longest);
}

TEST(SimulateOutbreak, CompartmentsConservedAtEveryEvent) {
  auto p = standard(200, 3, 2.0);
  p.latent_period = duration_distribution::gamma(2.0, 1.0);
  p.vaccination = vaccination_policy{0.2, 0.7, vaccine_mode::leaky};
  outbreak_simulator sim;
  std::vector<compartment_counts> log;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    stream rng(77, rep);
    const auto r = sim.run(p, rng, std::numeric_limits<std::size_t>::max(), &log);
    ASSERT_FALSE(log.empty());
    double prev_t = 0.0;
    for (const auto& c : log) {
      ASSERT_EQ(c.s + c.e + c.i + c.r, p.n);
      ASSERT_GE(c.t, prev_t);
      prev_t = c.t;
    }
    EXPECT_EQ(log.back().i + log.back().e, 0u);
    EXPECT_EQ(p.n - log.back().s - p.m, r.final_size + 0u);
    EXPECT_TRUE(std::isfinite(r.extinction_time));
    EXPECT_LE(r.final_size, p.n - p.m);
  }
}

TEST(SimulateOutbreak, PerfectVaccineProtectsVaccinees) {
  auto p = standard(100, 1, 5.0);
  p.vaccination = vaccination_policy{0.5, 1.0, vaccine_mode::all_or_nothing};
  EXPECT_EQ(p.vaccinated_count(), 50u);
  const auto runs = simulate_replicates(p, 500, 3);
  for (const auto& r : runs) EXPECT_LE(r.final_size, 49u);
}

TEST(SimulateOutbreak, MinorOutbreakFraction) {
  const auto s = run_monte_carlo(standard(1000, 1, 1.5), 10000, 20240601);
  EXPECT_NEAR(s.minor_fraction, 2.0 / 3.0, 0.02);
}

TEST(SimulateOutbreak, SmallCommunityMatchesExactPmf) {
  const auto p = standard(3, 1, 1.5);
  const auto runs = simulate_replicates(p, 1000000, 31);
  const auto exact = final_size_pmf(3, 1, 1.5, p.infectious_period);
  EXPECT_GT(chi2_gof_pvalue(final_size_histogram(runs, 3), exact.probabilities), 0.01);
}

TEST(SimulateOutbreak, GammaPeriodMatchesExactPmf) {
  const auto p = standard(8, 2, 2.0, duration_distribution::gamma(2.0, 2.0));
  const auto runs = simulate_replicates(p, 200000, 32);
  const auto exact = final_size_pmf(8, 2, 2.0, p.infectious_period);
  EXPECT_GT(chi2_gof_pvalue(final_size_histogram(runs, 7), exact.probabilities), 0.01);
}

TEST(Sellke, NoPressureMeansNoInfections) {
  stream rng(4, 0);
  const auto p = standard(50, 2, 3.0, duration_distribution::constant(0.0));
  EXPECT_EQ(simulate_sellke(p, rng), 0u);
}

TEST(Sellke, SmallCommunityMatchesExactPmf) {
  const auto p = standard(4, 1, 2.0, duration_distribution::constant(1.0));
  const auto runs = simulate_replicates(p, 1000000, 41, simulator_kind::sellke);
  const auto exact = final_size_pmf(4, 1, 2.0, p.infectious_period);
  EXPECT_GT(chi2_gof_pvalue(final_size_histogram(runs, 4), exact.probabilities), 0.01);
}

TEST(Sellke, AgreesWithEventDrivenEngine) {
  const auto p = standard(1000, 1, 1.5);
  const auto a = simulate_replicates(p, 10000, 51, simulator_kind::event_driven);
  const auto b = simulate_replicates(p, 10000, 52, simulator_kind::sellke);
  EXPECT_GT(two_sample_chi2_pvalue(final_size_histogram(a, 1000), final_size_histogram(b, 1000)), 0.01);
}

TEST(ReedFrostGraph, EmptyGraph) {
  stream rng(5, 0);
  EXPECT_EQ(simulate_reed_frost_graph(100, 3, 0.0, 1.0, rng), 0u);
}

TEST(ReedFrostGraph, SingleEdgeProbability) {
  const double lambda = 1.3, gamma = 0.8;
  const double expected = 1.0 - std::exp(-lambda / (2.0 * gamma));
  const std::size_t reps = 200000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < reps; ++i) {
    stream rng(6, i);
    hits += simulate_reed_frost_graph(2, 1, lambda, gamma, rng);
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(reps);
  const double se = std::sqrt(expected * (1 - expected) / static_cast<double>(reps));
  EXPECT_LE(std::abs(freq - expected), 3.0 * se);
}

TEST(ReedFrostGraph, MatchesConstantPeriodEpidemic) {
  const auto p = standard(50, 1, 1.5, duration_distribution::constant(1.0));
  const auto a = simulate_replicates(p, 100000, 61, simulator_kind::event_driven);
  const auto b = simulate_replicates(p, 100000, 62, simulator_kind::reed_frost);
  EXPECT_GT(two_sample_chi2_pvalue(final_size_histogram(a, 50), final_size_histogram(b, 50)), 0.01);
}

TEST(ReedFrostGraph, RequiresConstantPeriodInCampaigns) {
  EXPECT_THROW(simulate_replicates(standard(10, 1, 1.0), 10, 1, simulator_kind::reed_frost), precondition_error);
}

TEST(MonteCarlo, MajorOutbreakMoments) {
  const auto s = run_monte_carlo(standard(1000, 1, 1.5), 10000, 7);
  EXPECT_NEAR(s.major_mean, 583.0, 10.0);
  EXPECT_GE(s.major_sd, 45.0);
  EXPECT_LE(s.major_sd, 70.0);
  std::size_t total = 0;
  for (auto c : s.histogram) total += c;
  EXPECT_EQ(total, s.reps);
  EXPECT_EQ(s.master_seed, 7u);
}

TEST(MonteCarlo, VanishingContactRateGivesOnlyMinorOutbreaks) {
  const auto s = run_monte_carlo(standard(1000, 1, 1e-9), 1000, 8);
  EXPECT_EQ(s.minor_fraction, 1.0);
  EXPECT_EQ(s.major_count, 0u);
}

TEST(MonteCarlo, BitIdenticalAcrossThreadCounts) {
  const auto p = standard(300, 2, 1.8, duration_distribution::gamma(2.0, 2.0));
  const auto one = run_monte_carlo(p, 3000, 99, std::nullopt, simulator_kind::event_driven, 1);
  for (unsigned t : {2u, 5u}) {
    const auto many = run_monte_carlo(p, 3000, 99, std::nullopt, simulator_kind::event_driven, t);
    EXPECT_EQ(one.histogram, many.histogram);
    EXPECT_EQ(one.threshold_used, many.threshold_used);
    EXPECT_EQ(std::memcmp(&one.major_mean, &many.major_mean, sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&one.major_mean_duration, &many.major_mean_duration, sizeof(double)), 0);
  }
}

TEST(MonteCarlo, ExplicitThreshold) {
  const auto s = run_monte_carlo(standard(200, 1, 2.0), 500, 10, std::size_t{1});
  EXPECT_EQ(s.threshold_used, 1u);
  EXPECT_EQ(static_cast<double>(s.histogram[0]) / 500.0, s.minor_fraction);
}

TEST(AutoThreshold, PicksLongestGapBelowHalfMajorMean) {
  std::vector<std::size_t> h(1001, 0);
  h[0] = 50;
  h[1] = 10;
  h[3] = 4;
  h[9] = 1;
  for (std::size_t k = 500; k < 650; ++k) h[k] = 2;
  // gaps in [1, 291]: {2}, {4..8}, {10..291}
  EXPECT_EQ(auto_major_threshold(h, 1000, 0.5828), 10u);
}

TEST(AutoThreshold, FallsBackWithoutGap) {
  std::vector<std::size_t> h(101, 1);
  EXPECT_EQ(auto_major_threshold(h, 100, 0.5), 22u); // ceil(100^(2/3)) = 22
  EXPECT_EQ(auto_major_threshold(h, 1000, 0.0), 100u);
}

TEST(Latency, DoesNotChangeFinalSizeDistribution) {
  auto sir = standard(100, 1, 1.5);
  auto seir = sir;
  seir.latent_period = duration_distribution::exponential(1.0);
  const auto a = simulate_replicates(sir, 100000, 71);
  const auto b = simulate_replicates(seir, 100000, 72);
  EXPECT_GT(two_sample_chi2_pvalue(final_size_histogram(a, 100), final_size_histogram(b, 100)), 0.01);
}

TEST(DurationExperiment, Preconditions) {
  const auto d = duration_distribution::exponential(1.0);
  EXPECT_THROW(duration_scaling_experiment(1.5, d, 1, {1000}, 10, 1), precondition_error);
  EXPECT_THROW(duration_scaling_experiment(0.5, d, 1, {100, 1000}, 10, 1), precondition_error);
}

TEST(DurationExperiment, GrowsWithCommunitySize) {
  const auto res =
      duration_scaling_experiment(2.0, duration_distribution::exponential(1.0), 1, {100, 1000, 10000}, 300, 5);
  ASSERT_EQ(res.points.size(), 3u);
  EXPECT_GT(res.slope, 0.0);
  EXPECT_LT(res.points[0].mean_t, res.points[2].mean_t);
}
