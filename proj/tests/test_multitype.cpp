#include <gtest/gtest.h>

#include <random>

#include "episim/asymp.hpp"
#include "episim/multitype.hpp"
#include "episim/sim.hpp"
#include "support/oracles.hpp"

using namespace episim;

namespace {

multitype_params symmetric_two_type() {
  multitype_params p;
  p.pi = {0.5, 0.5};
  p.lambda = {{2.0, 1.0}, {1.0, 2.0}};
  p.periods = {duration_distribution::exponential(1.0), duration_distribution::exponential(1.0)};
  return p;
}

multitype_params scalar(double lambda) {
  multitype_params p;
  p.pi = {1.0};
  p.lambda = {{lambda}};
  p.periods = {duration_distribution::exponential(1.0)};
  return p;
}

} // namespace

TEST(OffspringMatrix, Values) {
  const auto m = mean_offspring_matrix(symmetric_two_type());
  EXPECT_DOUBLE_EQ(m[0][0], 1.0);
  EXPECT_DOUBLE_EQ(m[0][1], 0.5);
  EXPECT_DOUBLE_EQ(m[1][0], 0.5);
  EXPECT_DOUBLE_EQ(m[1][1], 1.0);
  const auto s = mean_offspring_matrix(scalar(1.5));
  EXPECT_DOUBLE_EQ(s[0][0], 1.5);
}

TEST(OffspringMatrix, UsesPeriodMeans) {
  auto p = symmetric_two_type();
  p.periods[1] = duration_distribution::constant(3.0);
  const auto m = mean_offspring_matrix(p);
  EXPECT_DOUBLE_EQ(m[1][0], 1.5);
  EXPECT_DOUBLE_EQ(m[1][1], 3.0);
  EXPECT_DOUBLE_EQ(m[0][1], 0.5);
}

TEST(OffspringMatrix, InvalidParams) {
  auto p = symmetric_two_type();
  p.pi = {0.5, 0.6};
  EXPECT_THROW(mean_offspring_matrix(p), precondition_error);
  p = symmetric_two_type();
  p.lambda[0][1] = -1.0;
  EXPECT_THROW(mean_offspring_matrix(p), precondition_error);
}

TEST(R0Multitype, Values) {
  const auto r = r0_multitype(symmetric_two_type());
  EXPECT_NEAR(r.r0, 1.5, 1e-9);
  EXPECT_FALSE(r.reducible);
  ASSERT_TRUE(r.charpoly_r0.has_value());
  EXPECT_NEAR(*r.charpoly_r0, 1.5, 1e-12);
  EXPECT_NEAR(r0_multitype(scalar(1.5)).r0, 1.5, 1e-12);
  EXPECT_NEAR(dominant_eigenvalue(separable_matrix({1, 2}, {1, 1}, {0.5, 0.5})).r0, 1.5, 1e-9);
}

TEST(R0Multitype, PeriodicAndReducibleMatrices) {
  const auto periodic = dominant_eigenvalue({{0.0, 2.0}, {0.5, 0.0}});
  EXPECT_NEAR(periodic.r0, 1.0, 1e-9);
  EXPECT_FALSE(periodic.reducible);
  const auto blocks = dominant_eigenvalue({{1.2, 0.0}, {0.0, 0.7}});
  EXPECT_NEAR(blocks.r0, 1.2, 1e-9);
  EXPECT_TRUE(blocks.reducible);
  EXPECT_TRUE(is_irreducible({{0.0, 1.0}, {1.0, 0.0}}));
  EXPECT_FALSE(is_irreducible({{1.0, 1.0}, {0.0, 1.0}}));
}

TEST(R0Multitype, AgreesWithCharacteristicPolynomialOnRandomMatrices) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = 2 + static_cast<std::size_t>(rep % 2);
    matrix m(k, std::vector<double>(k));
    for (auto& row : m)
      for (double& x : row) x = u(gen);
    const auto r = dominant_eigenvalue(m);
    ASSERT_TRUE(r.charpoly_r0.has_value());
    EXPECT_NEAR(r.r0, *r.charpoly_r0, 1e-8 * std::max(1.0, r.r0));
  }
}

TEST(R0Multitype, NonConvergenceIsReported) {
  EXPECT_THROW(dominant_eigenvalue({{1.0, 1.0}, {0.0, 1.0}}, 1e-10, 10), convergence_error);
}

TEST(R0Multitype, InvariantUnderTypePermutation) {
  multitype_params p;
  p.pi = {0.2, 0.3, 0.5};
  p.lambda = {{1.0, 0.4, 2.0}, {0.3, 1.5, 0.2}, {0.9, 0.1, 1.1}};
  p.periods = {duration_distribution::exponential(1.0), duration_distribution::constant(2.0),
               duration_distribution::gamma(2.0, 1.0)};
  const std::vector<std::size_t> perm{2, 0, 1};
  multitype_params q;
  q.lambda.assign(3, std::vector<double>(3));
  for (std::size_t a = 0; a < 3; ++a) {
    q.pi.push_back(p.pi[perm[a]]);
    q.periods.push_back(p.periods[perm[a]]);
    for (std::size_t b = 0; b < 3; ++b) q.lambda[a][b] = p.lambda[perm[a]][perm[b]];
  }
  EXPECT_NEAR(r0_multitype(p).r0, r0_multitype(q).r0, 1e-9);
}

TEST(R0Separable, Values) {
  EXPECT_DOUBLE_EQ(r0_separable({1}, {1}, {1}), 1.0);
  EXPECT_DOUBLE_EQ(r0_separable({1, 2}, {1, 1}, {0.5, 0.5}), 1.5);
  EXPECT_THROW(r0_separable({1, 2}, {1}, {0.5, 0.5}), std::invalid_argument);
}

TEST(R0Separable, EqualsPerronRootOnRandomInstances) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 1 + static_cast<std::size_t>(rep % 5);
    std::vector<double> alpha(k), beta(k), pi(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      alpha[i] = u(gen);
      beta[i] = u(gen);
      pi[i] = u(gen);
      total += pi[i];
    }
    for (double& x : pi) x /= total;
    EXPECT_NEAR(r0_separable(alpha, beta, pi), dominant_eigenvalue(separable_matrix(alpha, beta, pi)).r0, 1e-9);
  }
}

TEST(TypeCounts, LargestRemainder) {
  EXPECT_EQ(type_counts(10, {0.5, 0.5}), (std::vector<std::size_t>{5, 5}));
  EXPECT_EQ(type_counts(10, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(type_counts(7, {0.15, 0.85}), (std::vector<std::size_t>{1, 6}));
  const auto c = type_counts(1001, {0.123, 0.456, 0.421});
  EXPECT_EQ(c[0] + c[1] + c[2], 1001u);
}

TEST(SimulateMultitype, NoContactsNoSpread) {
  auto p = symmetric_two_type();
  p.lambda = {{0.0, 0.0}, {0.0, 0.0}};
  stream rng(1, 0);
  const auto r = simulate_multitype(p, 100, {3, 2}, rng);
  EXPECT_EQ(r.total, 0u);
  EXPECT_EQ(r.final_by_type, (std::vector<std::size_t>{0, 0}));
}

TEST(SimulateMultitype, Preconditions) {
  auto p = symmetric_two_type();
  stream rng(1, 0);
  EXPECT_THROW(simulate_multitype(p, 100, {0, 0}, rng), precondition_error);
  EXPECT_THROW(simulate_multitype(p, 100, {1}, rng), precondition_error);
  EXPECT_THROW(simulate_multitype(p, 10, {6, 0}, rng), precondition_error);
}

TEST(SimulateMultitype, SingleTypeReducesToStandardModel) {
  epidemic_params sp;
  sp.n = 100;
  sp.lambda = 1.5;
  const std::size_t reps = 100000;
  const auto a = simulate_replicates(sp, reps, 31);
  const auto b = simulate_multitype_replicates(scalar(1.5), 100, {1}, reps, 32);
  std::vector<std::size_t> ha(100, 0), hb(100, 0);
  for (const auto& r : a) ++ha[r.final_size];
  for (const auto& r : b) ++hb[r.total];
  EXPECT_GT(episim::testing::two_sample_chi2_pvalue(ha, hb), 0.01);
}

TEST(SimulateMultitype, SymmetricCaseMatchesScalarOutbreakProbability) {
  const auto runs = simulate_multitype_replicates(symmetric_two_type(), 2000, {1, 0}, 4000, 55);
  std::size_t major = 0;
  for (const auto& r : runs) major += r.total >= 200;
  const double q = extinction_probability(1.5, duration_distribution::exponential(1.0), 1).q;
  const double p_major = static_cast<double>(major) / 4000.0;
  EXPECT_NEAR(p_major, 1.0 - q, 4.0 * std::sqrt(q * (1 - q) / 4000.0));
}

TEST(SimulateMultitype, ThresholdBehaviour) {
  auto sub = symmetric_two_type();
  sub.lambda = {{1.2, 0.6}, {0.6, 1.2}};
  ASSERT_LE(r0_multitype(sub).r0, 0.9 + 1e-12);
  auto super = symmetric_two_type();
  super.lambda = {{2.0, 0.8}, {0.8, 2.0}};
  ASSERT_GE(r0_multitype(super).r0, 1.3);
  auto fraction = [](const multitype_params& p, std::uint64_t seed) {
    const auto runs = simulate_multitype_replicates(p, 2000, {1, 0}, 2000, seed);
    std::size_t major = 0;
    for (const auto& r : runs) major += r.total >= 200;
    return static_cast<double>(major) / 2000.0;
  };
  EXPECT_LT(fraction(sub, 1), 0.02);
  EXPECT_GT(fraction(super, 2), 0.2);
}

TEST(SimulateMultitype, PermutedLabelsPermuteOutputs) {
  multitype_params p;
  p.pi = {0.3, 0.7};
  p.lambda = {{2.5, 0.5}, {1.0, 1.2}};
  p.periods = {duration_distribution::exponential(1.0), duration_distribution::exponential(1.0)};
  multitype_params q;
  q.pi = {0.7, 0.3};
  q.lambda = {{1.2, 1.0}, {0.5, 2.5}};
  q.periods = p.periods;
  const std::size_t reps = 20000;
  const auto a = simulate_multitype_replicates(p, 200, {1, 0}, reps, 3);
  const auto b = simulate_multitype_replicates(q, 200, {0, 1}, reps, 4);
  std::vector<std::size_t> ha(61, 0), hb(61, 0);
  for (const auto& r : a) ++ha[r.final_by_type[0]];
  for (const auto& r : b) ++hb[r.final_by_type[1]];
  EXPECT_GT(episim::testing::two_sample_chi2_pvalue(ha, hb), 0.01);
}

TEST(SimulateMultitype, DeterministicAcrossThreadCounts) {
  const auto a = simulate_multitype_replicates(symmetric_two_type(), 300, {1, 1}, 600, 99, 1);
  const auto b = simulate_multitype_replicates(symmetric_two_type(), 300, {1, 1}, 600, 99, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].final_by_type, b[i].final_by_type);
    EXPECT_EQ(a[i].extinction_time, b[i].extinction_time);
  }
}
