#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ruinex/esssup.hpp"
#include "ruinex/process.hpp"

using namespace ruinex;

namespace {

JointRiskSpec switching_spec(double n, double alpha) {
  return JointRiskSpec::branches(
      {{0.5, {1.0, 0.0}, {1.0, 0.0}, std::nullopt}, {0.5, {0.0, 1.0}, {0.0, -n}, alpha}});
}

JointRiskSpec constant_spec(double a, double b) {
  return JointRiskSpec::indep(DistExpr::point_mass(a), DistExpr::point_mass(b));
}

}  // namespace

TEST(Esssup, SwitchingSpecBecomesInfinite) {
  const EsssupReport r = esssup_sequence(switching_spec(3.0, 2.0), 10);
  ASSERT_EQ(r.sequence.size(), 6u);
  for (int k = 1; k <= 4; ++k) EXPECT_EQ(r.sequence[k], ExtReal::finite(k));
  EXPECT_TRUE(r.sequence[5].is_infinite());
  EXPECT_EQ(r.first_infinite, 5u);
  EXPECT_FALSE(r.verdict.bounded);
  EXPECT_FALSE(r.finite_but_diverging);
}

TEST(Esssup, GeometricSequenceAndWitness) {
  const EsssupReport r = esssup_sequence(constant_spec(0.5, 1.0), 30);
  ASSERT_EQ(r.sequence.size(), 31u);
  for (std::size_t k = 0; k <= 30; ++k) {
    EXPECT_EQ(r.sequence[k], ExtReal::finite(2.0 * (1.0 - std::ldexp(1.0, -static_cast<int>(k)))));
  }
  ASSERT_TRUE(r.verdict.bounded);
  EXPECT_EQ(*r.verdict.witness, 2.0);
  EXPECT_FALSE(r.within_hypotheses);
}

TEST(Esssup, FiniteButDivergingAndOverflow) {
  const EsssupReport r = esssup_sequence(constant_spec(2.0, 1.0), 20);
  EXPECT_FALSE(r.verdict.bounded);
  EXPECT_TRUE(r.finite_but_diverging);
  EXPECT_EQ(r.sequence[20], ExtReal::finite(std::ldexp(1.0, 20) - 1.0));
  const EsssupReport big = esssup_sequence(constant_spec(2.0, 1.0), 5000);
  ASSERT_TRUE(big.overflow_at.has_value());
  EXPECT_GT(*big.overflow_at, 1000u);
}

TEST(Esssup, UnboundedDriverIsUnbounded) {
  const auto s = JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(2.0));
  const EsssupReport r = esssup_sequence(s, 3);
  EXPECT_TRUE(r.sequence[1].is_infinite());
  EXPECT_FALSE(r.verdict.bounded);
}

TEST(Esssup, InvalidSpecThrows) {
  EXPECT_THROW(esssup_sequence(constant_spec(0.5, -1.0), 3), std::invalid_argument);
}

TEST(Esssup, ArchWithBoundedInnovation) {
  // Z uniform on two atoms +-1: A = lambda, B = beta, so y_k -> beta / (1 - lambda).
  const auto s = JointRiskSpec::arch(0.5, 1.0, DistExpr::atoms({{-1.0, 0.5}, {1.0, 0.5}}));
  const BoundednessVerdict v = boundedness_check(s);
  ASSERT_TRUE(v.bounded);
  EXPECT_DOUBLE_EQ(*v.witness, 2.0);
}

TEST(Esssup, PropertyMonotoneAndBelowWitness) {
  std::mt19937_64 g(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double lo = 0.1 + 0.8 * u(g), hi = lo + 0.05 + 0.8 * u(g);
    const auto s = JointRiskSpec::indep(DistExpr::atoms({{lo, 0.5}, {hi, 0.5}}),
                                        DistExpr::atoms({{-1.0, 0.5}, {0.1 + 2.0 * u(g), 0.5}}));
    const EsssupReport r = esssup_sequence(s, 60);
    for (std::size_t k = 1; k < r.sequence.size(); ++k) EXPECT_LE(r.sequence[k - 1], r.sequence[k]);
    if (r.verdict.bounded) {
      for (const auto& y : r.sequence) EXPECT_LE(y.value(), *r.verdict.witness * (1.0 + 1e-12));
    } else {
      EXPECT_GE(hi, 1.0);
    }
  }
}

TEST(Esssup, SimulatedRunningMaxStaysBelow) {
  const auto s = JointRiskSpec::indep(DistExpr::atoms({{0.5, 0.5}, {0.9, 0.5}}),
                                      DistExpr::atoms({{-1.0, 0.5}, {1.0, 0.5}}));
  const EsssupReport r = esssup_sequence(s, 4);
  const auto ys = sample_running_max(s, SeedStream{52, 0}, 4, 20'000);
  const double top = *std::max_element(ys.begin(), ys.end());
  EXPECT_LE(top, r.sequence[4].value() + 1e-12);
  // Every branch combination has probability 1/256, so the bound is attained.
  EXPECT_NEAR(top, r.sequence[4].value(), 1e-12);
}
