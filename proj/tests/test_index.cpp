#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ruinex/index.hpp"

using namespace ruinex;

namespace {

// Root of p1 v1^s + p2 v2^s = 1 by plain bisection.
double two_atom_root(double v1, double p1, double v2, double p2) {
  double lo = 1e-9, hi = 1.0;
  auto m = [&](double s) { return p1 * std::pow(v1, s) + p2 * std::pow(v2, s); };
  while (m(hi) <= 1.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (m(mid) > 1.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Root of E((lambda Z^2)^s) = 1, Z ~ N(0, 1), from an independent
// scipy quad + brentq run at lambda = 0.5.
constexpr double kArchRoot = 2.3651496649760912;

JointRiskSpec switching_h_spec(double alpha, double beta) {
  return JointRiskSpec::branches({{0.5, {0.0, 1.0}, {10.0, -1.0}, alpha}, {0.5, {0.0, 1.0}, {10.0, -2.0}, beta}});
}

}  // namespace

TEST(AnalyticIndex, Examples) {
  EXPECT_EQ(analytic_index(DistExpr::pareto(2.0)).get(), ExtReal::finite(2.0));
  EXPECT_TRUE(analytic_index(DistExpr::lognormal(0.0, 1.0)).get().is_infinite());
  EXPECT_EQ(analytic_index(DistExpr::max(DistExpr::pareto(2.0), DistExpr::pareto(3.0))).get(), ExtReal::finite(2.0));
  EXPECT_EQ(analytic_index(DistExpr::pareto(2.0)).method, IndexMethod::analytic);
}

TEST(EmpiricalIndex, ParetoBandCoversTruth) {
  for (double gamma : {1.5, 2.0, 3.0}) {
    const auto xs = sample_marginal(DistExpr::pareto(gamma), SeedStream{17, 0}, 100'000);
    for (Estimator e : {Estimator::rank_loglog, Estimator::hill}) {
      EstimatorConfig cfg;
      cfg.estimator = e;
      const IndexValue v = empirical_index(xs, cfg);
      const auto [lo, hi] = v.band();
      EXPECT_LE(lo, ExtReal::finite(gamma)) << to_string(e) << " " << gamma;
      EXPECT_GE(hi, ExtReal::finite(gamma)) << to_string(e) << " " << gamma;
      EXPECT_EQ(v.empirical->k, 1000u);
    }
  }
}

TEST(EmpiricalIndex, ScaleInvariant) {
  auto xs = sample_marginal(DistExpr::pareto(2.0), SeedStream{18, 0}, 50'000);
  const double a = empirical_index(xs).get().value();
  for (double& x : xs) x *= 7.0;
  EXPECT_NEAR(empirical_index(xs).get().value(), a, 1e-9);
}

TEST(EmpiricalIndex, DegeneratePositivePart) {
  const auto xs = sample_marginal(DistExpr::negate(DistExpr::pareto(2.0)), SeedStream{19, 0}, 10'000);
  const IndexValue v = empirical_index(xs);
  EXPECT_TRUE(v.get().is_infinite());
  EXPECT_TRUE(v.degenerate_positive_part);
}

TEST(EmpiricalIndex, BoundedSampleGivesInfinity) {
  const auto xs = sample_marginal(DistExpr::atoms({{1.0, 0.5}, {3.0, 0.5}}), SeedStream{20, 0}, 10'000);
  EXPECT_TRUE(empirical_index(xs).get().is_infinite());
}

TEST(EmpiricalIndex, LognormalIsFlaggedAsUncertain) {
  // Light (index inf) but locally power-like: the band must stay open above.
  const auto xs = sample_marginal(DistExpr::lognormal(0.0, 1.0), SeedStream{21, 0}, 1'000'000);
  const IndexValue v = empirical_index(xs);
  EXPECT_TRUE(v.heavy_uncertainty);
  EXPECT_TRUE(v.band().second.is_infinite());
}

TEST(EmpiricalIndex, ConfigValidation) {
  EstimatorConfig cfg;
  cfg.top_fraction = 0.0;
  const std::vector<double> xs(1000, 1.0);
  EXPECT_THROW(empirical_index(xs, cfg), std::invalid_argument);
}

TEST(ConditionalIndex, EmptyEventThrows) {
  const std::vector<double> xs(100, 1.0);
  EXPECT_THROW(conditional_index(xs, std::vector<bool>(100, false)), std::invalid_argument);
}

TEST(ConditionalIndex, SelectsTheHeavyComponent) {
  const DistExpr m = DistExpr::mixture({{0.5, DistExpr::pareto(2.0)}, {0.5, DistExpr::point_mass(1.0)}});
  const auto xs = sample_marginal(m, SeedStream{22, 0}, 200'000);
  std::vector<bool> mask(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) mask[i] = xs[i] != 1.0;
  const auto [lo, hi] = conditional_index(xs, mask).band();
  EXPECT_LE(lo, ExtReal::finite(2.0));
  EXPECT_GE(hi, ExtReal::finite(2.0));
}

// ---------------------------------------------------------------------------
// Lundberg index

TEST(LundbergIndex, LognormalClosedForm) {
  // E A^s = exp(s mu + s^2 sigma^2 / 2) = 1 at s = -2 mu / sigma^2.
  for (auto [mu, sigma] : {std::pair{-0.25, 0.5}, std::pair{-0.5, 1.0}, std::pair{-0.1, 0.3}}) {
    const double oracle = -2.0 * mu / (sigma * sigma);
    EXPECT_NEAR(lundberg_index(DistExpr::lognormal(mu, sigma)).get().value(), oracle, 1e-7 * oracle);
  }
}

TEST(LundbergIndex, TwoAtoms) {
  const double oracle = two_atom_root(0.5, 0.5, 1.5, 0.5);
  EXPECT_NEAR(lundberg_index(DistExpr::atoms({{0.5, 0.5}, {1.5, 0.5}})).get().value(), oracle, 1e-7 * oracle);
}

TEST(LundbergIndex, NoAtomAboveOneGivesInfinity) {
  EXPECT_TRUE(lundberg_index(DistExpr::atoms({{0.5, 0.5}, {0.9, 0.5}})).get().is_infinite());
}

TEST(LundbergIndex, NoDecayGivesZero) {
  const IndexValue v = lundberg_index(DistExpr::atoms({{0.5, 0.5}, {4.0, 0.5}}));
  EXPECT_EQ(v.get(), ExtReal::finite(0.0));
  EXPECT_FALSE(v.notes.empty());
}

TEST(LundbergIndex, ArchRoot) {
  const DistExpr a = DistExpr::affine(0.5, 0.0, DistExpr::square(DistExpr::normal(0.0, 1.0)));
  EXPECT_NEAR(lundberg_index(a).get().value(), kArchRoot, 1e-6);
}

TEST(LundbergIndex, RejectsNonPositive) {
  EXPECT_THROW(lundberg_index(DistExpr::normal(0.0, 1.0)), std::invalid_argument);
}

TEST(LundbergIndex, PropertyResidualAndBound) {
  std::mt19937_64 g(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const double lo = 0.2 + 0.6 * u(g), hi = 1.1 + 2.0 * u(g), p = 0.55 + 0.4 * u(g);
    const DistExpr a = i % 2 ? DistExpr::atoms({{lo, p}, {hi, 1.0 - p}})
                             : DistExpr::lognormal(-0.1 - u(g), 0.2 + u(g));
    const IndexValue v = lundberg_index(a);
    const ExtReal s = v.get();
    EXPECT_LE(s, upper_tail_index(a));
    if (s.is_finite() && s.value() > 0.0) {
      EXPECT_NEAR(analytic_fractional_moment(a, s.value()).value.value(), 1.0, 1e-6);
    }
  }
}

TEST(LundbergIndex, MonteCarloWithSampleSizeWarning) {
  const auto xs = sample_marginal(DistExpr::lognormal(-0.25, 0.5), SeedStream{23, 0}, 1'000);
  const IndexValue v = lundberg_index_mc(xs, ExtReal::finite(2.2));
  EXPECT_EQ(v.method, IndexMethod::empirical);
  EXPECT_FALSE(v.notes.empty());
  const auto big = sample_marginal(DistExpr::lognormal(-0.25, 0.5), SeedStream{24, 0}, 1'000'000);
  EXPECT_NEAR(lundberg_index_mc(big).get().value(), 2.0, 0.15);
}

// ---------------------------------------------------------------------------
// h-function

TEST(HFunction, PiecewiseConstantWithJumps) {
  const auto s = switching_h_spec(3.0, 1.5);
  EXPECT_TRUE(h_function(s, 0.5).get().is_infinite());
  EXPECT_TRUE(h_function(s, 1.0).get().is_infinite());
  EXPECT_EQ(h_function(s, 1.5).get(), ExtReal::finite(3.0));
  EXPECT_EQ(h_function(s, 2.0).get(), ExtReal::finite(3.0));
  EXPECT_EQ(h_function(s, 2.5).get(), ExtReal::finite(1.5));
  const auto bp = h_breakpoints(s);
  EXPECT_EQ(bp.size(), 2u);
  EXPECT_TRUE(h_left_limit(s, ExtReal::finite(1.0)).get().is_infinite());
  EXPECT_EQ(h_left_limit(s, ExtReal::finite(2.5)).get(), ExtReal::finite(1.5));
}

TEST(HFunction, IndependentPair) {
  const auto s = JointRiskSpec::indep(DistExpr::pareto(3.0), DistExpr::pareto(2.0));
  EXPECT_EQ(h_function(s, 0.0).get(), ExtReal::finite(2.0));
  EXPECT_EQ(h_function(s, 5.0).get(), ExtReal::finite(2.0));
}

TEST(HFunction, PropertyMonotoneOnGrid) {
  std::mt19937_64 g(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const auto s = JointRiskSpec::branches({{0.5, {0.0, 0.5 + u(g)}, {5.0 * u(g), -3.0 * u(g)}, 1.0 + 3.0 * u(g)},
                                            {0.5, {0.0, 0.5 + u(g)}, {5.0 * u(g), -3.0 * u(g)}, 1.0 + 3.0 * u(g)}});
    ExtReal prev = ExtReal::infinity();
    for (double c = 0.0; c <= 10.0; c += 0.125) {
      const ExtReal h = h_function(s, c).get();
      EXPECT_LE(h, prev) << "c = " << c;
      prev = h;
    }
  }
}

TEST(HFunction, EmpiricalTracksAnalyticAwayFromJumps) {
  const auto s = switching_h_spec(3.0, 1.5);
  const auto [lo, hi] = h_function_empirical(s, 3.0, SeedStream{25, 0}, 200'000).band();
  EXPECT_LE(lo, ExtReal::finite(1.5));
  EXPECT_GE(hi, ExtReal::finite(1.5));
}
