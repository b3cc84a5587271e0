#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ruinex/asymptotics.hpp"

using namespace ruinex;

namespace {

RuinEstimate power_law(double c, double slope, const std::vector<double>& grid) {
  RuinEstimate e;
  for (double u : grid) {
    RuinRow r;
    r.u0 = u;
    r.n_paths = 1'000'000;
    r.p_hat = c * std::pow(u, slope);
    r.ci_lo = 0.5 * r.p_hat;
    r.ci_hi = 2.0 * r.p_hat;
    e.rows.push_back(r);
  }
  return e;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

JointRiskSpec switching_spec(double n, double alpha) {
  return JointRiskSpec::branches(
      {{0.5, {1.0, 0.0}, {1.0, 0.0}, std::nullopt}, {0.5, {0.0, 1.0}, {0.0, -n}, alpha}});
}

}  // namespace

TEST(PredictedExponent, MinimumOfTheTwoIndices) {
  const auto a_dom = predicted_ultimate_exponent(
      JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(5.0)));
  EXPECT_NEAR(a_dom.value.value(), 2.0, 1e-7);
  EXPECT_EQ(a_dom.attained_by, "I1(A)");
  const auto b_dom = predicted_ultimate_exponent(
      JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(1.5)));
  EXPECT_EQ(b_dom.value, ExtReal::finite(1.5));
  EXPECT_EQ(b_dom.attained_by, "I(B)");
}

TEST(PredictedExponent, RefusesBoundedAndInvalid) {
  EXPECT_THROW(predicted_ultimate_exponent(JointRiskSpec::indep(DistExpr::point_mass(0.5), DistExpr::point_mass(1.0))),
               Refusal);
  EXPECT_THROW(predicted_ultimate_exponent(JointRiskSpec::indep(DistExpr::normal(0.0, 1.0), DistExpr::pareto(2.0))),
               Refusal);
}

TEST(SlopeFit, ExactPowerLaw) {
  const RuinEstimate e = power_law(3.0, -2.0, {10.0, 100.0, 1000.0, 10000.0});
  const SlopeFit f = slope_fit(e);
  EXPECT_NEAR(f.slope, -2.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log10(3.0), 1e-12);
  EXPECT_NEAR(f.std_error, 0.0, 1e-12);
  EXPECT_EQ(f.points, 4u);
}

TEST(SlopeFit, DropsZeroRowsAndNeedsFourPoints) {
  RuinEstimate e = power_law(1.0, -1.0, {1.0, 2.0, 4.0, 8.0, 16.0});
  e.rows.back().p_hat = 0.0;
  e.rows.back().ci_lo = 0.0;
  const SlopeFit f = slope_fit(e);
  EXPECT_EQ(f.dropped_u0, std::vector<double>{16.0});
  e.rows[3].ci_lo = 0.0;
  EXPECT_THROW(slope_fit(e), InsufficientPoints);
}

TEST(PlotData, FitColumnMatchesExactPowerLaw) {
  const RuinEstimate e = power_law(1.0, -2.0, {1.0, 10.0, 100.0, 1000.0});
  std::ostringstream os;
  emit_plot_data(os, e, slope_fit(e));
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "log10_u0,log10_p_hat,log10_ci_lo,log10_ci_hi,fit_value");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto c = split(line);
    ASSERT_EQ(c.size(), 5u);
    EXPECT_NEAR(std::stod(c[4]), std::stod(c[1]), 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST(PlotData, ZeroProbabilityLeavesEmptyCells) {
  RuinEstimate e = power_law(1.0, -2.0, {1.0, 10.0});
  e.rows[1].p_hat = e.rows[1].ci_lo = 0.0;
  std::ostringstream os;
  emit_plot_data(os, e, std::nullopt);
  const std::string text = os.str();
  EXPECT_EQ(text.find("inf"), std::string::npos);
  const auto last = split(text.substr(text.rfind('\n', text.size() - 2) + 1, std::string::npos));
  ASSERT_GE(last.size(), 3u);
  EXPECT_EQ(last[0], "1");
  EXPECT_TRUE(last[1].empty());
  EXPECT_TRUE(last[2].empty());
}

TEST(VerifyUltimate, SmallRunIsConsistent) {
  PathConfig c;
  c.n_paths = 200'000;
  c.base = SeedStream{71, 0};
  c.u0_grid = {3.0, 10.0, 30.0, 100.0};
  const auto r = verify_ultimate(JointRiskSpec::indep(DistExpr::lognormal(-0.5, 0.5), DistExpr::pareto(1.5)), c, 0.3);
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_EQ(r.verdict, Verdict::consistent) << r.fit->slope;
  EXPECT_EQ(r.censoring_fraction, 0.0);
  EXPECT_FALSE(r.spec_digest.empty());
}

TEST(FiniteBand, FirstStepIsIndexOfB) {
  const auto s = JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(2.0));
  const FiniteBand b = finite_horizon_band(s, 1);
  EXPECT_EQ(b.lo, ExtReal::finite(2.0));
  EXPECT_EQ(b.hi, ExtReal::finite(2.0));
  const FiniteBand b5 = finite_horizon_band(s, 5);
  EXPECT_TRUE(b5.y_prev.is_infinite());
  EXPECT_EQ(b5.lo, ExtReal::finite(2.0));
}

TEST(FiniteBand, SwitchingSpec) {
  // y_3 = 3: B + 3A is constant on both branches.
  const auto s = switching_spec(3.0, 2.0);
  const FiniteBand b4 = finite_horizon_band(s, 4);
  EXPECT_EQ(b4.y_prev, ExtReal::finite(3.0));
  EXPECT_TRUE(b4.lo.is_infinite());
  const FiniteBand b5 = finite_horizon_band(s, 5);
  EXPECT_EQ(b5.lo, ExtReal::finite(2.0));
  EXPECT_EQ(b5.hi, ExtReal::finite(2.0));
}

TEST(FiniteBand, SimulatedIndexMeetsBand) {
  const auto s = JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(3.0));
  const FiniteHorizonCheck c = finite_horizon_check(s, 2, 200'000, SeedStream{72, 0});
  EXPECT_TRUE(c.within) << c.empirical.get().value();
}

TEST(LundbergEquivalence, SmallSample) {
  const auto r = lundberg_equivalence_check(DistExpr::lognormal(-0.5, 1.0), 100'000, SeedStream{73, 0});
  EXPECT_NEAR(r.lundberg.value(), 1.0, 1e-7);
  EXPECT_NEAR(r.z_bar.get().value(), 1.0, 0.3);
  EXPECT_NEAR(r.z_inf.get().value(), 1.0, 0.3);
  EXPECT_EQ(r.censored, 0u);
  EXPECT_THROW(lundberg_equivalence_check(DistExpr::lognormal(0.5, 1.0), 10, SeedStream{73, 0}), Refusal);
}

TEST(LundbergEquivalence, PathwiseIdentityWithUnitClaims) {
  // With B = 1 the perpetuity is 1 + sum_k Z_1...Z_k on the same draws.
  const DistExpr z = DistExpr::atoms({{0.25, 0.5}, {1.5, 0.5}});
  const auto spec = JointRiskSpec::indep(z, DistExpr::point_mass(1.0));
  Rng r1(SeedStream{74, 0}), r2(SeedStream{74, 0});
  for (int i = 0; i < 1000; ++i) {
    const PerpetuitySample p = perpetuity_draw(spec, r1, TruncatedUltimate{});
    double prod = 1.0, sum = 0.0;
    for (std::size_t k = 0; k < p.steps; ++k) {
      const RiskPair ab = draw_joint(spec, r2);
      prod *= ab.a;
      if (k + 1 < p.steps) sum += prod;
    }
    EXPECT_NEAR(p.y_inf, 1.0 + sum, 1e-9 * (1.0 + sum));
  }
}
