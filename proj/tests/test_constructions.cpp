#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ruinex/constructions.hpp"

using namespace ruinex;

namespace {

double atom_moment(const DistExpr& a, double s) {
  const auto& at = std::get<node::Atoms>(a.node().v);
  double m = 0.0;
  for (std::size_t i = 0; i < at.values.size(); ++i) m += at.probs[i] * std::pow(at.values[i], s);
  return m;
}

}  // namespace

TEST(MinorantA, HitsTargetIndexWithDomination) {
  const DistExpr a = DistExpr::atoms({{0.5, 0.5}, {1.5, 0.3}, {2.5, 0.2}});
  const MinorantSpec m = minorant_A(a, 0.5);
  ASSERT_TRUE(m.ok) << m.diagnostic;
  EXPECT_TRUE(m.dominated);
  EXPECT_NEAR(atom_moment(m.constructed, m.target), 1.0, 1e-12);
  EXPECT_NEAR(m.moment_at_target, 1.0, 1e-8);
  EXPECT_NEAR(m.achieved->value(), m.target, 1e-7);
  for (const auto& [orig, mapped] : m.atom_map) {
    EXPECT_LE(mapped, orig);
    EXPECT_GT(mapped, 0.0);
  }
}

TEST(MinorantA, PropertyRandomAtomLaws) {
  std::mt19937_64 g(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int built = 0;
  for (int i = 0; i < 200; ++i) {
    const double v1 = 0.1 + 0.8 * u(g), v2 = 1.05 + 2.0 * u(g), v3 = v2 + 0.1 + 2.0 * u(g);
    const double p1 = 0.5 + 0.4 * u(g), p2 = (1.0 - p1) * u(g);
    const DistExpr a = DistExpr::atoms({{v1, p1}, {v2, p2}, {v3, 1.0 - p1 - p2}});
    if (!(expected_log(a) < 0.0)) continue;
    const MinorantSpec m = minorant_A(a, 0.05 + u(g));
    if (!m.ok) continue;
    ++built;
    EXPECT_NEAR(m.moment_at_target, 1.0, 1e-8);
    EXPECT_TRUE(m.dominated);
    EXPECT_GE(m.achieved->value(), lundberg_index(a).get().value());
  }
  EXPECT_GT(built, 100);
}

TEST(MinorantA, Diagnostics) {
  EXPECT_FALSE(minorant_A(DistExpr::lognormal(-0.25, 0.5), 0.5).ok);
  EXPECT_FALSE(minorant_A(DistExpr::atoms({{0.5, 0.5}, {0.9, 0.5}}), 0.5).ok);
  EXPECT_FALSE(minorant_A(DistExpr::atoms({{0.5, 0.5}, {1.5, 0.5}}), -1.0).ok);
}

TEST(MinorantB, IndexIsExactlyBeta) {
  for (auto [gamma, beta] : {std::pair{2.0, 5.0}, std::pair{1.5, 4.0}, std::pair{3.0, 3.5}}) {
    const MinorantSpec m = minorant_B(DistExpr::pareto(gamma), beta);
    ASSERT_TRUE(m.ok);
    EXPECT_EQ(*m.achieved, ExtReal::finite(beta));
    EXPECT_EQ(m.pareto_gamma, beta - gamma);
  }
  EXPECT_THROW(minorant_B(DistExpr::pareto(2.0), 1.5), std::invalid_argument);
  EXPECT_THROW(minorant_B(DistExpr::lognormal(0.0, 1.0), 3.0), std::invalid_argument);
}

TEST(Coupling, ASideHasNoViolations) {
  const DistExpr a = DistExpr::atoms({{0.5, 0.5}, {1.5, 0.3}, {2.5, 0.2}});
  const auto spec = JointRiskSpec::indep(a, DistExpr::affine(1.0, -1.5, DistExpr::pareto(2.0)));
  const MinorantSpec m = minorant_A(a, 0.5);
  const CouplingReport r = coupled_ruin_monotonicity(spec, m, 20'000, 5.0, SeedStream{62, 0}, 500, 1);
  EXPECT_EQ(r.paths, 20'000u);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.domination_failures, 0u);
  EXPECT_LE(r.ruined_star, r.ruined);
  EXPECT_GT(r.ruined, 0u);
}

TEST(Coupling, BSideHasNoViolations) {
  const auto spec = JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(2.0));
  const MinorantSpec m = minorant_B(DistExpr::pareto(2.0), 5.0);
  const CouplingReport r = coupled_ruin_monotonicity(spec, m, 20'000, 5.0, SeedStream{63, 0}, 500, 1);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LE(r.ruined_star, r.ruined);
  EXPECT_LT(r.identical, r.paths);
}

TEST(Coupling, ASideRequiresMatchingSpec) {
  const DistExpr a = DistExpr::atoms({{0.5, 0.5}, {1.5, 0.3}, {2.5, 0.2}});
  const MinorantSpec m = minorant_A(a, 0.5);
  const auto other = JointRiskSpec::indep(DistExpr::lognormal(-0.25, 0.5), DistExpr::pareto(2.0));
  EXPECT_THROW(coupled_ruin_monotonicity(other, m, 10, 1.0, SeedStream{64, 0}), std::invalid_argument);
}
