#include <gtest/gtest.h>

#include "ruinex/laws.hpp"

using namespace ruinex;

TEST(Laws, NamesRoundTrip) {
  for (const auto& [id, name] : law_names()) {
    ASSERT_TRUE(parse_law_id(name).has_value()) << name;
    EXPECT_EQ(*parse_law_id(name), id);
    EXPECT_STREQ(to_string(id), name);
  }
  EXPECT_FALSE(parse_law_id("maximum").has_value());
}

TEST(Laws, MaxRuleOfTwoParetos) {
  LawOperands op;
  op.x = DistExpr::pareto(2.0);
  op.y = DistExpr::pareto(3.0);
  const LawReport a = check_law(LawId::max_rule, op, LawMode::analytic);
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.lhs, ExtReal::finite(2.0));
  EXPECT_EQ(a.rhs, ExtReal::finite(2.0));
  LawCheckOptions opt;
  opt.stream = SeedStream{81, 0};
  EXPECT_TRUE(check_law(LawId::max_rule, op, LawMode::empirical, opt).pass);
}

TEST(Laws, AffineMapKeepsIndex) {
  LawOperands op;
  op.x = DistExpr::pareto(2.5);
  op.scale = 7.0;
  op.shift = -4.0;
  const LawReport a = check_law(LawId::affine, op, LawMode::analytic);
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.lhs, ExtReal::finite(2.5));
  LawCheckOptions opt;
  opt.stream = SeedStream{82, 0};
  EXPECT_TRUE(check_law(LawId::affine, op, LawMode::empirical, opt).pass);
}

TEST(Laws, LundbergBelowMomentIndex) {
  LawOperands op;
  op.x = DistExpr::lognormal(-0.5, 1.0);
  const LawReport a = check_law(LawId::lundberg_le, op, LawMode::analytic);
  EXPECT_TRUE(a.pass);
  EXPECT_NEAR(a.lhs.value(), 1.0, 1e-7);
  EXPECT_TRUE(a.rhs.is_infinite());
}

TEST(Laws, PowerDividesIndex) {
  LawOperands op;
  op.x = DistExpr::pareto(3.0);
  op.exponent = 1.5;
  const LawReport a = check_law(LawId::power, op, LawMode::analytic);
  EXPECT_TRUE(a.pass);
  EXPECT_NEAR(a.lhs.value(), 2.0, 1e-12);
}

TEST(Laws, DependentSumMayBeHeavierThanParts) {
  // A + B constant on each branch is lighter than either part: the
  // inequality holds, and it is not an equality.
  LawOperands op;
  op.spec = JointRiskSpec::branches({{0.5, {0.0, 1.0}, {10.0, -1.0}, 2.0}, {0.5, {0.0, 1.0}, {10.0, -1.0}, 3.0}});
  const LawReport a = check_law(LawId::sum_ineq, op, LawMode::analytic);
  EXPECT_TRUE(a.pass);
  EXPECT_TRUE(a.lhs.is_infinite());
  EXPECT_EQ(a.rhs, ExtReal::finite(2.0));
}

TEST(Laws, InexpressibleOperandsThrow) {
  LawOperands none;
  EXPECT_THROW(check_law(LawId::affine, none, LawMode::analytic), InexpressibleOperand);
  EXPECT_THROW(check_law(LawId::ybar_bound, none, LawMode::analytic), InexpressibleOperand);
  LawOperands neg;
  neg.x = DistExpr::normal(0.0, 1.0);
  neg.y = DistExpr::pareto(2.0);
  EXPECT_THROW(check_law(LawId::sum_nonneg, neg, LawMode::analytic), InexpressibleOperand);
  LawOperands bad_scale;
  bad_scale.x = DistExpr::pareto(2.0);
  bad_scale.scale = -1.0;
  EXPECT_THROW(check_law(LawId::affine, bad_scale, LawMode::analytic), InexpressibleOperand);
}

TEST(Laws, CaseJsonRoundTrip) {
  for (const LawCase& c : random_law_corpus(83, 40)) {
    const json j = to_json(c);
    EXPECT_EQ(to_json(law_case_from_json(j)), j);
  }
}

TEST(Laws, CorpusCoversEveryLaw) {
  const auto corpus = random_law_corpus(84, 55);
  ASSERT_EQ(corpus.size(), 55u);
  for (const auto& [id, name] : law_names()) {
    EXPECT_TRUE(std::any_of(corpus.begin(), corpus.end(), [&](const LawCase& c) { return c.law == id; })) << name;
  }
}

TEST(Laws, PropertyAnalyticCorpusPasses) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const LawCase& c : random_law_corpus(seed, 55)) {
      const LawReport r = check_law(c.law, c.operands, LawMode::analytic);
      EXPECT_TRUE(r.pass) << to_json(c).dump();
    }
  }
}
