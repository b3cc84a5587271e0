#pragma once

// Joint law of one (A, B) vector.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ruinex/dist_expr.hpp"
#include "ruinex/rng.hpp"

namespace ruinex {

/// A and B drawn independently.
struct IndepProduct {
  DistExpr a;
  DistExpr b;
};

/// constant + slope * w
struct AffineCoef {
  double constant = 0.0;
  double slope = 0.0;

  [[nodiscard]] double at(double w) const { return constant + slope * w; }
  friend bool operator==(const AffineCoef&, const AffineCoef&) = default;
};

/// Within the branch, A = a.at(W) and B = b.at(W) for one shared driver W,
/// which is the unit point mass (gamma empty) or Pareto(gamma).
struct Branch {
  double prob = 1.0;
  AffineCoef a;
  AffineCoef b;
  std::optional<double> gamma;

  [[nodiscard]] bool unit_driver() const { return !gamma.has_value(); }
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct BranchMixture {
  std::vector<Branch> branches;
  std::vector<double> cdf;
};

/// (A, B) = (lambda Z^2, beta Z^2).
struct ArchCoupling {
  double lambda;
  double beta;
  DistExpr z;
};

class JointRiskSpec {
 public:
  using Variant = std::variant<IndepProduct, BranchMixture, ArchCoupling>;

  static JointRiskSpec indep(DistExpr a, DistExpr b) {
    return JointRiskSpec(IndepProduct{std::move(a), std::move(b)});
  }
  static JointRiskSpec branches(std::vector<Branch> br) {
    detail::require(!br.empty(), "BranchMixture: at least one branch");
    std::vector<double> p;
    double total = 0.0;
    for (const auto& b : br) {
      detail::require(b.prob > 0.0, "BranchMixture: branch probabilities must be positive");
      detail::require(!b.gamma || *b.gamma > 0.0, "BranchMixture: driver gamma must be positive");
      detail::require(std::isfinite(b.a.constant) && std::isfinite(b.a.slope) &&
                          std::isfinite(b.b.constant) && std::isfinite(b.b.slope),
                      "BranchMixture: coefficients must be finite");
      p.push_back(b.prob);
      total += b.prob;
    }
    detail::require(std::abs(total - 1.0) <= detail::kProbSumTol,
                    "BranchMixture: probabilities must sum to 1");
    BranchMixture m{std::move(br), detail::cumulative(p)};
    return JointRiskSpec(std::move(m));
  }
  static JointRiskSpec arch(double lambda, double beta, DistExpr z) {
    detail::require(lambda > 0.0 && beta > 0.0, "ArchCoupling: lambda and beta must be positive");
    return JointRiskSpec(ArchCoupling{lambda, beta, std::move(z)});
  }

  [[nodiscard]] const Variant& v() const { return v_; }
  [[nodiscard]] const BranchMixture* as_branches() const { return std::get_if<BranchMixture>(&v_); }
  [[nodiscard]] std::string kind() const {
    static const char* names[] = {"indep", "branches", "arch"};
    return names[v_.index()];
  }

  /// Marginal law of A as a DistExpr.
  [[nodiscard]] DistExpr a_marginal() const;
  /// Marginal law of B as a DistExpr.
  [[nodiscard]] DistExpr b_marginal() const;

  friend bool operator==(const JointRiskSpec& x, const JointRiskSpec& y);

 private:
  explicit JointRiskSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

namespace detail {

/// coef.at(W) as a DistExpr, for W the branch driver.
inline DistExpr affine_of_driver(const AffineCoef& c, const std::optional<double>& gamma) {
  if (!gamma) return DistExpr::point_mass(c.at(1.0));
  if (c.slope == 0.0) return DistExpr::point_mass(c.constant);
  const DistExpr w = DistExpr::pareto(*gamma);
  if (c.slope > 0.0) return DistExpr::affine(c.slope, c.constant, w);
  return DistExpr::negate(DistExpr::affine(-c.slope, -c.constant, w));
}

inline DistExpr mix_branches(const BranchMixture& m, bool a_side) {
  if (m.branches.size() == 1) {
    const auto& b = m.branches.front();
    return affine_of_driver(a_side ? b.a : b.b, b.gamma);
  }
  std::vector<std::pair<double, DistExpr>> pc;
  for (const auto& b : m.branches) pc.emplace_back(b.prob, affine_of_driver(a_side ? b.a : b.b, b.gamma));
  return DistExpr::mixture(std::move(pc));
}

}  // namespace detail

inline DistExpr JointRiskSpec::a_marginal() const {
  return std::visit(
      overloaded{
          [](const IndepProduct& s) { return s.a; },
          [](const BranchMixture& m) { return detail::mix_branches(m, true); },
          [](const ArchCoupling& s) { return DistExpr::affine(s.lambda, 0.0, DistExpr::square(s.z)); },
      },
      v_);
}

inline DistExpr JointRiskSpec::b_marginal() const {
  return std::visit(
      overloaded{
          [](const IndepProduct& s) { return s.b; },
          [](const BranchMixture& m) { return detail::mix_branches(m, false); },
          [](const ArchCoupling& s) { return DistExpr::affine(s.beta, 0.0, DistExpr::square(s.z)); },
      },
      v_);
}

inline bool operator==(const JointRiskSpec& x, const JointRiskSpec& y) {
  if (x.v_.index() != y.v_.index()) return false;
  return std::visit(
      overloaded{
          [&](const IndepProduct& s) {
            const auto& t = std::get<IndepProduct>(y.v_);
            return s.a == t.a && s.b == t.b;
          },
          [&](const BranchMixture& s) {
            return s.branches == std::get<BranchMixture>(y.v_).branches;
          },
          [&](const ArchCoupling& s) {
            const auto& t = std::get<ArchCoupling>(y.v_);
            return s.lambda == t.lambda && s.beta == t.beta && s.z == t.z;
          },
      },
      x.v_);
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  bool accepted = true;
  std::vector<std::string> violations;

  void fail(std::string why) {
    accepted = false;
    violations.push_back(std::move(why));
  }
};

inline ValidationReport validate(const JointRiskSpec& spec) {
  ValidationReport r;
  std::visit(
      overloaded{
          [&](const BranchMixture& m) {
            bool a_pos = true, a_one = true, b_pos = false;
            for (const auto& br : m.branches) {
              if (br.unit_driver()) {
                a_pos = a_pos && br.a.at(1.0) > 0.0;
                a_one = a_one && br.a.at(1.0) == 1.0;
                b_pos = b_pos || br.b.at(1.0) > 0.0;
              } else {
                a_pos = a_pos && br.a.slope >= 0.0 && br.a.at(1.0) > 0.0;
                a_one = a_one && br.a.slope == 0.0 && br.a.constant == 1.0;
                b_pos = b_pos || br.b.slope > 0.0 || br.b.at(1.0) > 0.0;
              }
            }
            if (!a_pos) r.fail("A > 0 a.s. violated: some branch has A <= 0 on the driver support");
            if (a_one) r.fail("A is the constant 1");
            if (!b_pos) r.fail("P(B > 0) = 0");
          },
          [&](const auto&) {
            const DistExpr a = spec.a_marginal(), b = spec.b_marginal();
            if (!surely_positive(a)) r.fail("A > 0 a.s. not established");
            const Support sa = support(a);
            if (sa.lo && sa.hi && *sa.lo == 1.0 && *sa.hi == 1.0) r.fail("A is the constant 1");
            const Support sb = support(b);
            if (sb.hi && *sb.hi <= 0.0) r.fail("P(B > 0) = 0");
          },
      },
      spec.v());
  return r;
}

// ---------------------------------------------------------------------------
// Sampling

struct RiskPair {
  double a;
  double b;
};

inline RiskPair draw_joint(const JointRiskSpec& spec, Rng& rng) {
  return std::visit(
      overloaded{
          [&](const IndepProduct& s) {
            const double a = draw(s.a, rng);
            return RiskPair{a, draw(s.b, rng)};
          },
          [&](const BranchMixture& m) {
            const Branch& br = m.branches[detail::pick(m.cdf, rng.uniform())];
            const double w = br.gamma ? std::exp(-std::log(rng.uniform()) / *br.gamma) : 1.0;
            return RiskPair{br.a.at(w), br.b.at(w)};
          },
          [&](const ArchCoupling& s) {
            const double z = draw(s.z, rng);
            return RiskPair{s.lambda * z * z, s.beta * z * z};
          },
      },
      spec.v());
}

inline std::vector<RiskPair> sample_joint(const JointRiskSpec& spec, SeedStream stream,
                                          std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_joint: n must be >= 1");
  Rng rng(stream);
  std::vector<RiskPair> out(n);
  for (auto& p : out) p = draw_joint(spec, rng);
  return out;
}

}  // namespace ruinex
