#pragma once

// Essential suprema ȳ_N = esssup(B + ȳ_{N-1} A) and the boundedness verdict.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ruinex/ext_real.hpp"
#include "ruinex/joint.hpp"

namespace ruinex {

struct EsssupStep {
  ExtReal value;
  /// Branch attaining the maximum (BranchMixture only; -1 otherwise).
  int branch = -1;
  /// The finite value overflowed double range.
  bool overflow = false;
};

namespace detail {

inline EsssupStep finite_or_overflow(double v, int branch) {
  if (std::isinf(v)) return {ExtReal::infinity(), branch, true};
  return {ExtReal::finite(v), branch, false};
}

inline std::optional<double> sup_of(const DistExpr& e) { return support(e).hi; }

}  // namespace detail

/// esssup(B + cA) for c in [0, inf].
inline EsssupStep esssup_step(const JointRiskSpec& spec, ExtReal c) {
  if (c < ExtReal::finite(0.0)) throw std::invalid_argument("esssup_step: c must be >= 0");
  const ExtReal inf = ExtReal::infinity();
  return std::visit(
      overloaded{
          [&](const BranchMixture& m) -> EsssupStep {
            // A > 0 on every branch, so c = inf gives inf.
            if (c.is_infinite()) return {inf, 0, false};
            const double cv = c.value();
            double best = -std::numeric_limits<double>::infinity();
            int arg = -1;
            for (std::size_t j = 0; j < m.branches.size(); ++j) {
              const Branch& br = m.branches[j];
              const double k0 = br.b.constant + cv * br.a.constant;
              const double k1 = br.b.slope + cv * br.a.slope;
              // Affine in w on [1, inf) (Pareto) or at w = 1 (unit driver).
              if (!br.unit_driver() && k1 > 0.0) return {inf, static_cast<int>(j), false};
              const double v = k0 + k1;
              if (v > best) {
                best = v;
                arg = static_cast<int>(j);
              }
            }
            return detail::finite_or_overflow(best, arg);
          },
          [&](const IndepProduct& s) -> EsssupStep {
            const auto sb = detail::sup_of(s.b);
            if (!sb) return {inf, -1, false};
            if (c == ExtReal::finite(0.0)) return {ExtReal::finite(*sb), -1, false};
            const auto sa = detail::sup_of(s.a);
            if (!sa || c.is_infinite()) return {inf, -1, false};
            return detail::finite_or_overflow(*sb + c.value() * *sa, -1);
          },
          [&](const ArchCoupling& s) -> EsssupStep {
            const auto sz = detail::sup_of(DistExpr::square(s.z));
            if (!sz || c.is_infinite()) return {inf, -1, false};
            return detail::finite_or_overflow((s.beta + c.value() * s.lambda) * *sz, -1);
          },
      },
      spec.v());
}

inline EsssupStep esssup_step(const JointRiskSpec& spec, double c) {
  return esssup_step(spec, ExtReal::finite(c));
}

// ---------------------------------------------------------------------------
// Boundedness: does some c > 0 satisfy B + cA <= c a.s.?

struct BoundednessVerdict {
  bool bounded = false;
  /// Minimal witness; also the limit of the sequence when bounded.
  std::optional<double> witness;
  std::string reason;
};

namespace detail {

/// Feasible set of {k0 + k1 c <= 0 for every row} intersected with c >= 0.
struct LinearFeasibility {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool empty = false;

  void add(double k0, double k1) {
    if (k1 == 0.0) {
      if (k0 > 0.0) empty = true;
    } else if (k1 > 0.0) {
      hi = std::min(hi, -k0 / k1);
    } else {
      lo = std::max(lo, -k0 / k1);
    }
    if (lo > hi) empty = true;
  }
};

}  // namespace detail

inline BoundednessVerdict boundedness_check(const JointRiskSpec& spec) {
  detail::LinearFeasibility f;
  bool unbounded_driver = false;
  std::visit(
      overloaded{
          [&](const BranchMixture& m) {
            for (const auto& br : m.branches) {
              // B + cA - c at w = 1 ...
              f.add(br.b.at(1.0), br.a.at(1.0) - 1.0);
              // ... and its slope in w on [1, inf).
              if (!br.unit_driver()) f.add(br.b.slope, br.a.slope);
            }
          },
          [&](const IndepProduct& s) {
            const auto sa = detail::sup_of(s.a), sb = detail::sup_of(s.b);
            if (!sa || !sb) {
              unbounded_driver = true;
              return;
            }
            f.add(*sb, *sa - 1.0);
          },
          [&](const ArchCoupling& s) {
            const auto sz = detail::sup_of(DistExpr::square(s.z));
            if (!sz) {
              unbounded_driver = true;
              return;
            }
            f.add(s.beta * *sz, s.lambda * *sz - 1.0);
          },
      },
      spec.v());
  if (unbounded_driver) return {false, std::nullopt, "A or B has unbounded support"};
  if (f.empty) return {false, std::nullopt, "no c satisfies B + cA <= c a.s."};
  return {true, f.lo, "minimal c with B + cA <= c a.s."};
}

// ---------------------------------------------------------------------------
// Sequence

struct EsssupReport {
  std::vector<ExtReal> sequence;
  /// attaining[k] belongs to sequence[k + 1].
  std::vector<int> attaining;
  BoundednessVerdict verdict;
  /// First k with ȳ_k = inf.
  std::optional<std::size_t> first_infinite;
  /// Unbounded, yet every computed term finite (or overflowed).
  bool finite_but_diverging = false;
  std::optional<std::size_t> overflow_at;
  /// P(A > 1) > 0 and P(A < 1) > 0.
  bool within_hypotheses = true;
};

inline bool a_straddles_one(const JointRiskSpec& spec) {
  if (const auto* m = spec.as_branches()) {
    bool below = false, above = false;
    for (const auto& br : m->branches) {
      const double at1 = br.a.at(1.0);
      below = below || at1 < 1.0;
      above = above || at1 > 1.0 || (!br.unit_driver() && br.a.slope > 0.0);
    }
    return below && above;
  }
  const Support s = support(spec.a_marginal());
  return s.lo && *s.lo < 1.0 && (!s.hi || *s.hi > 1.0);
}

/// ȳ_0 = 0, ..., ȳ_N; stops early at the first infinite term.
inline EsssupReport esssup_sequence(const JointRiskSpec& spec, std::size_t n) {
  if (n < 1) throw std::invalid_argument("esssup_sequence: N must be >= 1");
  const ValidationReport v = validate(spec);
  if (!v.accepted) {
    std::string msg = "esssup_sequence: invalid spec:";
    for (const auto& s : v.violations) msg += " " + s + ";";
    throw std::invalid_argument(msg);
  }
  EsssupReport r;
  r.verdict = boundedness_check(spec);
  r.within_hypotheses = a_straddles_one(spec);
  r.sequence.push_back(ExtReal::finite(0.0));
  for (std::size_t k = 1; k <= n; ++k) {
    const EsssupStep s = esssup_step(spec, r.sequence.back());
    if (s.overflow) {
      r.overflow_at = k;
      break;
    }
    r.sequence.push_back(s.value);
    r.attaining.push_back(s.branch);
    if (s.value.is_infinite()) {
      r.first_infinite = k;
      break;
    }
  }
  r.finite_but_diverging = !r.verdict.bounded && !r.first_infinite;
  return r;
}

}  // namespace ruinex
