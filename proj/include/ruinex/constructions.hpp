#pragma once

// Minorants with a prescribed index and the coupled ruin-monotonicity harness.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ruinex/index.hpp"
#include "ruinex/joint.hpp"
#include "ruinex/process.hpp"

namespace ruinex {

enum class MinorantKind { a_side, b_side };

inline const char* to_string(MinorantKind k) { return k == MinorantKind::a_side ? "A-side" : "B-side"; }

struct MinorantSpec {
  MinorantKind kind = MinorantKind::a_side;
  bool ok = false;
  std::string diagnostic;
  DistExpr original = DistExpr::point_mass(1.0);
  DistExpr constructed = DistExpr::point_mass(1.0);
  /// A-side: I¹(A) + eps. B-side: beta.
  double target = 0.0;
  /// Re-evaluated I¹ (A-side) or 𝕀 (B-side) of the constructed law.
  std::optional<ExtReal> achieved;
  /// A-side: E(A_eps^target).
  double moment_at_target = 0.0;
  bool dominated = false;
  /// A-side atom map: original value -> constructed value, ascending.
  std::vector<std::pair<double, double>> atom_map;
  /// B-side: gamma of the independent Pareto factor.
  double pareto_gamma = 0.0;
};

/// A_eps <= A with I¹(A_eps) = I¹(A) + eps, for A with finitely many atoms.
///
/// With t = I¹(A) + eps and atoms v_1 < ... < v_n, let m be the first index
/// whose partial sum sum_{i<=m} p_i v_i^t exceeds 1. Atoms below v_m are kept,
/// v_m is scaled by kappa and every atom above is floored at the same level
/// x = kappa v_m, where x solves
///   sum_{i<m} p_i v_i^t + P(A >= v_m) x^t = 1.
/// Since p_m v_m^t > 1 - sum_{i<m} p_i v_i^t, x < v_m and domination holds.
inline MinorantSpec minorant_A(const DistExpr& a, double eps) {
  MinorantSpec r;
  r.kind = MinorantKind::a_side;
  r.original = a;
  const auto* at = std::get_if<node::Atoms>(&a.node().v);
  if (!at) {
    r.diagnostic = "A must be a finite atom law (discretize first)";
    return r;
  }
  if (!(eps > 0.0)) {
    r.diagnostic = "eps must be positive";
    return r;
  }
  if (at->values.front() <= 0.0) {
    r.diagnostic = "A > 0 required";
    return r;
  }
  const IndexValue i1 = lundberg_index(a);
  if (i1.get().is_infinite()) {
    r.diagnostic = "I1(A) = inf (no atom above 1); nothing to construct";
    return r;
  }
  const double t = i1.get().value() + eps;
  r.target = t;
  const auto& v = at->values;
  const auto& p = at->probs;
  const std::size_t n = v.size();
  double below = 0.0;
  std::size_t m = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double term = p[i] * std::pow(v[i], t);
    if (below + term > 1.0) {
      m = i;
      break;
    }
    below += term;
  }
  if (m == n || !(below < 1.0)) {
    r.diagnostic = "no split point: E(A^t) <= 1 at t = I1(A) + eps";
    return r;
  }
  double tail_prob = 0.0;
  for (std::size_t i = m; i < n; ++i) tail_prob += p[i];
  const double x = std::pow((1.0 - below) / tail_prob, 1.0 / t);

  std::vector<std::pair<double, double>> vp;
  for (std::size_t i = 0; i < n; ++i) {
    const double nv = i < m ? v[i] : x;
    r.atom_map.emplace_back(v[i], nv);
    vp.emplace_back(nv, p[i]);
  }
  // Merge equal values so the atom law stays canonical.
  std::sort(vp.begin(), vp.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& [val, pr] : vp) {
    if (!merged.empty() && merged.back().first == val) {
      merged.back().second += pr;
    } else {
      merged.emplace_back(val, pr);
    }
  }
  if (merged.size() == 1) {
    r.diagnostic = "constructed law is degenerate; refine the atom set";
    return r;
  }
  r.constructed = DistExpr::atoms(merged);
  r.dominated = std::all_of(r.atom_map.begin(), r.atom_map.end(),
                            [](const auto& q) { return q.second <= q.first && q.second > 0.0; });
  r.moment_at_target = analytic_fractional_moment(r.constructed, t).value.to_double();
  r.achieved = lundberg_index(r.constructed).get();
  r.ok = r.dominated;
  return r;
}

/// B* = min(B, W) with W ~ Pareto(beta - alpha) independent, alpha = 𝕀(B).
inline MinorantSpec minorant_B(const DistExpr& b, double beta) {
  const ExtReal alpha = upper_tail_index(b);
  if (alpha.is_infinite()) throw std::invalid_argument("minorant_B: I(B) = inf, nothing to increase");
  if (!(beta > alpha.value())) throw std::invalid_argument("minorant_B: beta must exceed I(B)");
  MinorantSpec r;
  r.kind = MinorantKind::b_side;
  r.original = b;
  r.target = beta;
  r.pareto_gamma = beta - alpha.value();
  r.constructed = DistExpr::min_with_pareto(b, r.pareto_gamma);
  r.achieved = upper_tail_index(r.constructed);
  r.dominated = true;
  r.ok = true;
  return r;
}

// ---------------------------------------------------------------------------
// Coupled ruin monotonicity

struct CouplingReport {
  std::size_t paths = 0;
  /// Paths with T > T*.
  std::size_t violations = 0;
  std::size_t ruined = 0;
  std::size_t ruined_star = 0;
  /// Paths with T = T* (both possibly "no ruin within horizon").
  std::size_t identical = 0;
  /// Paths where the minorant draw exceeded the original.
  std::size_t domination_failures = 0;
};

namespace detail {

inline double map_atom(const std::vector<std::pair<double, double>>& m, double a) {
  auto it = std::lower_bound(m.begin(), m.end(), a,
                             [](const auto& q, double x) { return q.first < x; });
  if (it == m.end() || it->first != a) throw std::logic_error("coupling: A draw is not an atom");
  return it->second;
}

}  // namespace detail

/// Runs the original and the minorant process on shared randomness in the
/// capital form U_n = (U_{n-1} - B_n)/A_n over `horizon` steps and counts
/// paths with T > T*. A-side: A* = map(A) requires an independent spec whose
/// A is the minorant's original atom law. B-side: B* = min(B, W).
inline CouplingReport coupled_ruin_monotonicity(const JointRiskSpec& spec, const MinorantSpec& mn,
                                                std::size_t n_paths, double u0, SeedStream base,
                                                std::size_t horizon = 1000, unsigned workers = 0) {
  if (!mn.ok) throw std::invalid_argument("coupled_ruin_monotonicity: minorant not constructed");
  if (!(u0 > 0.0)) throw std::invalid_argument("coupled_ruin_monotonicity: U0 must be positive");
  if (mn.kind == MinorantKind::a_side && !(spec.a_marginal() == mn.original)) {
    throw std::invalid_argument("coupled_ruin_monotonicity: A of spec differs from minorant original");
  }
  constexpr std::size_t chunk = 4096;
  auto chunks = run_chunks<CouplingReport>(
      n_paths, chunk, base, workers, [&](std::size_t, SeedStream s, std::size_t first, std::size_t end) {
        CouplingReport c;
        Rng rng(s);
        for (std::size_t p = first; p < end; ++p) {
          double u = u0, us = u0;
          std::optional<std::size_t> t, ts;
          for (std::size_t k = 1; k <= horizon && !(t && ts); ++k) {
            const RiskPair ab = draw_joint(spec, rng);
            double a_star = ab.a, b_star = ab.b;
            if (mn.kind == MinorantKind::a_side) {
              a_star = detail::map_atom(mn.atom_map, ab.a);
            } else {
              b_star = std::min(ab.b, std::exp(-std::log(rng.uniform()) / mn.pareto_gamma));
            }
            if (a_star > ab.a || b_star > ab.b) ++c.domination_failures;
            if (!t) {
              u = (u - ab.b) / ab.a;
              if (u < 0.0) t = k;
            }
            if (!ts) {
              us = (us - b_star) / a_star;
              if (us < 0.0) ts = k;
            }
          }
          ++c.paths;
          const std::size_t big = std::numeric_limits<std::size_t>::max();
          const std::size_t tv = t.value_or(big), tsv = ts.value_or(big);
          if (tv > tsv) ++c.violations;
          if (tv == tsv) ++c.identical;
          if (t) ++c.ruined;
          if (ts) ++c.ruined_star;
        }
        return c;
      });
  CouplingReport r;
  for (const auto& c : chunks) {
    r.paths += c.paths;
    r.violations += c.violations;
    r.ruined += c.ruined;
    r.ruined_star += c.ruined_star;
    r.identical += c.identical;
    r.domination_failures += c.domination_failures;
  }
  return r;
}

}  // namespace ruinex
