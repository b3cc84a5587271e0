#pragma once

// Identities and inequalities of the moment-index calculus, checked either
// analytically or from samples.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ruinex/asymptotics.hpp"
#include "ruinex/index.hpp"
#include "ruinex/io.hpp"
#include "ruinex/process.hpp"

namespace ruinex {

enum class LawId {
  affine,         // I(aX + b) = I(X), a > 0
  power,          // I((X^+)^a) = I(X) / a
  monotone,       // Y <= X  =>  I(X) <= I(Y)
  truncation,     // I(X 1(X > b)) = I(X)
  max_rule,       // I(max(X, Y)) = min(I(X), I(Y))
  sum_ineq,       // I(X + Y) >= min(I(X), I(Y))
  sum_indep,      // equality for independent summands
  sum_nonneg,     // equality for nonnegative summands
  finite_cover,   // index of a finite mixture is the minimum over components
  ybar_bound,     // B >= 0  =>  I(Y-bar) <= min(I(A), I(B))
  lundberg_le,    // I1(A) <= I(A)
};

inline const std::vector<std::pair<LawId, const char*>>& law_names() {
  static const std::vector<std::pair<LawId, const char*>> names{
      {LawId::affine, "affine"},          {LawId::power, "power"},           {LawId::monotone, "monotone"},
      {LawId::truncation, "truncation"},  {LawId::max_rule, "max"},          {LawId::sum_ineq, "sum-ineq"},
      {LawId::sum_indep, "sum-indep"},    {LawId::sum_nonneg, "sum-nonneg"}, {LawId::finite_cover, "finite-cover"},
      {LawId::ybar_bound, "ybar-bound"},  {LawId::lundberg_le, "lundberg-le"}};
  return names;
}

inline const char* to_string(LawId id) {
  for (const auto& [k, n] : law_names()) {
    if (k == id) return n;
  }
  return "?";
}

inline std::optional<LawId> parse_law_id(const std::string& s) {
  for (const auto& [k, n] : law_names()) {
    if (s == n) return k;
  }
  return std::nullopt;
}

enum class LawMode { analytic, empirical };

class InexpressibleOperand : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LawOperands {
  std::optional<DistExpr> x;
  std::optional<DistExpr> y;
  std::optional<JointRiskSpec> spec;
  double scale = 2.0;
  double shift = 0.0;
  double exponent = 2.0;
  double threshold = 0.0;
  double prob = 0.5;
};

struct LawReport {
  LawId law = LawId::affine;
  LawMode mode = LawMode::analytic;
  /// "=", "<=" or ">=" between lhs and rhs.
  std::string relation = "=";
  ExtReal lhs;
  ExtReal rhs;
  std::pair<ExtReal, ExtReal> lhs_band;
  std::pair<ExtReal, ExtReal> rhs_band;
  /// "tail" (exact log-survival slope) or "structural" for the analytic lhs.
  std::string lhs_route;
  bool pass = false;
};

struct LawCheckOptions {
  std::size_t samples = 100'000;
  SeedStream stream{};
  EstimatorConfig estimator{};
  /// Relative slack for analytic comparisons that go through the tail route.
  double rel_tol = 1e-9;
};

namespace detail {

struct Side {
  ExtReal value;
  std::pair<ExtReal, ExtReal> band;
  std::string route;
};

inline Side point(ExtReal v, std::string route = "structural") { return {v, {v, v}, std::move(route)}; }

inline Side routed(const DistExpr& e) {
  if (auto t = tail_slope_index(e)) return point(*t, "tail");
  return point(upper_tail_index(e));
}

inline Side estimated(const std::vector<double>& xs, const EstimatorConfig& cfg) {
  const IndexValue v = empirical_index(xs, cfg);
  return {v.get(), v.band(), "empirical"};
}

inline Side side_min(const Side& a, const Side& b) {
  return {min(a.value, b.value), {min(a.band.first, b.band.first), min(a.band.second, b.band.second)},
          a.route};
}

inline Side side_div(const Side& a, double d) {
  return {a.value / d, {a.band.first / d, a.band.second / d}, a.route};
}

inline bool approx_le(ExtReal a, ExtReal b, double tol) {
  if (!(b < a)) return true;
  return a.is_finite() && b.is_finite() && a.value() - b.value() <= tol * std::max(1.0, std::abs(b.value()));
}

inline const DistExpr& need(const std::optional<DistExpr>& d, const char* what) {
  if (!d) throw InexpressibleOperand(std::string("operand ") + what + " required");
  return *d;
}

inline const JointRiskSpec& need_spec(const LawOperands& o) {
  if (!o.spec) throw InexpressibleOperand("joint spec operand required");
  return *o.spec;
}

inline bool nonnegative(const DistExpr& e) {
  const Support s = support(e);
  return s.lo && *s.lo >= 0.0;
}

inline std::vector<double> map_each(const std::vector<double>& v, auto f) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), f);
  return out;
}

inline std::vector<double> zip(const std::vector<double>& a, const std::vector<double>& b, auto f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace detail

inline const char* law_relation(LawId id) {
  switch (id) {
    case LawId::monotone:
    case LawId::ybar_bound:
    case LawId::lundberg_le: return "<=";
    case LawId::sum_ineq: return ">=";
    default: return "=";
  }
}

/// Both sides of the named law. Analytic mode compares exact indices (the
/// left side read off the exact tail where available); empirical mode
/// compares estimator bands from independent samples.
inline LawReport check_law(LawId id, const LawOperands& op, LawMode mode, const LawCheckOptions& opt = {}) {
  using namespace detail;
  LawReport r;
  r.law = id;
  r.mode = mode;
  r.relation = law_relation(id);
  const bool an = mode == LawMode::analytic;
  const std::size_t n = opt.samples;
  const auto& cfg = opt.estimator;
  auto sx = [&](const DistExpr& e, std::uint64_t k) { return sample_marginal(e, opt.stream.child(k), n); };
  auto est = [&](const std::vector<double>& v) { return estimated(v, cfg); };
  Side lhs, rhs;

  switch (id) {
    case LawId::affine: {
      const DistExpr& x = need(op.x, "X");
      if (!(op.scale > 0.0)) throw InexpressibleOperand("scale must be positive");
      if (an) {
        lhs = routed(DistExpr::affine(op.scale, op.shift, x));
        rhs = point(upper_tail_index(x));
      } else {
        const auto xs = sx(x, 1);
        lhs = est(map_each(xs, [&](double v) { return op.scale * v + op.shift; }));
        rhs = est(sx(x, 2));
      }
      break;
    }
    case LawId::power: {
      const DistExpr& x = need(op.x, "X");
      if (!(op.exponent > 0.0)) throw InexpressibleOperand("exponent must be positive");
      if (an) {
        lhs = routed(DistExpr::pos_power(op.exponent, x));
        rhs = point(upper_tail_index(x) / op.exponent);
      } else {
        lhs = est(map_each(sx(x, 1), [&](double v) { return std::pow(std::max(v, 0.0), op.exponent); }));
        rhs = side_div(est(sx(x, 2)), op.exponent);
      }
      break;
    }
    case LawId::monotone: {
      // Y = min(X, Z) <= X for an independent Z.
      const DistExpr& x = need(op.x, "X");
      const DistExpr& z = need(op.y, "Z");
      const DistExpr y = DistExpr::min(x, z);
      if (an) {
        lhs = routed(x);
        rhs = routed(y);
      } else {
        const auto xs = sx(x, 1), zs = sx(z, 2);
        lhs = est(xs);
        rhs = est(zip(xs, zs, [](double a, double b) { return std::min(a, b); }));
      }
      break;
    }
    case LawId::truncation: {
      const DistExpr& x = need(op.x, "X");
      if (an) {
        // X 1(X > b) and X share the tail beyond max(b, 0).
        lhs = routed(x);
        if (lhs.route == "tail") lhs.route = "tail beyond threshold";
        rhs = point(upper_tail_index(x));
      } else {
        const auto xs = sx(x, 1);
        lhs = est(map_each(xs, [&](double v) { return v > op.threshold ? v : 0.0; }));
        rhs = est(sx(x, 2));
      }
      break;
    }
    case LawId::max_rule: {
      const DistExpr& x = need(op.x, "X");
      const DistExpr& y = need(op.y, "Y");
      if (an) {
        lhs = routed(DistExpr::max(x, y));
        rhs = side_min(point(upper_tail_index(x)), point(upper_tail_index(y)));
      } else {
        lhs = est(zip(sx(x, 1), sx(y, 2), [](double a, double b) { return std::max(a, b); }));
        rhs = side_min(est(sx(x, 3)), est(sx(y, 4)));
      }
      break;
    }
    case LawId::sum_ineq:
    case LawId::sum_indep:
    case LawId::sum_nonneg: {
      if (id == LawId::sum_ineq && op.spec) {
        // Dependent pair (A, B) of one joint spec: A + B = h(1).
        const JointRiskSpec& s = *op.spec;
        if (an) {
          lhs = point(h_function(s, 1.0).get(), "structural (joint)");
          rhs = side_min(point(upper_tail_index(s.a_marginal())), point(upper_tail_index(s.b_marginal())));
        } else {
          const auto pairs = sample_joint(s, opt.stream.child(1), n);
          std::vector<double> a(n), b(n), ab(n);
          for (std::size_t i = 0; i < n; ++i) {
            a[i] = pairs[i].a;
            b[i] = pairs[i].b;
            ab[i] = a[i] + b[i];
          }
          lhs = est(ab);
          rhs = side_min(est(a), est(b));
        }
        break;
      }
      if (id == LawId::sum_nonneg && op.spec) {
        const JointRiskSpec& s = *op.spec;
        if (!nonnegative(s.a_marginal()) || !nonnegative(s.b_marginal())) {
          throw InexpressibleOperand("sum-nonneg needs A >= 0 and B >= 0");
        }
        if (an) {
          lhs = point(h_function(s, 1.0).get(), "structural (joint)");
          rhs = side_min(point(upper_tail_index(s.a_marginal())), point(upper_tail_index(s.b_marginal())));
        } else {
          const auto pairs = sample_joint(s, opt.stream.child(1), n);
          std::vector<double> a(n), b(n), ab(n);
          for (std::size_t i = 0; i < n; ++i) {
            a[i] = pairs[i].a;
            b[i] = pairs[i].b;
            ab[i] = a[i] + b[i];
          }
          lhs = est(ab);
          rhs = side_min(est(a), est(b));
        }
        break;
      }
      const DistExpr& x = need(op.x, "X");
      const DistExpr& y = need(op.y, "Y");
      if (id == LawId::sum_nonneg && (!nonnegative(x) || !nonnegative(y))) {
        throw InexpressibleOperand("sum-nonneg needs X >= 0 and Y >= 0");
      }
      if (an) {
        lhs = routed(DistExpr::sum(x, y));
        rhs = side_min(point(upper_tail_index(x)), point(upper_tail_index(y)));
      } else {
        lhs = est(zip(sx(x, 1), sx(y, 2), [](double a, double b) { return a + b; }));
        rhs = side_min(est(sx(x, 3)), est(sx(y, 4)));
      }
      break;
    }
    case LawId::finite_cover: {
      // Cover {theta, theta^c} realised as the two components of a mixture.
      const DistExpr& x = need(op.x, "X");
      const DistExpr& y = need(op.y, "Y");
      if (!(op.prob > 0.0 && op.prob < 1.0)) throw InexpressibleOperand("prob must lie in (0, 1)");
      const DistExpr m = DistExpr::mixture({{op.prob, x}, {1.0 - op.prob, y}});
      if (an) {
        lhs = routed(m);
        rhs = side_min(point(upper_tail_index(x)), point(upper_tail_index(y)));
      } else {
        lhs = est(sx(m, 1));
        rhs = side_min(est(sx(x, 2)), est(sx(y, 3)));
      }
      break;
    }
    case LawId::ybar_bound: {
      const JointRiskSpec& s = need_spec(op);
      if (!nonnegative(s.b_marginal())) throw InexpressibleOperand("ybar-bound needs B >= 0 a.s.");
      if (an) {
        const BoundednessVerdict b = boundedness_check(s);
        lhs = point(b.bounded ? ExtReal::infinity() : predicted_ultimate_exponent(s).value,
                    b.bounded ? "bounded support" : "ultimate exponent");
        rhs = side_min(point(upper_tail_index(s.a_marginal())), point(upper_tail_index(s.b_marginal())));
      } else {
        const auto ps = perpetuity_samples(s, opt.stream.child(1), n);
        std::vector<double> ybar(n);
        for (std::size_t i = 0; i < n; ++i) ybar[i] = ps[i].y_max;
        lhs = est(ybar);
        const auto pairs = sample_joint(s, opt.stream.child(2), n);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
          a[i] = pairs[i].a;
          b[i] = pairs[i].b;
        }
        rhs = side_min(est(a), est(b));
      }
      break;
    }
    case LawId::lundberg_le: {
      const DistExpr& x = need(op.x, "X");
      if (!surely_positive(x)) throw InexpressibleOperand("I1 needs X > 0 a.s.");
      if (an) {
        lhs = point(lundberg_index(x).get(), "root-finding");
        rhs = point(upper_tail_index(x));
      } else {
        const auto xs = sx(x, 1);
        const IndexValue l = lundberg_index_mc(xs);
        lhs = {l.get(), {l.get(), l.get()}, "empirical moment function"};
        rhs = est(sx(x, 2));
      }
      break;
    }
  }

  r.lhs = lhs.value;
  r.rhs = rhs.value;
  r.lhs_band = lhs.band;
  r.rhs_band = rhs.band;
  r.lhs_route = lhs.route;
  if (an) {
    const double t = opt.rel_tol;
    if (r.relation == "=") {
      r.pass = approx_le(r.lhs, r.rhs, t) && approx_le(r.rhs, r.lhs, t);
    } else if (r.relation == "<=") {
      r.pass = approx_le(r.lhs, r.rhs, t);
    } else {
      r.pass = approx_le(r.rhs, r.lhs, t);
    }
  } else {
    const auto [llo, lhi] = lhs.band;
    const auto [rlo, rhi] = rhs.band;
    if (r.relation == "=") {
      r.pass = !(lhi < rlo) && !(rhi < llo);
    } else if (r.relation == "<=") {
      r.pass = !(rhi < llo);
    } else {
      r.pass = !(lhi < rlo);
    }
  }
  return r;
}

inline json to_json(const LawReport& r) {
  return {{"law", to_string(r.law)},
          {"mode", r.mode == LawMode::analytic ? "analytic" : "empirical"},
          {"relation", r.relation},
          {"lhs", to_json(r.lhs)},
          {"rhs", to_json(r.rhs)},
          {"lhs_band", {to_json(r.lhs_band.first), to_json(r.lhs_band.second)}},
          {"rhs_band", {to_json(r.rhs_band.first), to_json(r.rhs_band.second)}},
          {"lhs_route", r.lhs_route},
          {"pass", r.pass}};
}

// ---------------------------------------------------------------------------
// Randomized corpus

struct LawCase {
  LawId law;
  LawOperands operands;
};

inline json to_json(const LawCase& c) {
  json j{{"law", to_string(c.law)}};
  const auto& o = c.operands;
  if (o.x) j["x"] = to_json(*o.x);
  if (o.y) j["y"] = to_json(*o.y);
  if (o.spec) j["spec"] = to_json(*o.spec);
  j["scale"] = o.scale;
  j["shift"] = o.shift;
  j["exponent"] = o.exponent;
  j["threshold"] = o.threshold;
  j["prob"] = o.prob;
  return j;
}

inline LawCase law_case_from_json(const json& j) {
  const auto id = parse_law_id(detail::field(j, "law").get<std::string>());
  if (!id) throw ConfigError("unknown law id \"" + j.at("law").get<std::string>() + "\"");
  LawCase c{*id, {}};
  auto& o = c.operands;
  if (j.contains("x")) o.x = dist_from_json(j.at("x"));
  if (j.contains("y")) o.y = dist_from_json(j.at("y"));
  if (j.contains("spec")) o.spec = spec_from_json(j.at("spec"));
  o.scale = j.value("scale", o.scale);
  o.shift = j.value("shift", o.shift);
  o.exponent = j.value("exponent", o.exponent);
  o.threshold = j.value("threshold", o.threshold);
  o.prob = j.value("prob", o.prob);
  return c;
}

/// Random operands: Pareto, lognormal and atom leaves, optionally wrapped in
/// an affine map whose shift is at most one scale unit. Every law id appears; joint-spec laws use independent
/// products or Pareto-driven branch mixtures.
inline std::vector<LawCase> random_law_corpus(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * U(g); };
  auto leaf = [&](bool positive) -> DistExpr {
    const double r = U(g);
    if (r < 0.6) return DistExpr::pareto(std::round(uni(1.5, 4.0) * 4.0) / 4.0);
    if (r < 0.8) return DistExpr::lognormal(uni(-1.0, 0.0), uni(0.3, 0.8));
    const double lo = positive ? uni(0.2, 0.9) : uni(-2.0, 0.5);
    return DistExpr::atoms({{lo, 0.5}, {lo + uni(0.5, 2.0), 0.5}});
  };
  auto operand = [&](bool positive) -> DistExpr {
    DistExpr l = leaf(positive);
    if (U(g) < 0.3) {
      const double a = uni(0.5, 3.0);
      l = DistExpr::affine(a, a * (positive ? uni(0.0, 1.0) : uni(-1.0, 1.0)), l);
    }
    return l;
  };
  const auto& names = law_names();
  std::vector<LawCase> out;
  for (std::size_t i = 0; i < count; ++i) {
    const LawId id = names[i % names.size()].first;
    LawCase c{id, {}};
    auto& o = c.operands;
    switch (id) {
      case LawId::affine:
        o.x = operand(false);
        o.scale = uni(0.5, 8.0);
        o.shift = o.scale * uni(-1.0, 1.0);
        break;
      case LawId::power:
        o.x = operand(false);
        o.exponent = uni(0.5, 2.0);
        break;
      case LawId::truncation:
        o.x = operand(false);
        o.threshold = uni(0.0, 3.0);
        break;
      case LawId::sum_nonneg:
        o.x = operand(true);
        o.y = operand(true);
        break;
      case LawId::finite_cover:
        o.x = operand(false);
        o.y = operand(false);
        o.prob = uni(0.2, 0.8);
        break;
      case LawId::ybar_bound: {
        const double g1 = std::round(uni(1.5, 4.0) * 4.0) / 4.0;
        o.spec = JointRiskSpec::indep(DistExpr::lognormal(uni(-1.5, -0.8), uni(0.3, 0.8)), DistExpr::pareto(g1));
        break;
      }
      case LawId::sum_ineq:
        if (i % 2 == 0) {
          const double g1 = std::round(uni(1.5, 4.0) * 4.0) / 4.0;
          const double g2 = std::round(uni(1.5, 4.0) * 4.0) / 4.0;
          o.spec = JointRiskSpec::branches({{0.5, {0.0, uni(0.2, 0.6)}, {-1.0, uni(0.5, 2.0)}, g1},
                                            {0.5, {uni(0.3, 0.9), 0.0}, {0.0, -uni(0.5, 2.0)}, g2}});
        } else {
          o.x = operand(false);
          o.y = operand(false);
        }
        break;
      case LawId::lundberg_le:
        o.x = U(g) < 0.5 ? DistExpr::lognormal(uni(-0.6, -0.1), uni(0.3, 1.0))
                         : DistExpr::atoms({{uni(0.3, 0.8), 0.6}, {uni(1.1, 2.0), 0.4}});
        break;
      default:
        o.x = operand(false);
        o.y = operand(false);
        break;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace ruinex
