#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "ruinex/dist_expr.hpp"
#include "ruinex/ext_real.hpp"
#include "ruinex/tail.hpp"

namespace ruinex {

/// Quadrature bookkeeping shared by one (possibly nested) expectation.
struct QuadContext {
  double tolerance = 1e-9;
  std::size_t max_evaluations = 1'000'000;
  std::size_t evaluations = 0;
  /// Set when an integrand value overflowed and was dropped.
  bool clipped = false;
};

class QuadratureCapExceeded : public std::runtime_error {
 public:
  QuadratureCapExceeded() : std::runtime_error("quadrature evaluation cap exceeded") {}
};

namespace detail {

inline double guarded(QuadContext& ctx, double v) {
  if (++ctx.evaluations > ctx.max_evaluations) throw QuadratureCapExceeded();
  if (!std::isfinite(v)) {
    ctx.clipped = true;
    return 0.0;
  }
  return v;
}

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

}  // namespace detail

/// E f(X) by recursion over the tree: discrete nodes are summed, continuous
/// leaves integrated in log scale (Pareto: t = log W on (0, inf) with
/// exp-sinh; lognormal and normal: Gaussian coordinate with sinh-sinh),
/// independent combinators by nesting.
inline double expect(const DistExpr& e, const std::function<double(double)>& f,
                     QuadContext& ctx) {
  namespace q = boost::math::quadrature;
  return std::visit(
      overloaded{
          [&](const node::PointMass& n) { return f(n.value); },
          [&](const node::Atoms& n) {
            double s = 0.0;
            for (std::size_t i = 0; i < n.values.size(); ++i) s += n.probs[i] * f(n.values[i]);
            return s;
          },
          [&](const node::Pareto& n) {
            thread_local q::exp_sinh<double> integrator;
            const double g = n.gamma;
            auto h = [&](double t) {
              const double w = g * std::exp(-g * t);
              if (w == 0.0) return detail::guarded(ctx, 0.0);
              return detail::guarded(ctx, f(std::exp(t)) * w);
            };
            return integrator.integrate(h, ctx.tolerance);
          },
          [&](const node::Lognormal& n) {
            thread_local q::sinh_sinh<double> integrator;
            auto h = [&](double z) {
              const double w = detail::std_normal_pdf(z);
              if (w == 0.0) return detail::guarded(ctx, 0.0);
              return detail::guarded(ctx, f(std::exp(n.mu + n.sigma * z)) * w);
            };
            return integrator.integrate(h, ctx.tolerance);
          },
          [&](const node::Normal& n) {
            thread_local q::sinh_sinh<double> integrator;
            auto h = [&](double z) {
              const double w = detail::std_normal_pdf(z);
              if (w == 0.0) return detail::guarded(ctx, 0.0);
              return detail::guarded(ctx, f(n.mu + n.sigma * z) * w);
            };
            return integrator.integrate(h, ctx.tolerance);
          },
          [&](const node::Affine& n) {
            return expect(n.child, [&](double x) { return f(n.scale * x + n.shift); }, ctx);
          },
          [&](const node::PosPower& n) {
            return expect(
                n.child, [&](double x) { return f(std::pow(std::max(x, 0.0), n.exponent)); }, ctx);
          },
          [&](const node::Square& n) {
            return expect(n.child, [&](double x) { return f(x * x); }, ctx);
          },
          [&](const node::Negate& n) {
            return expect(n.child, [&](double x) { return f(-x); }, ctx);
          },
          [&](const node::Min& n) {
            return expect(
                n.left,
                [&](double x) {
                  return expect(n.right, [&](double y) { return f(std::min(x, y)); }, ctx);
                },
                ctx);
          },
          [&](const node::Max& n) {
            return expect(
                n.left,
                [&](double x) {
                  return expect(n.right, [&](double y) { return f(std::max(x, y)); }, ctx);
                },
                ctx);
          },
          [&](const node::SumIndep& n) {
            return expect(
                n.left,
                [&](double x) {
                  return expect(n.right, [&](double y) { return f(x + y); }, ctx);
                },
                ctx);
          },
          [&](const node::MinWithPareto& n) {
            const DistExpr w = DistExpr::pareto(n.gamma);
            return expect(
                n.child,
                [&](double x) {
                  return expect(w, [&](double y) { return f(std::min(x, y)); }, ctx);
                },
                ctx);
          },
          [&](const node::Mixture& n) {
            double s = 0.0;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
              s += n.probs[i] * expect(n.children[i], f, ctx);
            }
            return s;
          },
      },
      e.node().v);
}

/// E((X^+)^s) in closed form where one exists; nullopt otherwise.
inline std::optional<ExtReal> closed_form_moment(const DistExpr& e, double s) {
  using R = std::optional<ExtReal>;
  if (s == 0.0) return ExtReal::finite(1.0);
  auto pos_pow = [s](double v) { return v > 0.0 ? std::pow(v, s) : 0.0; };
  auto finite_or_inf = [](double v) -> R { return ExtReal::from_double(v); };
  return std::visit(
      overloaded{
          [&](const node::PointMass& n) -> R { return finite_or_inf(pos_pow(n.value)); },
          [&](const node::Atoms& n) -> R {
            double m = 0.0;
            for (std::size_t i = 0; i < n.values.size(); ++i) m += n.probs[i] * pos_pow(n.values[i]);
            return finite_or_inf(m);
          },
          [&](const node::Pareto& n) -> R {
            if (s >= n.gamma) return ExtReal::infinity();
            return ExtReal::finite(n.gamma / (n.gamma - s));
          },
          [&](const node::Lognormal& n) -> R {
            return finite_or_inf(std::exp(n.mu * s + 0.5 * n.sigma * n.sigma * s * s));
          },
          [&](const node::Normal& n) -> R {
            if (n.mu != 0.0) return std::nullopt;
            // E((Z^+)^s) = sigma^s 2^{s/2} Gamma((s+1)/2) / (2 sqrt(pi))
            return finite_or_inf(std::exp(s * std::log(n.sigma) + 0.5 * s * std::log(2.0) +
                                          std::lgamma(0.5 * (s + 1.0))) /
                                 (2.0 * std::sqrt(M_PI)));
          },
          [&](const node::Affine& n) -> R {
            if (n.shift == 0.0) {
              auto c = closed_form_moment(n.child, s);
              if (!c) return std::nullopt;
              return c->is_infinite() ? *c : finite_or_inf(std::pow(n.scale, s) * c->value());
            }
            if (const auto* pm = std::get_if<node::PointMass>(&n.child.node().v)) {
              return finite_or_inf(pos_pow(n.scale * pm->value + n.shift));
            }
            if (const auto* at = std::get_if<node::Atoms>(&n.child.node().v)) {
              double m = 0.0;
              for (std::size_t i = 0; i < at->values.size(); ++i) {
                m += at->probs[i] * pos_pow(n.scale * at->values[i] + n.shift);
              }
              return finite_or_inf(m);
            }
            return std::nullopt;
          },
          [&](const node::PosPower& n) -> R { return closed_form_moment(n.child, n.exponent * s); },
          [&](const node::Square& n) -> R {
            if (const auto* nz = std::get_if<node::Normal>(&n.child.node().v); nz && nz->mu == 0.0) {
              // E|Z|^{2s} = sigma^{2s} 2^s Gamma(s + 1/2) / sqrt(pi)
              return finite_or_inf(std::exp(2.0 * s * std::log(nz->sigma) + s * std::log(2.0) +
                                            std::lgamma(s + 0.5)) /
                                   std::sqrt(M_PI));
            }
            if (const auto* pm = std::get_if<node::PointMass>(&n.child.node().v)) {
              return finite_or_inf(std::pow(pm->value * pm->value, s));
            }
            if (const auto* at = std::get_if<node::Atoms>(&n.child.node().v)) {
              double m = 0.0;
              for (std::size_t i = 0; i < at->values.size(); ++i) {
                m += at->probs[i] * pos_pow(at->values[i] * at->values[i]);
              }
              return finite_or_inf(m);
            }
            return std::nullopt;
          },
          [&](const node::Negate& n) -> R {
            const Support sup = support(n.child);
            if (sup.lo && *sup.lo >= 0.0) return ExtReal::finite(0.0);
            if (const auto* pm = std::get_if<node::PointMass>(&n.child.node().v)) {
              return finite_or_inf(pos_pow(-pm->value));
            }
            return std::nullopt;
          },
          [&](const node::Mixture& n) -> R {
            double m = 0.0;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
              auto c = closed_form_moment(n.children[i], s);
              if (!c) return std::nullopt;
              if (c->is_infinite()) return ExtReal::infinity();
              m += n.probs[i] * c->value();
            }
            return finite_or_inf(m);
          },
          [](const auto&) -> R { return std::nullopt; },
      },
      e.node().v);
}

struct MomentResult {
  ExtReal value;
  /// False when the value came from quadrature.
  bool closed_form = true;
  std::size_t evaluations = 0;
  bool clipped = false;
};

/// Partial integrals above this are declared divergent.
constexpr double kDivergenceThreshold = 1e12;

/// E((X^+)^s), s >= 0. Divergence is decided structurally (s at or above
/// the moment index) before any quadrature is attempted.
inline MomentResult analytic_fractional_moment(const DistExpr& e, double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw std::invalid_argument("analytic_fractional_moment: s must be >= 0");
  }
  if (auto c = closed_form_moment(e, s)) return {*c, true, 0, false};
  if (s > 0.0 && ExtReal::finite(s) >= upper_tail_index(e)) {
    return {ExtReal::infinity(), false, 0, false};
  }
  QuadContext ctx;
  const double v = expect(
      e, [s](double x) { return x > 0.0 ? std::pow(x, s) : 0.0; }, ctx);
  MomentResult r{ExtReal::finite(0.0), false, ctx.evaluations, ctx.clipped};
  r.value = (v > kDivergenceThreshold || !std::isfinite(v)) ? ExtReal::infinity()
                                                            : ExtReal::finite(v);
  return r;
}

/// E(log X) for X > 0 a.s.
inline double expected_log(const DistExpr& e) {
  constexpr double euler_gamma = 0.57721566490153286061;
  auto closed = [&](const DistExpr& x, auto&& self) -> std::optional<double> {
    return std::visit(
        overloaded{
            [](const node::PointMass& n) -> std::optional<double> { return std::log(n.value); },
            [](const node::Atoms& n) -> std::optional<double> {
              double m = 0.0;
              for (std::size_t i = 0; i < n.values.size(); ++i) m += n.probs[i] * std::log(n.values[i]);
              return m;
            },
            [](const node::Pareto& n) -> std::optional<double> { return 1.0 / n.gamma; },
            [](const node::Lognormal& n) -> std::optional<double> { return n.mu; },
            [&](const node::Affine& n) -> std::optional<double> {
              if (n.shift != 0.0) return std::nullopt;
              auto c = self(n.child, self);
              if (!c) return std::nullopt;
              return std::log(n.scale) + *c;
            },
            [&](const node::PosPower& n) -> std::optional<double> {
              auto c = self(n.child, self);
              if (!c) return std::nullopt;
              return n.exponent * *c;
            },
            [&](const node::Square& n) -> std::optional<double> {
              if (const auto* z = std::get_if<node::Normal>(&n.child.node().v); z && z->mu == 0.0) {
                return 2.0 * std::log(z->sigma) - euler_gamma - std::log(2.0);
              }
              return std::nullopt;
            },
            [&](const node::Mixture& n) -> std::optional<double> {
              double m = 0.0;
              for (std::size_t i = 0; i < n.children.size(); ++i) {
                auto c = self(n.children[i], self);
                if (!c) return std::nullopt;
                m += n.probs[i] * *c;
              }
              return m;
            },
            [](const auto&) -> std::optional<double> { return std::nullopt; },
        },
        x.node().v);
  };
  if (auto c = closed(e, closed)) return *c;
  if (!surely_positive(e)) throw std::invalid_argument("expected_log: X must be > 0 a.s.");
  QuadContext ctx;
  return expect(e, [](double x) { return std::log(x); }, ctx);
}

/// E(X); throws when E|X| is infinite.
inline double expected_value(const DistExpr& e) {
  if (upper_tail_index(e) <= ExtReal::finite(1.0) || lower_tail_index(e) <= ExtReal::finite(1.0)) {
    throw std::domain_error("expected_value: E|X| is infinite");
  }
  QuadContext ctx;
  return expect(e, [](double x) { return x; }, ctx);
}

}  // namespace ruinex
