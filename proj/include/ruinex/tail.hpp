#pragma once

// Tail algebra over DistExpr: structural moment indices of X^+ and (-X)^+,
// plus an independent route that reads the index off the exact log-survival
// function far in the tail.

#include <cmath>
#include <limits>
#include <optional>

#include "ruinex/dist_expr.hpp"
#include "ruinex/ext_real.hpp"

namespace ruinex {

ExtReal lower_tail_index(const DistExpr& e);

/// Moment index of X: sup{s >= 0 : E((X^+)^s) < inf}, computed by the
/// structural rules. Exact on the whole DistExpr class because every leaf
/// tail is regularly decaying or lighter than any power.
inline ExtReal upper_tail_index(const DistExpr& e) {
  const ExtReal inf = ExtReal::infinity();
  return std::visit(
      overloaded{
          [&](const node::PointMass&) { return inf; },
          [&](const node::Atoms&) { return inf; },
          [](const node::Pareto& n) { return ExtReal::finite(n.gamma); },
          [&](const node::Lognormal&) { return inf; },
          [&](const node::Normal&) { return inf; },
          [](const node::Affine& n) { return upper_tail_index(n.child); },
          [](const node::PosPower& n) { return upper_tail_index(n.child) / n.exponent; },
          [](const node::Square& n) {
            return min(upper_tail_index(n.child), lower_tail_index(n.child)) / 2.0;
          },
          [](const node::Negate& n) { return lower_tail_index(n.child); },
          // P(min > x) = P(X > x) P(Y > x) for independent children.
          [](const node::Min& n) { return upper_tail_index(n.left) + upper_tail_index(n.right); },
          [](const node::Max& n) {
            return min(upper_tail_index(n.left), upper_tail_index(n.right));
          },
          [](const node::SumIndep& n) {
            return min(upper_tail_index(n.left), upper_tail_index(n.right));
          },
          [](const node::MinWithPareto& n) {
            return upper_tail_index(n.child) + ExtReal::finite(n.gamma);
          },
          [&](const node::Mixture& n) {
            ExtReal r = inf;
            for (const auto& c : n.children) r = min(r, upper_tail_index(c));
            return r;
          },
      },
      e.node().v);
}

/// Moment index of -X.
inline ExtReal lower_tail_index(const DistExpr& e) {
  const ExtReal inf = ExtReal::infinity();
  return std::visit(
      overloaded{
          [&](const node::Affine& n) { return lower_tail_index(n.child); },
          [](const node::Negate& n) { return upper_tail_index(n.child); },
          [](const node::Min& n) {
            return min(lower_tail_index(n.left), lower_tail_index(n.right));
          },
          [](const node::Max& n) { return lower_tail_index(n.left) + lower_tail_index(n.right); },
          [](const node::SumIndep& n) {
            return min(lower_tail_index(n.left), lower_tail_index(n.right));
          },
          [](const node::MinWithPareto& n) { return lower_tail_index(n.child); },
          [&](const node::Mixture& n) {
            ExtReal r = inf;
            for (const auto& c : n.children) r = min(r, lower_tail_index(c));
            return r;
          },
          // Leaves are bounded below or Gaussian; PosPower and Square are >= 0.
          [&](const auto&) { return inf; },
      },
      e.node().v);
}

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log P(Z > z) for standard normal Z, stable far into both tails.
inline double log_normal_sf(double z) {
  if (z < -8.0) return std::log1p(-0.5 * std::erfc(-z / std::sqrt(2.0)));
  if (z < 30.0) return std::log(0.5 * std::erfc(z / std::sqrt(2.0)));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * M_PI) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

/// log(p + q - pq) from log p and log q.
inline double log_union(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double s = log_add(a, b);
  return s + std::log1p(-std::exp(a + b - s));
}

/// log(x - b) for x = e^t, valid when e^t > b.
inline double log_shifted(double t, double b) {
  return t + std::log1p(-b * std::exp(-t));
}

}  // namespace detail

std::optional<double> log_lower_tail(const DistExpr& e, double t);

/// log P(X > e^t) for large t, evaluated without forming e^t where possible.
/// nullopt when the node has no closed tail (independent sums).
inline std::optional<double> log_upper_tail(const DistExpr& e, double t) {
  using R = std::optional<double>;
  using detail::kNegInf;
  return std::visit(
      overloaded{
          [&](const node::PointMass& n) -> R {
            return (n.value > 0.0 && std::log(n.value) > t) ? 0.0 : kNegInf;
          },
          [&](const node::Atoms& n) -> R {
            double p = 0.0;
            for (std::size_t i = 0; i < n.values.size(); ++i) {
              if (n.values[i] > 0.0 && std::log(n.values[i]) > t) p += n.probs[i];
            }
            return p > 0.0 ? std::log(p) : kNegInf;
          },
          [&](const node::Pareto& n) -> R { return t >= 0.0 ? -n.gamma * t : 0.0; },
          [&](const node::Lognormal& n) -> R {
            return detail::log_normal_sf((t - n.mu) / n.sigma);
          },
          [&](const node::Normal& n) -> R {
            if (t > 700.0) return kNegInf;
            return detail::log_normal_sf((std::exp(t) - n.mu) / n.sigma);
          },
          [&](const node::Affine& n) -> R {
            if (n.shift > 0.0 && t <= std::log(n.shift)) return std::nullopt;
            return log_upper_tail(n.child, detail::log_shifted(t, n.shift) - std::log(n.scale));
          },
          [&](const node::PosPower& n) -> R { return log_upper_tail(n.child, t / n.exponent); },
          [&](const node::Square& n) -> R {
            auto u = log_upper_tail(n.child, t / 2.0);
            auto l = log_lower_tail(n.child, t / 2.0);
            if (!u || !l) return std::nullopt;
            return detail::log_add(*u, *l);
          },
          [&](const node::Negate& n) -> R { return log_lower_tail(n.child, t); },
          [&](const node::Min& n) -> R {
            auto a = log_upper_tail(n.left, t), b = log_upper_tail(n.right, t);
            if (!a || !b) return std::nullopt;
            return *a + *b;
          },
          [&](const node::Max& n) -> R {
            auto a = log_upper_tail(n.left, t), b = log_upper_tail(n.right, t);
            if (!a || !b) return std::nullopt;
            return detail::log_union(*a, *b);
          },
          [](const node::SumIndep&) -> R { return std::nullopt; },
          [&](const node::MinWithPareto& n) -> R {
            auto a = log_upper_tail(n.child, t);
            if (!a) return std::nullopt;
            return *a + (t >= 0.0 ? -n.gamma * t : 0.0);
          },
          [&](const node::Mixture& n) -> R {
            double acc = kNegInf;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
              auto l = log_upper_tail(n.children[i], t);
              if (!l) return std::nullopt;
              acc = detail::log_add(acc, std::log(n.probs[i]) + *l);
            }
            return acc;
          },
      },
      e.node().v);
}

/// log P(X < -e^t) for large t.
inline std::optional<double> log_lower_tail(const DistExpr& e, double t) {
  using R = std::optional<double>;
  using detail::kNegInf;
  return std::visit(
      overloaded{
          [&](const node::PointMass& n) -> R {
            return (n.value < 0.0 && std::log(-n.value) > t) ? 0.0 : kNegInf;
          },
          [&](const node::Atoms& n) -> R {
            double p = 0.0;
            for (std::size_t i = 0; i < n.values.size(); ++i) {
              if (n.values[i] < 0.0 && std::log(-n.values[i]) > t) p += n.probs[i];
            }
            return p > 0.0 ? std::log(p) : kNegInf;
          },
          [&](const node::Normal& n) -> R {
            if (t > 700.0) return kNegInf;
            return detail::log_normal_sf((std::exp(t) + n.mu) / n.sigma);
          },
          [&](const node::Affine& n) -> R {
            // P(aX + b < -x) = P(X < -(x + b)/a)
            if (n.shift < 0.0 && t <= std::log(-n.shift)) return std::nullopt;
            return log_lower_tail(n.child, detail::log_shifted(t, -n.shift) - std::log(n.scale));
          },
          [&](const node::Negate& n) -> R { return log_upper_tail(n.child, t); },
          [&](const node::Min& n) -> R {
            auto a = log_lower_tail(n.left, t), b = log_lower_tail(n.right, t);
            if (!a || !b) return std::nullopt;
            return detail::log_union(*a, *b);
          },
          [&](const node::Max& n) -> R {
            auto a = log_lower_tail(n.left, t), b = log_lower_tail(n.right, t);
            if (!a || !b) return std::nullopt;
            return *a + *b;
          },
          [](const node::SumIndep&) -> R { return std::nullopt; },
          [&](const node::MinWithPareto& n) -> R { return log_lower_tail(n.child, t); },
          [&](const node::Mixture& n) -> R {
            double acc = kNegInf;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
              auto l = log_lower_tail(n.children[i], t);
              if (!l) return std::nullopt;
              acc = detail::log_add(acc, std::log(n.probs[i]) + *l);
            }
            return acc;
          },
          // Pareto, Lognormal, PosPower, Square are bounded below by 0.
          [&](const auto&) -> R { return kNegInf; },
      },
      e.node().v);
}

/// Reads 𝕀(X) = -lim log P(X > x) / log x off the exact tail at
/// x = e^1000, e^2000, e^4000. Returns nullopt when the tail is not
/// available in closed form or the two local slopes neither agree nor
/// steepen (no power-law or lighter behaviour detected).
inline std::optional<ExtReal> tail_slope_index(const DistExpr& e) {
  constexpr double t1 = 1000.0, t2 = 2000.0, t3 = 4000.0;
  auto l1 = log_upper_tail(e, t1), l2 = log_upper_tail(e, t2), l3 = log_upper_tail(e, t3);
  if (!l1 || !l2 || !l3) return std::nullopt;
  if (*l3 == detail::kNegInf) return ExtReal::infinity();
  if (*l2 == detail::kNegInf || *l1 == detail::kNegInf) return std::nullopt;
  const double s1 = -(*l2 - *l1) / (t2 - t1);
  const double s2 = -(*l3 - *l2) / (t3 - t2);
  if (std::abs(s2 - s1) <= 1e-9 * std::max(1.0, std::abs(s2))) {
    return ExtReal::finite(std::max(0.0, s2));
  }
  if (s2 > s1) return ExtReal::infinity();
  return std::nullopt;
}

}  // namespace ruinex
