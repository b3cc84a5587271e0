#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ruinex/rng.hpp"

namespace ruinex {

struct DistNode;

/// Closed expression tree for a one-dimensional law. Immutable and cheap to
/// copy; subtrees are shared. Every combinator draws its children
/// independently of each other.
class DistExpr {
 public:
  static DistExpr point_mass(double value);
  static DistExpr atoms(std::vector<std::pair<double, double>> value_prob);
  static DistExpr pareto(double gamma);
  static DistExpr lognormal(double mu, double sigma);
  static DistExpr normal(double mu, double sigma);
  static DistExpr affine(double scale, double shift, DistExpr child);
  /// (X^+)^exponent
  static DistExpr pos_power(double exponent, DistExpr child);
  static DistExpr square(DistExpr child);
  static DistExpr negate(DistExpr child);
  static DistExpr min(DistExpr left, DistExpr right);
  static DistExpr max(DistExpr left, DistExpr right);
  static DistExpr sum(DistExpr left, DistExpr right);
  /// min(X, W) with W ~ Pareto(gamma) independent of X.
  static DistExpr min_with_pareto(DistExpr child, double gamma);
  static DistExpr mixture(std::vector<std::pair<double, DistExpr>> prob_child);

  [[nodiscard]] const DistNode& node() const { return *node_; }

  /// Short lowercase tag of the root node ("pareto", "affine", ...).
  [[nodiscard]] std::string kind() const;

  friend bool operator==(const DistExpr& a, const DistExpr& b);

 private:
  explicit DistExpr(std::shared_ptr<const DistNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const DistNode> node_;
};

namespace node {
struct PointMass {
  double value;
};
struct Atoms {
  std::vector<double> values;
  std::vector<double> probs;
  std::vector<double> cdf;
};
struct Pareto {
  double gamma;
};
struct Lognormal {
  double mu, sigma;
};
struct Normal {
  double mu, sigma;
};
struct Affine {
  double scale, shift;
  DistExpr child;
};
struct PosPower {
  double exponent;
  DistExpr child;
};
struct Square {
  DistExpr child;
};
struct Negate {
  DistExpr child;
};
struct Min {
  DistExpr left, right;
};
struct Max {
  DistExpr left, right;
};
struct SumIndep {
  DistExpr left, right;
};
struct MinWithPareto {
  DistExpr child;
  double gamma;
};
struct Mixture {
  std::vector<double> probs;
  std::vector<DistExpr> children;
  std::vector<double> cdf;
};
}  // namespace node

struct DistNode {
  std::variant<node::PointMass, node::Atoms, node::Pareto, node::Lognormal,
               node::Normal, node::Affine, node::PosPower, node::Square,
               node::Negate, node::Min, node::Max, node::SumIndep,
               node::MinWithPareto, node::Mixture>
      v;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

constexpr double kProbSumTol = 1e-12;

inline std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  if (!c.empty()) c.back() = 1.0;
  return c;
}

inline std::size_t pick(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace detail

inline DistExpr DistExpr::point_mass(double value) {
  detail::require(std::isfinite(value), "point_mass: value must be finite");
  return DistExpr(std::make_shared<DistNode>(DistNode{node::PointMass{value}}));
}

inline DistExpr DistExpr::atoms(std::vector<std::pair<double, double>> vp) {
  detail::require(!vp.empty(), "atoms: empty atom list");
  std::sort(vp.begin(), vp.end());
  node::Atoms a;
  double total = 0.0;
  for (auto [v, p] : vp) {
    detail::require(std::isfinite(v), "atoms: values must be finite");
    detail::require(p > 0.0, "atoms: probabilities must be positive");
    a.values.push_back(v);
    a.probs.push_back(p);
    total += p;
  }
  detail::require(std::abs(total - 1.0) <= detail::kProbSumTol,
                  "atoms: probabilities must sum to 1");
  a.cdf = detail::cumulative(a.probs);
  return DistExpr(std::make_shared<DistNode>(DistNode{std::move(a)}));
}

inline DistExpr DistExpr::pareto(double gamma) {
  detail::require(gamma > 0.0 && std::isfinite(gamma), "pareto: gamma must be > 0");
  return DistExpr(std::make_shared<DistNode>(DistNode{node::Pareto{gamma}}));
}

inline DistExpr DistExpr::lognormal(double mu, double sigma) {
  detail::require(std::isfinite(mu), "lognormal: mu must be finite");
  detail::require(sigma > 0.0 && std::isfinite(sigma), "lognormal: sigma must be > 0");
  return DistExpr(std::make_shared<DistNode>(DistNode{node::Lognormal{mu, sigma}}));
}

inline DistExpr DistExpr::normal(double mu, double sigma) {
  detail::require(std::isfinite(mu), "normal: mu must be finite");
  detail::require(sigma > 0.0 && std::isfinite(sigma), "normal: sigma must be > 0");
  return DistExpr(std::make_shared<DistNode>(DistNode{node::Normal{mu, sigma}}));
}

inline DistExpr DistExpr::affine(double scale, double shift, DistExpr child) {
  detail::require(scale > 0.0 && std::isfinite(scale), "affine: scale must be > 0");
  detail::require(std::isfinite(shift), "affine: shift must be finite");
  return DistExpr(std::make_shared<DistNode>(
      DistNode{node::Affine{scale, shift, std::move(child)}}));
}

inline DistExpr DistExpr::pos_power(double exponent, DistExpr child) {
  detail::require(exponent > 0.0 && std::isfinite(exponent),
                  "pos_power: exponent must be > 0");
  return DistExpr(std::make_shared<DistNode>(
      DistNode{node::PosPower{exponent, std::move(child)}}));
}

inline DistExpr DistExpr::square(DistExpr child) {
  return DistExpr(std::make_shared<DistNode>(DistNode{node::Square{std::move(child)}}));
}

inline DistExpr DistExpr::negate(DistExpr child) {
  return DistExpr(std::make_shared<DistNode>(DistNode{node::Negate{std::move(child)}}));
}

inline DistExpr DistExpr::min(DistExpr l, DistExpr r) {
  return DistExpr(
      std::make_shared<DistNode>(DistNode{node::Min{std::move(l), std::move(r)}}));
}

inline DistExpr DistExpr::max(DistExpr l, DistExpr r) {
  return DistExpr(
      std::make_shared<DistNode>(DistNode{node::Max{std::move(l), std::move(r)}}));
}

inline DistExpr DistExpr::sum(DistExpr l, DistExpr r) {
  return DistExpr(
      std::make_shared<DistNode>(DistNode{node::SumIndep{std::move(l), std::move(r)}}));
}

inline DistExpr DistExpr::min_with_pareto(DistExpr child, double gamma) {
  detail::require(gamma > 0.0 && std::isfinite(gamma),
                  "min_with_pareto: gamma must be > 0");
  return DistExpr(std::make_shared<DistNode>(
      DistNode{node::MinWithPareto{std::move(child), gamma}}));
}

inline DistExpr DistExpr::mixture(std::vector<std::pair<double, DistExpr>> pc) {
  detail::require(!pc.empty(), "mixture: no components");
  node::Mixture m;
  double total = 0.0;
  for (auto& [p, c] : pc) {
    detail::require(p > 0.0, "mixture: probabilities must be positive");
    m.probs.push_back(p);
    m.children.push_back(std::move(c));
    total += p;
  }
  detail::require(std::abs(total - 1.0) <= detail::kProbSumTol,
                  "mixture: probabilities must sum to 1");
  m.cdf = detail::cumulative(m.probs);
  return DistExpr(std::make_shared<DistNode>(DistNode{std::move(m)}));
}

inline std::string DistExpr::kind() const {
  return std::visit(
      overloaded{
          [](const node::PointMass&) { return "point_mass"; },
          [](const node::Atoms&) { return "atoms"; },
          [](const node::Pareto&) { return "pareto"; },
          [](const node::Lognormal&) { return "lognormal"; },
          [](const node::Normal&) { return "normal"; },
          [](const node::Affine&) { return "affine"; },
          [](const node::PosPower&) { return "pos_power"; },
          [](const node::Square&) { return "square"; },
          [](const node::Negate&) { return "negate"; },
          [](const node::Min&) { return "min"; },
          [](const node::Max&) { return "max"; },
          [](const node::SumIndep&) { return "sum"; },
          [](const node::MinWithPareto&) { return "min_pareto"; },
          [](const node::Mixture&) { return "mixture"; },
      },
      node_->v);
}

inline bool operator==(const DistExpr& a, const DistExpr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = a.node_->v;
  const auto& y = b.node_->v;
  if (x.index() != y.index()) return false;
  return std::visit(
      [&](const auto& lhs) -> bool {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(y);
        if constexpr (std::is_same_v<T, node::PointMass>) {
          return lhs.value == rhs.value;
        } else if constexpr (std::is_same_v<T, node::Atoms>) {
          return lhs.values == rhs.values && lhs.probs == rhs.probs;
        } else if constexpr (std::is_same_v<T, node::Pareto>) {
          return lhs.gamma == rhs.gamma;
        } else if constexpr (std::is_same_v<T, node::Lognormal> ||
                             std::is_same_v<T, node::Normal>) {
          return lhs.mu == rhs.mu && lhs.sigma == rhs.sigma;
        } else if constexpr (std::is_same_v<T, node::Affine>) {
          return lhs.scale == rhs.scale && lhs.shift == rhs.shift &&
                 lhs.child == rhs.child;
        } else if constexpr (std::is_same_v<T, node::PosPower>) {
          return lhs.exponent == rhs.exponent && lhs.child == rhs.child;
        } else if constexpr (std::is_same_v<T, node::Square> ||
                             std::is_same_v<T, node::Negate>) {
          return lhs.child == rhs.child;
        } else if constexpr (std::is_same_v<T, node::Min> ||
                             std::is_same_v<T, node::Max> ||
                             std::is_same_v<T, node::SumIndep>) {
          return lhs.left == rhs.left && lhs.right == rhs.right;
        } else if constexpr (std::is_same_v<T, node::MinWithPareto>) {
          return lhs.gamma == rhs.gamma && lhs.child == rhs.child;
        } else {
          return lhs.probs == rhs.probs && lhs.children == rhs.children;
        }
      },
      x);
}

// ---------------------------------------------------------------------------
// Sampling

/// One draw. Pareto uses the inverse transform U^{-1/gamma}; lognormal
/// exponentiates a Gaussian draw.
inline double draw(const DistExpr& e, Rng& rng) {
  return std::visit(
      overloaded{
          [](const node::PointMass& n) { return n.value; },
          [&](const node::Atoms& n) { return n.values[detail::pick(n.cdf, rng.uniform())]; },
          [&](const node::Pareto& n) { return std::exp(-std::log(rng.uniform()) / n.gamma); },
          [&](const node::Lognormal& n) { return std::exp(n.mu + n.sigma * rng.normal()); },
          [&](const node::Normal& n) { return n.mu + n.sigma * rng.normal(); },
          [&](const node::Affine& n) { return n.scale * draw(n.child, rng) + n.shift; },
          [&](const node::PosPower& n) {
            return std::pow(std::max(draw(n.child, rng), 0.0), n.exponent);
          },
          [&](const node::Square& n) {
            const double x = draw(n.child, rng);
            return x * x;
          },
          [&](const node::Negate& n) { return -draw(n.child, rng); },
          [&](const node::Min& n) {
            const double l = draw(n.left, rng);
            return std::min(l, draw(n.right, rng));
          },
          [&](const node::Max& n) {
            const double l = draw(n.left, rng);
            return std::max(l, draw(n.right, rng));
          },
          [&](const node::SumIndep& n) {
            const double l = draw(n.left, rng);
            return l + draw(n.right, rng);
          },
          [&](const node::MinWithPareto& n) {
            const double x = draw(n.child, rng);
            return std::min(x, std::exp(-std::log(rng.uniform()) / n.gamma));
          },
          [&](const node::Mixture& n) {
            return draw(n.children[detail::pick(n.cdf, rng.uniform())], rng);
          },
      },
      e.node().v);
}

inline std::vector<double> sample_marginal(const DistExpr& e, SeedStream stream,
                                           std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_marginal: n must be >= 1");
  Rng rng(stream);
  std::vector<double> out(n);
  for (auto& x : out) x = draw(e, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Support

/// Essential infimum / supremum; nullopt means unbounded on that side.
struct Support {
  std::optional<double> lo;
  std::optional<double> hi;
};

inline Support support(const DistExpr& e) {
  using O = std::optional<double>;
  auto add = [](O a, O b) -> O { return (a && b) ? O(*a + *b) : O(); };
  return std::visit(
      overloaded{
          [](const node::PointMass& n) { return Support{n.value, n.value}; },
          [](const node::Atoms& n) { return Support{n.values.front(), n.values.back()}; },
          [](const node::Pareto&) { return Support{1.0, std::nullopt}; },
          [](const node::Lognormal&) { return Support{0.0, std::nullopt}; },
          [](const node::Normal&) { return Support{}; },
          [](const node::Affine& n) {
            Support s = support(n.child);
            if (s.lo) s.lo = n.scale * *s.lo + n.shift;
            if (s.hi) s.hi = n.scale * *s.hi + n.shift;
            return s;
          },
          [](const node::PosPower& n) {
            Support s = support(n.child);
            Support r;
            r.lo = s.lo ? std::pow(std::max(*s.lo, 0.0), n.exponent) : 0.0;
            if (s.hi) r.hi = std::pow(std::max(*s.hi, 0.0), n.exponent);
            return r;
          },
          [](const node::Square& n) {
            Support s = support(n.child);
            Support r;
            if (s.lo && *s.lo >= 0.0) {
              r.lo = *s.lo * *s.lo;
              if (s.hi) r.hi = *s.hi * *s.hi;
            } else if (s.hi && *s.hi <= 0.0) {
              r.lo = *s.hi * *s.hi;
              if (s.lo) r.hi = *s.lo * *s.lo;
            } else {
              r.lo = 0.0;
              if (s.lo && s.hi) r.hi = std::max(*s.lo * *s.lo, *s.hi * *s.hi);
            }
            return r;
          },
          [](const node::Negate& n) {
            Support s = support(n.child);
            Support r;
            if (s.hi) r.lo = -*s.hi;
            if (s.lo) r.hi = -*s.lo;
            return r;
          },
          [](const node::Min& n) {
            Support a = support(n.left), b = support(n.right);
            Support r;
            if (a.lo && b.lo) r.lo = std::min(*a.lo, *b.lo);
            if (a.hi || b.hi) r.hi = std::min(a.hi.value_or(INFINITY), b.hi.value_or(INFINITY));
            return r;
          },
          [](const node::Max& n) {
            Support a = support(n.left), b = support(n.right);
            Support r;
            if (a.lo || b.lo) r.lo = std::max(a.lo.value_or(-INFINITY), b.lo.value_or(-INFINITY));
            if (a.hi && b.hi) r.hi = std::max(*a.hi, *b.hi);
            return r;
          },
          [&](const node::SumIndep& n) {
            Support a = support(n.left), b = support(n.right);
            return Support{add(a.lo, b.lo), add(a.hi, b.hi)};
          },
          [](const node::MinWithPareto& n) {
            Support s = support(n.child);
            Support r;
            if (s.lo) r.lo = std::min(*s.lo, 1.0);
            r.hi = s.hi;
            return r;
          },
          [](const node::Mixture& n) {
            Support r = support(n.children.front());
            for (std::size_t i = 1; i < n.children.size(); ++i) {
              Support s = support(n.children[i]);
              r.lo = (r.lo && s.lo) ? O(std::min(*r.lo, *s.lo)) : O();
              r.hi = (r.hi && s.hi) ? O(std::max(*r.hi, *s.hi)) : O();
            }
            return r;
          },
      },
      e.node().v);
}

/// Conservative structural test for P(X > 0) = 1. False means "not shown".
inline bool surely_positive(const DistExpr& e) {
  const Support s = support(e);
  if (s.lo && *s.lo > 0.0) return true;
  return std::visit(
      overloaded{
          [](const node::Lognormal&) { return true; },
          [](const node::Affine& n) { return n.shift >= 0.0 && surely_positive(n.child); },
          [](const node::PosPower& n) { return surely_positive(n.child); },
          [](const node::Square& n) {
            if (std::holds_alternative<node::Normal>(n.child.node().v)) return true;
            const Support c = support(n.child);
            return surely_positive(n.child) || (c.hi && *c.hi < 0.0);
          },
          [](const node::Min& n) { return surely_positive(n.left) && surely_positive(n.right); },
          [](const node::Max& n) { return surely_positive(n.left) || surely_positive(n.right); },
          [](const node::SumIndep& n) {
            return surely_positive(n.left) && surely_positive(n.right);
          },
          [](const node::MinWithPareto& n) { return surely_positive(n.child); },
          [](const node::Mixture& n) {
            return std::all_of(n.children.begin(), n.children.end(),
                               [](const DistExpr& c) { return surely_positive(c); });
          },
          [](const auto&) { return false; },
      },
      e.node().v);
}

}  // namespace ruinex
