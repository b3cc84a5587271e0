#pragma once

// Moment index 𝕀, Lundberg index I¹ and h(c) = 𝕀(B + cA).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ruinex/dist_expr.hpp"
#include "ruinex/ext_real.hpp"
#include "ruinex/joint.hpp"
#include "ruinex/moments.hpp"
#include "ruinex/tail.hpp"

namespace ruinex {

enum class IndexMethod { analytic, empirical };

enum class Estimator { rank_loglog, hill };

inline const char* to_string(Estimator e) { return e == Estimator::hill ? "hill" : "rank-loglog"; }
inline const char* to_string(IndexMethod m) {
  return m == IndexMethod::analytic ? "analytic" : "empirical";
}

struct EstimatorConfig {
  Estimator estimator = Estimator::rank_loglog;
  double top_fraction = 0.01;
  std::size_t min_exceedances = 200;
  /// Negative samples are dropped (index of X^+). When false, |X| is used.
  bool positive_part = true;

  void check() const {
    if (!(top_fraction > 0.0 && top_fraction <= 0.5)) {
      throw std::invalid_argument("EstimatorConfig: top_fraction must lie in (0, 0.5]");
    }
    if (min_exceedances < 2) throw std::invalid_argument("EstimatorConfig: min_exceedances >= 2");
  }
};

struct EmpiricalDetail {
  double point = 0.0;
  ExtReal band_lo;
  ExtReal band_hi;
  double std_error = 0.0;
  Estimator estimator = Estimator::rank_loglog;
  /// Smallest order statistic used in the fit.
  double threshold = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  /// Estimate over the top k/4; NaN when k/4 < 50.
  double stable_point = std::numeric_limits<double>::quiet_NaN();
};

struct IndexValue {
  /// Empty means the calculus could not determine the value.
  std::optional<ExtReal> value;
  IndexMethod method = IndexMethod::analytic;
  std::optional<EmpiricalDetail> empirical;
  bool degenerate_positive_part = false;
  bool heavy_uncertainty = false;
  std::vector<std::string> notes;

  static IndexValue analytic(ExtReal v) { return {v, IndexMethod::analytic, {}, false, false, {}}; }
  static IndexValue unknown(std::string why) {
    IndexValue r{std::nullopt, IndexMethod::analytic, {}, false, false, {}};
    r.notes.push_back(std::move(why));
    return r;
  }

  [[nodiscard]] bool known() const { return value.has_value(); }
  [[nodiscard]] ExtReal get() const {
    if (!value) throw std::logic_error("IndexValue: unknown");
    return *value;
  }
  /// [lo, hi]; a point interval for analytic values.
  [[nodiscard]] std::pair<ExtReal, ExtReal> band() const {
    if (empirical) return {empirical->band_lo, empirical->band_hi};
    return {get(), get()};
  }
};

// ---------------------------------------------------------------------------
// Analytic 𝕀

inline IndexValue analytic_index(const DistExpr& e) { return IndexValue::analytic(upper_tail_index(e)); }

// ---------------------------------------------------------------------------
// Empirical 𝕀

namespace detail {

inline double qq_slope_index(std::span<const double> top, std::size_t n) {
  // log X_(i) against -log((i - 1/2)/n); slope estimates 1/alpha.
  const std::size_t k = top.size();
  if (top.front() == top.back()) return std::numeric_limits<double>::infinity();
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(k), ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    xs[i] = -std::log((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    ys[i] = std::log(top[i]);
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  return slope > 0.0 ? 1.0 / slope : std::numeric_limits<double>::infinity();
}

/// top: descending order statistics X_(1) >= ... >= X_(k+1).
inline double hill_index(std::span<const double> top) {
  const std::size_t k = top.size() - 1;
  if (top.front() == top.back()) return std::numeric_limits<double>::infinity();
  const double lt = std::log(top[k]);
  double h = 0.0;
  for (std::size_t i = 0; i < k; ++i) h += std::log(top[i]) - lt;
  h /= static_cast<double>(k);
  return h > 0.0 ? 1.0 / h : std::numeric_limits<double>::infinity();
}

constexpr double kZ95 = 1.959963984540054;

}  // namespace detail

/// Tail-exponent estimate over the top k = max(ceil(frac n), min_exceedances)
/// positive order statistics. Rank-log-log regression (default) or Hill, with
/// a normal-approximation 95% band widened to cover the band at k/4. The heavy-uncertainty flag is raised when
/// the Hill estimate on the top k/10 exceeds the one on the top k by more than
/// three standard errors (local index still rising); the band is then
/// open-ended above.
inline IndexValue empirical_index(std::span<const double> samples, const EstimatorConfig& cfg = {}) {
  cfg.check();
  std::vector<double> pos;
  pos.reserve(samples.size() / 4 + 1);
  for (double x : samples) {
    const double v = cfg.positive_part ? x : std::abs(x);
    if (v > 0.0 && std::isfinite(v)) pos.push_back(v);
  }
  const std::size_t n = samples.size();
  IndexValue r;
  r.method = IndexMethod::empirical;
  if (pos.size() < cfg.min_exceedances + 1) {
    r.value = ExtReal::infinity();
    r.degenerate_positive_part = true;
    r.empirical = EmpiricalDetail{std::numeric_limits<double>::infinity(), ExtReal::infinity(),
                                  ExtReal::infinity(), 0.0, cfg.estimator, 0.0, pos.size(), n};
    r.notes.push_back("fewer than min_exceedances positive samples");
    return r;
  }
  std::size_t k = std::max<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.top_fraction * static_cast<double>(n))),
      cfg.min_exceedances);
  k = std::min(k, pos.size() - 1);
  std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k + 1), pos.end(),
                    std::greater<>());
  const std::span<const double> top(pos.data(), k + 1);

  double est = 0.0, se = 0.0;
  if (cfg.estimator == Estimator::hill) {
    est = detail::hill_index(top);
    se = est / std::sqrt(static_cast<double>(k));
  } else {
    est = detail::qq_slope_index(top.first(k), n);
    se = est * std::sqrt(2.0 / static_cast<double>(k));
  }
  EmpiricalDetail d;
  d.point = est;
  d.std_error = se;
  d.estimator = cfg.estimator;
  d.threshold = top[k - 1];
  d.k = k;
  d.n = n;

  const std::size_t k_small = k / 10;
  if (k_small >= 20 && std::isfinite(est)) {
    const double h_all = detail::hill_index(top);
    const double h_small = detail::hill_index(top.first(k_small + 1));
    const double se_small = h_small / std::sqrt(static_cast<double>(k_small));
    if (h_small - h_all > 3.0 * se_small) r.heavy_uncertainty = true;
  }

  if (!std::isfinite(est)) {
    r.value = ExtReal::infinity();
    d.band_lo = d.band_hi = ExtReal::infinity();
  } else {
    r.value = ExtReal::finite(est);
    double lo = est - detail::kZ95 * se, hi = est + detail::kZ95 * se;
    // Threshold stability: the band also covers the interval at k/4.
    const std::size_t k4 = k / 4;
    if (k4 >= 50) {
      double e4 = 0.0, se4 = 0.0;
      if (cfg.estimator == Estimator::hill) {
        e4 = detail::hill_index(top.first(k4 + 1));
        se4 = e4 / std::sqrt(static_cast<double>(k4));
      } else {
        e4 = detail::qq_slope_index(top.first(k4), n);
        se4 = e4 * std::sqrt(2.0 / static_cast<double>(k4));
      }
      if (std::isfinite(e4)) {
        lo = std::min(lo, e4 - detail::kZ95 * se4);
        hi = std::max(hi, e4 + detail::kZ95 * se4);
        d.stable_point = e4;
      }
    }
    d.band_lo = ExtReal::finite(std::max(0.0, lo));
    d.band_hi = r.heavy_uncertainty ? ExtReal::infinity() : ExtReal::finite(hi);
  }
  r.empirical = d;
  return r;
}

/// empirical_index restricted to samples where mask is true.
inline IndexValue conditional_index(std::span<const double> samples, const std::vector<bool>& mask,
                                    const EstimatorConfig& cfg = {}) {
  if (mask.size() != samples.size()) {
    throw std::invalid_argument("conditional_index: mask length differs from sample length");
  }
  std::vector<double> sel;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (mask[i]) sel.push_back(samples[i]);
  }
  if (sel.empty()) throw std::invalid_argument("conditional_index: empty event");
  return empirical_index(sel, cfg);
}

// ---------------------------------------------------------------------------
// Lundberg index I¹(A) = sup{s >= 0 : E(A^s) <= 1}

namespace detail {

/// Shared bracketing + bisection on log m(s). m returns +inf for divergence.
template <class M>
IndexValue lundberg_search(M&& m, double e_log, double s_cap) {
  constexpr double kRelTol = 1e-8;
  if (e_log >= 0.0) {
    auto r = IndexValue::analytic(ExtReal::finite(0.0));
    r.notes.push_back("no-decay: E(log A) >= 0, so E(A^s) > 1 for every s > 0");
    return r;
  }
  double lo = 0.0, hi = 0.0;
  double s = 1e-6;
  bool bracketed = false;
  while (!bracketed) {
    if (s > s_cap) return IndexValue::analytic(ExtReal::infinity());
    const double v = m(s);
    if (std::isinf(v)) {
      // Locate the divergence point from below; stop early on a crossing.
      double fin = lo, inf = s;
      for (int it = 0; it < 200 && inf - fin > kRelTol * inf; ++it) {
        const double mid = 0.5 * (fin + inf);
        const double vm = m(mid);
        if (std::isinf(vm)) {
          inf = mid;
        } else if (vm > 1.0) {
          hi = mid;
          lo = fin;
          bracketed = true;
          break;
        } else {
          fin = mid;
        }
      }
      if (!bracketed) {
        auto r = IndexValue::analytic(ExtReal::finite(fin));
        r.notes.push_back("E(A^s) <= 1 up to the divergence point");
        return r;
      }
    } else if (v > 1.0) {
      hi = s;
      bracketed = true;
    } else {
      lo = s;
      s *= 2.0;
    }
  }
  while (hi - lo > kRelTol * hi) {
    const double mid = 0.5 * (lo + hi);
    const double vm = m(mid);
    if (std::isinf(vm) || std::log(vm) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return IndexValue::analytic(ExtReal::finite(0.5 * (lo + hi)));
}

}  // namespace detail

/// I¹(A) from the exact moment function (closed form or quadrature).
inline IndexValue lundberg_index(const DistExpr& a) {
  if (!surely_positive(a)) throw std::invalid_argument("lundberg_index: A > 0 a.s. required");
  auto m = [&](double s) { return analytic_fractional_moment(a, s).value.to_double(); };
  return detail::lundberg_search(m, expected_log(a), 1e6);
}

/// I¹(A) from a sample of A via the empirical moment function. When the
/// moment index of A is known, s is kept below it and a warning is attached
/// if n < 1e4 / (𝕀(A) - s)^2 at the root.
inline IndexValue lundberg_index_mc(std::span<const double> a_samples,
                                    std::optional<ExtReal> known_index = std::nullopt) {
  if (a_samples.empty()) throw std::invalid_argument("lundberg_index_mc: no samples");
  std::vector<double> logs(a_samples.size());
  double e_log = 0.0;
  for (std::size_t i = 0; i < a_samples.size(); ++i) {
    if (!(a_samples[i] > 0.0)) throw std::invalid_argument("lundberg_index_mc: A > 0 required");
    logs[i] = std::log(a_samples[i]);
    e_log += logs[i];
  }
  e_log /= static_cast<double>(logs.size());
  const double cap = (known_index && known_index->is_finite()) ? known_index->value() : 1e6;
  auto m = [&](double s) {
    if (s >= cap) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double l : logs) acc += std::exp(s * l);
    return acc / static_cast<double>(logs.size());
  };
  IndexValue r = detail::lundberg_search(m, e_log, 1e6);
  r.method = IndexMethod::empirical;
  const double n = static_cast<double>(a_samples.size());
  if (!known_index) {
    r.notes.push_back("warning: moment index of A unknown; sample-size rule not checked");
  } else if (r.value && r.value->is_finite() && known_index->is_finite()) {
    const double gap = known_index->value() - r.value->value();
    if (gap <= 0.0 || n < 1e4 / (gap * gap)) {
      r.notes.push_back("warning: n below 1e4/(I(A)-s)^2; empirical moment unstable near divergence");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// h(c) = 𝕀(B + cA)

namespace detail {

inline ExtReal branch_h(const BranchMixture& m, double c) {
  ExtReal r = ExtReal::infinity();
  for (const auto& br : m.branches) {
    if (br.gamma && br.b.slope + c * br.a.slope > 0.0) r = min(r, ExtReal::finite(*br.gamma));
  }
  return r;
}

/// Limit of h as c -> inf: the sign of b + c a is eventually the sign of a,
/// or of b when a = 0.
inline ExtReal branch_h_inf(const BranchMixture& m) {
  ExtReal r = ExtReal::infinity();
  for (const auto& br : m.branches) {
    const bool pos = br.a.slope > 0.0 || (br.a.slope == 0.0 && br.b.slope > 0.0);
    if (br.gamma && pos) r = min(r, ExtReal::finite(*br.gamma));
  }
  return r;
}

inline DistExpr b_plus_c_a(const JointRiskSpec& spec, double c) {
  return std::visit(
      overloaded{
          [&](const IndepProduct& s) {
            if (c == 0.0) return s.b;
            return DistExpr::sum(s.b, DistExpr::affine(c, 0.0, s.a));
          },
          [&](const ArchCoupling& s) {
            return DistExpr::affine(s.beta + c * s.lambda, 0.0, DistExpr::square(s.z));
          },
          [&](const BranchMixture& m) {
            std::vector<std::pair<double, DistExpr>> pc;
            for (const auto& br : m.branches) {
              const AffineCoef k{br.b.constant + c * br.a.constant, br.b.slope + c * br.a.slope};
              pc.emplace_back(br.prob, affine_of_driver(k, br.gamma));
            }
            return pc.size() == 1 ? pc.front().second : DistExpr::mixture(std::move(pc));
          },
      },
      spec.v());
}

}  // namespace detail

/// h(c) for c in [0, inf]; c = inf gives lim_{c -> inf} h(c).
inline IndexValue h_function(const JointRiskSpec& spec, ExtReal c) {
  if (c < ExtReal::finite(0.0)) throw std::invalid_argument("h_function: c must be >= 0");
  if (const auto* m = spec.as_branches()) {
    return IndexValue::analytic(c.is_infinite() ? detail::branch_h_inf(*m)
                                                : detail::branch_h(*m, c.value()));
  }
  // Independent and ARCH cases are constant on (0, inf).
  const double cc = c.is_infinite() ? 1.0 : c.value();
  return analytic_index(detail::b_plus_c_a(spec, cc));
}

inline IndexValue h_function(const JointRiskSpec& spec, double c) {
  return h_function(spec, ExtReal::finite(c));
}

/// Points c > 0 where h may jump: roots of b_j + c a_j for Pareto branches.
inline std::vector<double> h_breakpoints(const JointRiskSpec& spec) {
  std::vector<double> out;
  if (const auto* m = spec.as_branches()) {
    for (const auto& br : m->branches) {
      if (br.gamma && br.a.slope != 0.0) {
        const double c = -br.b.slope / br.a.slope;
        if (c > 0.0) out.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// lim_{x -> c-} h(x); h(0) at c = 0. Evaluated at a point strictly between
/// c and the nearest breakpoint below it, where h is constant.
inline IndexValue h_left_limit(const JointRiskSpec& spec, ExtReal c) {
  if (c.is_infinite()) return h_function(spec, c);
  const double cv = c.value();
  if (cv <= 0.0) return h_function(spec, 0.0);
  double below = 0.0;
  for (double b : h_breakpoints(spec)) {
    if (b < cv) below = std::max(below, b);
  }
  return h_function(spec, 0.5 * (below + cv));
}

/// h(c) estimated from a sample of B + cA.
inline IndexValue h_function_empirical(const JointRiskSpec& spec, double c, SeedStream stream,
                                       std::size_t n, const EstimatorConfig& cfg = {}) {
  const auto pairs = sample_joint(spec, stream, n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = pairs[i].b + c * pairs[i].a;
  return empirical_index(v, cfg);
}

}  // namespace ruinex
