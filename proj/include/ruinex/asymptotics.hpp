#pragma once

// Log-log decay slopes of ruin probabilities against predicted exponents,
// finite-horizon index bands, and the I¹ / Z_inf / Z-bar comparison.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ruinex/esssup.hpp"
#include "ruinex/index.hpp"
#include "ruinex/io.hpp"
#include "ruinex/process.hpp"

namespace ruinex {

// ---------------------------------------------------------------------------
// Predicted exponent min(I¹(A), 𝕀(B))

struct PredictedExponent {
  ExtReal value;
  ExtReal lundberg_a;
  ExtReal index_b;
  /// "I1(A)", "I(B)" or "both".
  std::string attained_by;
};

inline PredictedExponent predicted_ultimate_exponent(const JointRiskSpec& spec) {
  const ValidationReport v = validate(spec);
  if (!v.accepted) throw Refusal("spec rejected: " + v.violations.front());
  const BoundednessVerdict b = boundedness_check(spec);
  if (b.bounded) {
    throw Refusal("hypotheses not met: the essential supremum of Y-bar is finite (c = " +
                  ExtReal::finite(*b.witness).to_string() + ")");
  }
  PredictedExponent p;
  p.lundberg_a = lundberg_index(spec.a_marginal()).get();
  p.index_b = upper_tail_index(spec.b_marginal());
  p.value = min(p.lundberg_a, p.index_b);
  p.attained_by = p.lundberg_a == p.index_b ? "both" : (p.lundberg_a < p.index_b ? "I1(A)" : "I(B)");
  return p;
}

// ---------------------------------------------------------------------------
// Slope fit

class InsufficientPoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  /// In log10 units: log10 p = intercept + slope log10 u0.
  double intercept = 0.0;
  std::size_t points = 0;
  std::vector<double> dropped_u0;
};

/// Least squares on (log10 u0, log10 p_hat); grid points whose CI reaches 0
/// are dropped.
inline SlopeFit slope_fit(const RuinEstimate& est) {
  std::vector<double> xs, ys;
  SlopeFit f;
  for (const auto& r : est.rows) {
    if (r.ci_lo > 0.0 && r.p_hat > 0.0) {
      xs.push_back(std::log10(r.u0));
      ys.push_back(std::log10(r.p_hat));
    } else {
      f.dropped_u0.push_back(r.u0);
    }
  }
  const std::size_t n = xs.size();
  if (n < 4) throw InsufficientPoints("slope_fit: fewer than 4 grid points with p_hat > 0");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ssr += e * e;
  }
  f.std_error = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  f.points = n;
  return f;
}

/// Plot data: log10_u0, log10_p_hat, log10_ci_lo, log10_ci_hi, fit_value.
/// Zero probabilities leave the cell empty.
inline void emit_plot_data(std::ostream& os, const RuinEstimate& est, const std::optional<SlopeFit>& fit) {
  auto cell = [](double p) -> std::string {
    if (!(p > 0.0)) return "";
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", std::log10(p));
    return b;
  };
  os << "log10_u0,log10_p_hat,log10_ci_lo,log10_ci_hi,fit_value\n";
  for (const auto& r : est.rows) {
    const double lu = std::log10(r.u0);
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", lu);
    os << b << ',' << cell(r.p_hat) << ',' << cell(r.ci_lo) << ',' << cell(r.ci_hi) << ',';
    if (fit) {
      std::snprintf(b, sizeof b, "%.17g", fit->intercept + fit->slope * lu);
      os << b;
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Ultimate-ruin experiment

enum class Verdict { consistent, inconsistent, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::inconsistent: return "inconsistent";
    default: return "inconclusive";
  }
}

struct RuinExperimentResult {
  std::string spec_digest;
  RuinEstimate estimate;
  std::optional<SlopeFit> fit;
  PredictedExponent predicted;
  Verdict verdict = Verdict::inconclusive;
  double tolerance = 0.25;
  double censoring_fraction = 0.0;
  std::string note;
};

/// Censoring above this fraction makes a too-steep slope inconclusive.
constexpr double kCensoringCap = 0.01;

inline RuinExperimentResult verify_ultimate(const JointRiskSpec& spec, PathConfig cfg, double tolerance = 0.25) {
  RuinExperimentResult r;
  r.spec_digest = spec_digest(spec);
  r.tolerance = tolerance;
  r.predicted = predicted_ultimate_exponent(spec);
  if (!std::holds_alternative<TruncatedUltimate>(cfg.horizon)) cfg.horizon = TruncatedUltimate{};
  r.estimate = estimate_ruin(spec, cfg);
  for (const auto& row : r.estimate.rows) {
    r.censoring_fraction =
        std::max(r.censoring_fraction, static_cast<double>(row.censored) / static_cast<double>(row.n_paths));
  }
  try {
    r.fit = slope_fit(r.estimate);
  } catch (const InsufficientPoints& e) {
    r.note = e.what();
    r.verdict = Verdict::inconclusive;
    return r;
  }
  if (r.predicted.value.is_infinite()) {
    r.note = "predicted exponent is infinite";
    r.verdict = Verdict::inconclusive;
    return r;
  }
  const double target = -r.predicted.value.value();
  const double d = r.fit->slope - target;
  if (std::abs(d) <= tolerance) {
    r.verdict = Verdict::consistent;
  } else if (d < 0.0 && r.censoring_fraction >= kCensoringCap) {
    r.verdict = Verdict::inconclusive;
    r.note = "slope steeper than predicted with censoring above 1%";
  } else {
    r.verdict = Verdict::inconsistent;
  }
  return r;
}

inline json to_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"std_error", f.std_error}, {"intercept_log10", f.intercept},
          {"points", f.points}, {"dropped_u0", f.dropped_u0}};
}

inline json to_json(const PredictedExponent& p) {
  return {{"value", to_json(p.value)}, {"lundberg_index_a", to_json(p.lundberg_a)},
          {"moment_index_b", to_json(p.index_b)}, {"attained_by", p.attained_by}};
}

inline json to_json(const RuinExperimentResult& r) {
  json j{{"spec_digest", r.spec_digest}, {"estimate", to_json(r.estimate)}, {"predicted", to_json(r.predicted)},
         {"verdict", to_string(r.verdict)}, {"tolerance", r.tolerance},
         {"censoring_fraction", r.censoring_fraction}, {"note", r.note}};
  if (r.fit) j["fit"] = to_json(*r.fit);
  return j;
}

// ---------------------------------------------------------------------------
// Finite horizon

struct FiniteBand {
  std::size_t n = 1;
  ExtReal y_prev;
  ExtReal lo;
  ExtReal hi;
};

/// [h(ȳ_{N-1}), lim_{c -> ȳ_{N-1}-} h(c)], the range of 𝕀(Ȳ_N).
inline FiniteBand finite_horizon_band(const JointRiskSpec& spec, std::size_t n) {
  if (n < 1) throw std::invalid_argument("finite_horizon_band: N must be >= 1");
  FiniteBand b;
  b.n = n;
  if (n == 1) {
    b.y_prev = ExtReal::finite(0.0);
  } else {
    const EsssupReport r = esssup_sequence(spec, n - 1);
    b.y_prev = (r.sequence.size() == n) ? r.sequence.back() : ExtReal::infinity();
  }
  b.lo = h_function(spec, b.y_prev).get();
  b.hi = h_left_limit(spec, b.y_prev).get();
  return b;
}

struct FiniteHorizonCheck {
  FiniteBand band;
  IndexValue empirical;
  bool within = false;
};

/// Simulates Ȳ_N and tests whether its estimator band meets the range.
inline FiniteHorizonCheck finite_horizon_check(const JointRiskSpec& spec, std::size_t n, std::size_t samples,
                                               SeedStream stream, const EstimatorConfig& cfg = {},
                                               unsigned workers = 0) {
  FiniteHorizonCheck c;
  c.band = finite_horizon_band(spec, n);
  const auto ys = sample_running_max(spec, stream, n, samples, workers);
  c.empirical = empirical_index(ys, cfg);
  const auto [lo, hi] = c.empirical.band();
  c.within = !(hi < c.band.lo) && !(c.band.hi < lo);
  return c;
}

inline json to_json(const FiniteBand& b) {
  return {{"n", b.n}, {"y_prev", to_json(b.y_prev)}, {"lo", to_json(b.lo)}, {"hi", to_json(b.hi)}};
}

// ---------------------------------------------------------------------------
// I¹(Z) = 𝕀(Z_inf) = 𝕀(Z-bar)

struct LundbergEquivalence {
  ExtReal lundberg;
  IndexValue z_bar;
  IndexValue z_inf;
  std::size_t censored = 0;
  bool agree = false;
};

/// Z_inf = sum_k Z_1...Z_k and Z-bar = sup_k Z_1...Z_k, truncated once the
/// product falls below eps_prod (after min_steps) or at n_max.
inline LundbergEquivalence lundberg_equivalence_check(const DistExpr& z, std::size_t samples, SeedStream base,
                                                      const TruncatedUltimate& tu = {},
                                                      const EstimatorConfig& cfg = {}, unsigned workers = 0) {
  LundbergEquivalence r;
  if (!surely_positive(z)) throw Refusal("lundberg_equivalence_check: Z > 0 a.s. required");
  if (!(expected_log(z) < 0.0)) throw Refusal("lundberg_equivalence_check: E(log Z) >= 0");
  r.lundberg = lundberg_index(z).get();
  struct Out {
    std::vector<double> bar, inf;
    std::size_t censored = 0;
  };
  const double log_eps = std::log(tu.eps_prod);
  auto chunks = run_chunks<Out>(samples, 4096, base, workers,
                                [&](std::size_t, SeedStream s, std::size_t first, std::size_t end) {
                                  Out o;
                                  Rng rng(s);
                                  for (std::size_t i = first; i < end; ++i) {
                                    LogProduct lp;
                                    double sum = 0.0, best = -std::numeric_limits<double>::infinity();
                                    bool stopped = false;
                                    for (std::size_t k = 1; k <= tu.n_max; ++k) {
                                      lp.add(draw(z, rng));
                                      sum += lp.product();
                                      best = std::max(best, lp.log());
                                      if (k >= tu.min_steps && lp.log() < log_eps) {
                                        stopped = true;
                                        break;
                                      }
                                    }
                                    if (!stopped) ++o.censored;
                                    o.bar.push_back(std::exp(best));
                                    o.inf.push_back(sum);
                                  }
                                  return o;
                                });
  std::vector<double> bar, inf;
  for (auto& c : chunks) {
    bar.insert(bar.end(), c.bar.begin(), c.bar.end());
    inf.insert(inf.end(), c.inf.begin(), c.inf.end());
    r.censored += c.censored;
  }
  r.z_bar = empirical_index(bar, cfg);
  r.z_inf = empirical_index(inf, cfg);
  auto contains = [&](const IndexValue& v) {
    const auto [lo, hi] = v.band();
    return !(r.lundberg < lo) && !(hi < r.lundberg);
  };
  r.agree = contains(r.z_bar) && contains(r.z_inf);
  return r;
}

}  // namespace ruinex
