#pragma once

// Paths of Y_n and U_n, ruin times, running maxima, truncated perpetuities and
// the random-walk special case. Monte Carlo runs are split into fixed-size
// chunks of paths; chunk i draws from base.child(i), so estimates do not
// depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include "ruinex/joint.hpp"
#include "ruinex/moments.hpp"
#include "ruinex/rng.hpp"

namespace ruinex {

/// A precondition of the requested estimate does not hold; the message is
/// the verdict.
class Refusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FiniteHorizon {
  std::size_t n = 100;
};

struct TruncatedUltimate {
  double eps_prod = 1e-8;
  std::size_t n_max = 100'000;
  std::size_t min_steps = 50;
};

using Horizon = std::variant<FiniteHorizon, TruncatedUltimate>;

struct PathConfig {
  Horizon horizon = TruncatedUltimate{};
  std::size_t n_paths = 100'000;
  SeedStream base{};
  std::vector<double> u0_grid;
  std::size_t chunk_size = 4096;
  /// 0 means hardware concurrency.
  unsigned workers = 0;

  void check() const {
    if (n_paths == 0) throw std::invalid_argument("PathConfig: n_paths must be >= 1");
    if (chunk_size == 0) throw std::invalid_argument("PathConfig: chunk_size must be >= 1");
    if (u0_grid.empty()) throw std::invalid_argument("PathConfig: empty U0 grid");
    for (std::size_t i = 0; i < u0_grid.size(); ++i) {
      if (!(u0_grid[i] > 0.0)) throw std::invalid_argument("PathConfig: U0 must be positive");
      if (i > 0 && !(u0_grid[i] > u0_grid[i - 1])) {
        throw std::invalid_argument("PathConfig: U0 grid must be strictly increasing");
      }
    }
    if (const auto* t = std::get_if<TruncatedUltimate>(&horizon)) {
      if (!(t->eps_prod > 0.0 && t->eps_prod < 1.0)) {
        throw std::invalid_argument("PathConfig: eps_prod must lie in (0, 1)");
      }
      if (t->n_max < 1) throw std::invalid_argument("PathConfig: n_max must be >= 1");
    } else if (std::get<FiniteHorizon>(horizon).n < 1) {
      throw std::invalid_argument("PathConfig: horizon n must be >= 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Chunked parallel runner

/// Calls body(chunk_index, stream, first_path, end_path) for every chunk on a
/// pool of threads and returns the per-chunk results in chunk order.
template <class R, class Body>
std::vector<R> run_chunks(std::size_t n_paths, std::size_t chunk_size, SeedStream base,
                          unsigned workers, Body&& body) {
  const std::size_t n_chunks = (n_paths + chunk_size - 1) / chunk_size;
  std::vector<R> out(n_chunks);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_chunks, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t c = next++; c < n_chunks && !failed; c = next++) {
        const std::size_t first = c * chunk_size;
        out[c] = body(c, base.child(c), first, std::min(n_paths, first + chunk_size));
      }
    } catch (...) {
      if (!failed.exchange(true)) error = std::current_exception();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------------------
// Single paths

/// Running product A_1 ... A_n, kept both directly (used for Y, exact for
/// dyadic factors) and as a Kahan-compensated sum of log A_j (used for the
/// truncation rule, immune to underflow).
class LogProduct {
 public:
  void add(double a) {
    prod_ *= a;
    const double y = std::log(a) - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  [[nodiscard]] double log() const { return sum_; }
  [[nodiscard]] double product() const { return prod_; }

 private:
  double prod_ = 1.0;
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct YPath {
  std::vector<double> y;
  std::vector<double> running_max;
  /// A_1 ... A_n
  double product = 1.0;
  double log_product = 0.0;
};

/// Y_i = Y_{i-1} + A_1 ... A_{i-1} B_i, i = 1..n.
inline YPath simulate_y_path(const JointRiskSpec& spec, SeedStream stream, std::size_t n) {
  if (n < 1) throw std::invalid_argument("simulate_y_path: n must be >= 1");
  Rng rng(stream);
  YPath p;
  p.y.reserve(n);
  p.running_max.reserve(n);
  LogProduct lp;
  double y = 0.0, m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const RiskPair ab = draw_joint(spec, rng);
    y += lp.product() * ab.b;
    lp.add(ab.a);
    m = std::max(m, y);
    p.y.push_back(y);
    p.running_max.push_back(m);
  }
  p.product = lp.product();
  p.log_product = lp.log();
  return p;
}

struct RuinTime {
  /// First n with Y_n > U0.
  std::optional<std::size_t> t;
  /// Stopped at n_max without ruin (truncated-ultimate only).
  bool censored = false;
  std::size_t steps = 0;
};

inline RuinTime ruin_time(const JointRiskSpec& spec, SeedStream stream, double u0,
                          const Horizon& horizon) {
  if (!(u0 > 0.0)) throw std::invalid_argument("ruin_time: U0 must be positive");
  Rng rng(stream);
  LogProduct lp;
  double y = 0.0;
  const auto* tu = std::get_if<TruncatedUltimate>(&horizon);
  const std::size_t n_cap = tu ? tu->n_max : std::get<FiniteHorizon>(horizon).n;
  const double log_eps = tu ? std::log(tu->eps_prod) : 0.0;
  RuinTime r;
  for (std::size_t k = 1; k <= n_cap; ++k) {
    const RiskPair ab = draw_joint(spec, rng);
    y += lp.product() * ab.b;
    lp.add(ab.a);
    r.steps = k;
    if (y > u0) {
      r.t = k;
      return r;
    }
    if (tu && k >= tu->min_steps && lp.log() < log_eps) return r;
  }
  r.censored = tu != nullptr;
  return r;
}

struct CapitalPath {
  std::vector<double> u;
  /// First n with U_n < 0.
  std::optional<std::size_t> t;
};

/// U_n = (1 + r_n)(U_{n-1} - B_n) with r_n = 1/A_n - 1. Consumes the stream
/// exactly like simulate_y_path, so both forms see the same (A_n, B_n).
inline CapitalPath capital_path(const JointRiskSpec& spec, SeedStream stream, double u0,
                                std::size_t n) {
  if (!(u0 > 0.0)) throw std::invalid_argument("capital_path: U0 must be positive");
  Rng rng(stream);
  CapitalPath p;
  p.u.reserve(n);
  double u = u0;
  for (std::size_t k = 1; k <= n; ++k) {
    const RiskPair ab = draw_joint(spec, rng);
    u = (u - ab.b) / ab.a;
    p.u.push_back(u);
    if (u < 0.0 && !p.t) p.t = k;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Ruin probability estimates

struct RuinRow {
  double u0 = 0.0;
  std::size_t n_paths = 0;
  std::size_t ruins = 0;
  std::size_t censored = 0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct RuinEstimate {
  std::vector<RuinRow> rows;
  std::string horizon;
  SeedStream seed{};
  std::size_t total_steps = 0;
};

/// Wilson score interval at 95%.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n) {
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
  const double den = 1.0 + z * z / nn;
  const double mid = (p + z * z / (2.0 * nn)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / den;
  return {k == 0 ? 0.0 : std::max(0.0, mid - half), k == n ? 1.0 : std::min(1.0, mid + half)};
}

inline RuinRow make_row(double u0, std::size_t n, std::size_t ruins, std::size_t censored) {
  RuinRow r{u0, n, ruins, censored, static_cast<double>(ruins) / static_cast<double>(n), 0.0, 0.0};
  std::tie(r.ci_lo, r.ci_hi) = wilson_interval(ruins, n);
  return r;
}

/// E(log A) < 0 checked analytically; a Monte Carlo estimate with a 3-sigma
/// margin is used when the analytic evaluation fails.
inline double checked_expected_log_a(const JointRiskSpec& spec, SeedStream stream) {
  const DistExpr a = spec.a_marginal();
  try {
    return expected_log(a);
  } catch (const std::exception&) {
    constexpr std::size_t n = 1'000'000;
    const auto xs = sample_marginal(a, stream, n);
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
      const double l = std::log(x);
      s += l;
      s2 += l * l;
    }
    const double m = s / n, sd = std::sqrt(std::max(0.0, s2 / n - m * m) / n);
    return m + 3.0 * sd;
  }
}

inline std::string describe(const Horizon& h) {
  if (const auto* f = std::get_if<FiniteHorizon>(&h)) return "finite(n=" + std::to_string(f->n) + ")";
  const auto& t = std::get<TruncatedUltimate>(h);
  char buf[128];
  std::snprintf(buf, sizeof buf, "truncated-ultimate(eps_prod=%g, n_max=%zu, min_steps=%zu)",
                t.eps_prod, t.n_max, t.min_steps);
  return buf;
}

namespace detail {

struct PathMaxOutcome {
  double max = -std::numeric_limits<double>::infinity();
  bool censored = false;
  std::size_t steps = 0;
};

/// Running maximum of Y over the horizon; stops once it exceeds stop_above.
inline PathMaxOutcome path_max(const JointRiskSpec& spec, Rng& rng, const Horizon& horizon,
                               double stop_above) {
  const auto* tu = std::get_if<TruncatedUltimate>(&horizon);
  const std::size_t n_cap = tu ? tu->n_max : std::get<FiniteHorizon>(horizon).n;
  const double log_eps = tu ? std::log(tu->eps_prod) : 0.0;
  LogProduct lp;
  double y = 0.0;
  PathMaxOutcome o;
  for (std::size_t k = 1; k <= n_cap; ++k) {
    const RiskPair ab = draw_joint(spec, rng);
    y += lp.product() * ab.b;
    lp.add(ab.a);
    o.max = std::max(o.max, y);
    o.steps = k;
    if (o.max > stop_above) return o;
    if (tu && k >= tu->min_steps && lp.log() < log_eps) return o;
  }
  o.censored = tu != nullptr;
  return o;
}

struct GridCounts {
  std::vector<std::size_t> ruins, censored;
  std::size_t steps = 0;
};

inline RuinEstimate finish(const std::vector<GridCounts>& chunks, const std::vector<double>& grid,
                           std::size_t n_paths, std::string horizon, SeedStream seed) {
  RuinEstimate est;
  est.horizon = std::move(horizon);
  est.seed = seed;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::size_t ruins = 0, cens = 0;
    for (const auto& c : chunks) {
      ruins += c.ruins[g];
      cens += c.censored[g];
    }
    est.rows.push_back(make_row(grid[g], n_paths, ruins, cens));
  }
  for (const auto& c : chunks) est.total_steps += c.steps;
  return est;
}

}  // namespace detail

/// P(T <= n) (finite horizon) or the truncated estimate of P(T < inf) on the
/// U0 grid. One path serves every grid point through its running maximum.
/// Truncation can only miss ruins, so the estimate is biased downwards; the
/// censored column counts paths that hit n_max without ruin.
inline RuinEstimate estimate_ruin(const JointRiskSpec& spec, const PathConfig& cfg) {
  cfg.check();
  const ValidationReport v = validate(spec);
  if (!v.accepted) throw Refusal("estimate_ruin: spec rejected: " + v.violations.front());
  if (std::holds_alternative<TruncatedUltimate>(cfg.horizon)) {
    const double el = checked_expected_log_a(spec, cfg.base.child(~0ULL));
    if (!(el < 0.0)) {
      throw Refusal("estimate_ruin: E(log A) >= 0; ruin is certain at every U0 by drift");
    }
  }
  const auto& grid = cfg.u0_grid;
  const double top = grid.back();
  auto chunks = run_chunks<detail::GridCounts>(
      cfg.n_paths, cfg.chunk_size, cfg.base, cfg.workers,
      [&](std::size_t, SeedStream s, std::size_t first, std::size_t end) {
        detail::GridCounts c{std::vector<std::size_t>(grid.size()),
                             std::vector<std::size_t>(grid.size()), 0};
        Rng rng(s);
        for (std::size_t p = first; p < end; ++p) {
          const auto o = detail::path_max(spec, rng, cfg.horizon, top);
          c.steps += o.steps;
          for (std::size_t g = 0; g < grid.size(); ++g) {
            if (o.max > grid[g]) {
              ++c.ruins[g];
            } else if (o.censored) {
              ++c.censored[g];
            }
          }
        }
        return c;
      });
  return detail::finish(chunks, grid, cfg.n_paths, describe(cfg.horizon), cfg.base);
}

// ---------------------------------------------------------------------------
// Perpetuity and the distributional recursion

struct PerpetuitySample {
  /// Partial sum at truncation.
  double y_inf = 0.0;
  /// Running maximum of the same partial sums.
  double y_max = -std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
  bool censored = false;
};

/// Refuses unless E(log A) < 0 and E(log^+|B|) < inf.
inline void check_perpetuity_preconditions(const JointRiskSpec& spec, SeedStream stream) {
  if (!(checked_expected_log_a(spec, stream) < 0.0)) {
    throw Refusal("perpetuity: E(log A) >= 0, the series does not converge");
  }
  const DistExpr b = spec.b_marginal();
  if (!(upper_tail_index(b) > ExtReal::finite(0.0) && lower_tail_index(b) > ExtReal::finite(0.0))) {
    throw Refusal("perpetuity: E(log^+|B|) not established finite");
  }
}

/// One truncated draw of Y_inf (stopping rule as for truncated-ultimate).
inline PerpetuitySample perpetuity_draw(const JointRiskSpec& spec, Rng& rng,
                                        const TruncatedUltimate& tu) {
  LogProduct lp;
  const double log_eps = std::log(tu.eps_prod);
  PerpetuitySample s;
  double y = 0.0;
  for (std::size_t k = 1; k <= tu.n_max; ++k) {
    const RiskPair ab = draw_joint(spec, rng);
    y += lp.product() * ab.b;
    lp.add(ab.a);
    s.y_max = std::max(s.y_max, y);
    s.steps = k;
    if (k >= tu.min_steps && lp.log() < log_eps) {
      s.y_inf = y;
      return s;
    }
  }
  s.y_inf = y;
  s.censored = true;
  return s;
}

inline PerpetuitySample perpetuity_sample(const JointRiskSpec& spec, SeedStream stream,
                                          const TruncatedUltimate& tu = {}) {
  check_perpetuity_preconditions(spec, stream.child(~0ULL));
  Rng rng(stream);
  return perpetuity_draw(spec, rng, tu);
}

/// n independent truncated draws of (Y_inf, running max), chunked.
inline std::vector<PerpetuitySample> perpetuity_samples(const JointRiskSpec& spec, SeedStream base,
                                                        std::size_t n,
                                                        const TruncatedUltimate& tu = {},
                                                        unsigned workers = 0) {
  check_perpetuity_preconditions(spec, base.child(~0ULL));
  constexpr std::size_t chunk = 4096;
  auto chunks = run_chunks<std::vector<PerpetuitySample>>(
      n, chunk, base, workers, [&](std::size_t, SeedStream s, std::size_t first, std::size_t end) {
        Rng rng(s);
        std::vector<PerpetuitySample> out;
        out.reserve(end - first);
        for (std::size_t i = first; i < end; ++i) out.push_back(perpetuity_draw(spec, rng, tu));
        return out;
      });
  std::vector<PerpetuitySample> all;
  all.reserve(n);
  for (auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return all;
}

/// n draws of Ȳ_N = max(Y_1, ..., Y_N).
inline std::vector<double> sample_running_max(const JointRiskSpec& spec, SeedStream base,
                                              std::size_t horizon, std::size_t n,
                                              unsigned workers = 0) {
  constexpr std::size_t chunk = 4096;
  const Horizon h = FiniteHorizon{horizon};
  auto chunks = run_chunks<std::vector<double>>(
      n, chunk, base, workers, [&](std::size_t, SeedStream s, std::size_t first, std::size_t end) {
        Rng rng(s);
        std::vector<double> out;
        out.reserve(end - first);
        for (std::size_t i = first; i < end; ++i) {
          out.push_back(detail::path_max(spec, rng, h, std::numeric_limits<double>::infinity()).max);
        }
        return out;
      });
  std::vector<double> all;
  all.reserve(n);
  for (auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return all;
}

/// n draws of V_N from V_k = B_k + A_k V_{k-1}^+, V_0 = 0.
inline std::vector<double> sample_v_recursion(const JointRiskSpec& spec, SeedStream stream,
                                              std::size_t horizon, std::size_t n) {
  Rng rng(stream);
  std::vector<double> out(n);
  for (auto& v : out) {
    double x = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
      const RiskPair ab = draw_joint(spec, rng);
      x = ab.b + ab.a * std::max(x, 0.0);
    }
    v = x;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random walk S_n = B_1 + ... + B_n (A = 1)

/// P(max_{k<=n} S_k > u) on the grid. Requires E(B) < 0.
inline RuinEstimate random_walk_sup(const DistExpr& b, SeedStream base, std::size_t horizon,
                                    const std::vector<double>& u_grid, std::size_t n_paths,
                                    unsigned workers = 0) {
  double mean = 0.0;
  try {
    mean = expected_value(b);
  } catch (const std::domain_error&) {
    throw Refusal("random_walk_sup: E|B| is infinite");
  }
  if (!(mean < 0.0)) throw Refusal("random_walk_sup: E(B) >= 0 (nonnegative drift)");
  PathConfig cfg;
  cfg.horizon = FiniteHorizon{horizon};
  cfg.n_paths = n_paths;
  cfg.base = base;
  cfg.u0_grid = u_grid;
  cfg.check();
  const double top = u_grid.back();
  auto chunks = run_chunks<detail::GridCounts>(
      n_paths, cfg.chunk_size, base, workers,
      [&](std::size_t, SeedStream s, std::size_t first, std::size_t end) {
        detail::GridCounts c{std::vector<std::size_t>(u_grid.size()),
                             std::vector<std::size_t>(u_grid.size()), 0};
        Rng rng(s);
        for (std::size_t p = first; p < end; ++p) {
          double sum = 0.0, m = -std::numeric_limits<double>::infinity();
          std::size_t k = 0;
          while (k < horizon && m <= top) {
            sum += draw(b, rng);
            m = std::max(m, sum);
            ++k;
          }
          c.steps += k;
          for (std::size_t g = 0; g < u_grid.size(); ++g) {
            if (m > u_grid[g]) ++c.ruins[g];
          }
        }
        return c;
      });
  return detail::finish(chunks, u_grid, n_paths, describe(cfg.horizon), base);
}

}  // namespace ruinex
