#pragma once

// Batch runner: JSON experiment configs in, JSON results, CSV tables and a
// printed summary out. Exit codes: 0 pass, 1 fail, 2 refusal or usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ruinex/asymptotics.hpp"
#include "ruinex/constructions.hpp"
#include "ruinex/esssup.hpp"
#include "ruinex/index.hpp"
#include "ruinex/io.hpp"
#include "ruinex/laws.hpp"
#include "ruinex/process.hpp"

namespace ruinex::cli {

constexpr int kSchemaVersion = 1;

enum Exit : int { pass = 0, fail = 1, usage = 2 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "validate",   "index",       "lundberg",    "h",           "esssup",         "simulate",
      "ruin-slope", "finite-band", "laws",        "rw-borovkov", "lundberg-equiv", "construct-minorant"};
  return names;
}

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string subcommand;
  std::uint64_t seed = 1;
  std::optional<JointRiskSpec> spec;
  std::optional<DistExpr> dist;
  PathConfig path;
  EstimatorConfig estimator;
  double tolerance = 0.25;
  /// Subcommand-specific parameters, kept as a JSON object.
  json params = json::object();
  std::string out_json;
  std::string out_csv;
};

// ---------------------------------------------------------------------------
// Config text format

inline json to_json(const Horizon& h) {
  if (const auto* f = std::get_if<FiniteHorizon>(&h)) return {{"kind", "finite"}, {"n", f->n}};
  const auto& t = std::get<TruncatedUltimate>(h);
  return {{"kind", "truncated_ultimate"}, {"eps_prod", t.eps_prod}, {"n_max", t.n_max}, {"min_steps", t.min_steps}};
}

inline Horizon horizon_from_json(const json& j) {
  const std::string k = detail::field(j, "kind").get<std::string>();
  if (k == "finite") return FiniteHorizon{detail::field(j, "n").get<std::size_t>()};
  if (k == "truncated_ultimate") {
    TruncatedUltimate t;
    t.eps_prod = j.value("eps_prod", t.eps_prod);
    t.n_max = j.value("n_max", t.n_max);
    t.min_steps = j.value("min_steps", t.min_steps);
    return t;
  }
  throw ConfigError("horizon kind must be \"finite\" or \"truncated_ultimate\"");
}

inline json to_json(const EstimatorConfig& e) {
  return {{"estimator", e.estimator == Estimator::hill ? "hill" : "rank_loglog"},
          {"top_fraction", e.top_fraction},
          {"min_exceedances", e.min_exceedances},
          {"positive_part", e.positive_part}};
}

inline EstimatorConfig estimator_from_json(const json& j) {
  EstimatorConfig e;
  const std::string k = j.value("estimator", std::string("rank_loglog"));
  if (k == "hill") {
    e.estimator = Estimator::hill;
  } else if (k != "rank_loglog") {
    throw ConfigError("estimator must be \"rank_loglog\" or \"hill\"");
  }
  e.top_fraction = j.value("top_fraction", e.top_fraction);
  e.min_exceedances = j.value("min_exceedances", e.min_exceedances);
  e.positive_part = j.value("positive_part", e.positive_part);
  try {
    e.check();
  } catch (const std::invalid_argument& x) {
    throw ConfigError(x.what());
  }
  return e;
}

inline json to_json(const ExperimentConfig& c) {
  json j{{"schema_version", kSchemaVersion},
         {"subcommand", c.subcommand},
         {"seed", c.seed},
         {"path",
          {{"horizon", to_json(c.path.horizon)},
           {"n_paths", c.path.n_paths},
           {"u0_grid", c.path.u0_grid},
           {"chunk_size", c.path.chunk_size},
           {"workers", c.path.workers}}},
         {"estimator", to_json(c.estimator)},
         {"tolerance", c.tolerance},
         {"params", c.params},
         {"outputs", {{"json", c.out_json}, {"csv", c.out_csv}}}};
  if (c.spec) j["spec"] = ruinex::to_json(*c.spec);
  if (c.dist) j["dist"] = ruinex::to_json(*c.dist);
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) {
      throw ConfigError("unsupported schema_version");
    }
    c.subcommand = j.value("subcommand", std::string());
    c.seed = j.value("seed", c.seed);
    if (j.contains("spec")) c.spec = spec_from_json(j.at("spec"));
    if (j.contains("dist")) c.dist = dist_from_json(j.at("dist"));
    if (j.contains("path")) {
      const json& p = j.at("path");
      if (p.contains("horizon")) c.path.horizon = horizon_from_json(p.at("horizon"));
      c.path.n_paths = p.value("n_paths", c.path.n_paths);
      c.path.u0_grid = p.value("u0_grid", c.path.u0_grid);
      c.path.chunk_size = p.value("chunk_size", c.path.chunk_size);
      c.path.workers = p.value("workers", c.path.workers);
    }
    if (j.contains("estimator")) c.estimator = estimator_from_json(j.at("estimator"));
    c.tolerance = j.value("tolerance", c.tolerance);
    if (j.contains("params")) {
      if (!j.at("params").is_object()) throw ConfigError("params must be an object");
      c.params = j.at("params");
    }
    if (j.contains("outputs")) {
      c.out_json = j.at("outputs").value("json", std::string());
      c.out_csv = j.at("outputs").value("csv", std::string());
    }
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  c.path.base = SeedStream{c.seed, 0};
  return c;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

inline ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config \"" + file + "\"");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Subcommands

struct Outcome {
  int code = Exit::pass;
  json result = json::object();
  /// Full CSV text, written when a CSV path is configured.
  std::string csv;
};

namespace detail {

inline const JointRiskSpec& need_spec(const ExperimentConfig& c) {
  if (!c.spec) throw UsageError(c.subcommand + ": config needs \"spec\"");
  return *c.spec;
}

inline const DistExpr& need_dist(const ExperimentConfig& c) {
  if (!c.dist) throw UsageError(c.subcommand + ": config needs \"dist\"");
  return *c.dist;
}

template <class T>
T param(const ExperimentConfig& c, const char* key, T fallback) {
  try {
    return c.params.value(key, fallback);
  } catch (const json::exception&) {
    throw ConfigError(std::string("params.") + key + " has the wrong type");
  }
}

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string fmt(const ExtReal& x) { return x.is_infinite() ? "inf" : fmt(x.value()); }

inline std::string fmt(const IndexValue& v) {
  if (!v.known()) return "unknown";
  std::string s = fmt(v.get());
  if (v.empirical) s += " [" + fmt(v.band().first) + ", " + fmt(v.band().second) + "]";
  return s;
}

inline std::string ruin_csv(const RuinEstimate& est, const std::optional<SlopeFit>& fit) {
  std::ostringstream os;
  emit_plot_data(os, est, fit);
  return os.str();
}

inline void print_rows(std::ostream& out, const RuinEstimate& est) {
  out << "u0            p_hat         ci_lo         ci_hi         ruins     censored\n";
  char buf[160];
  for (const auto& r : est.rows) {
    std::snprintf(buf, sizeof buf, "%-13.6g %-13.6g %-13.6g %-13.6g %-9zu %zu\n", r.u0, r.p_hat, r.ci_lo, r.ci_hi,
                  r.ruins, r.censored);
    out << buf;
  }
}

inline std::vector<ExtReal> c_grid(const ExperimentConfig& c) {
  std::vector<ExtReal> out;
  if (!c.params.contains("c")) throw UsageError("h: params.c (list of points) required");
  for (const auto& v : c.params.at("c")) out.push_back(ext_from_json(v));
  if (out.empty()) throw UsageError("h: params.c is empty");
  return out;
}

}  // namespace detail

inline Outcome cmd_validate(const ExperimentConfig& c, std::ostream& out) {
  const ValidationReport v = validate(detail::need_spec(c));
  out << (v.accepted ? "accepted" : "rejected") << "\n";
  for (const auto& s : v.violations) out << "  violation: " << s << "\n";
  return {v.accepted ? Exit::pass : Exit::fail, {{"accepted", v.accepted}, {"violations", v.violations}}, {}};
}

inline Outcome cmd_index(const ExperimentConfig& c, std::ostream& out) {
  const DistExpr& d = detail::need_dist(c);
  const IndexValue a = analytic_index(d);
  json r{{"analytic", to_json(a)}};
  out << "analytic index: " << detail::fmt(a) << "\n";
  const auto n = detail::param<std::size_t>(c, "samples", 0);
  if (n > 0) {
    const IndexValue e = empirical_index(sample_marginal(d, c.path.base.child(1), n), c.estimator);
    r["empirical"] = to_json(e);
    out << "empirical index: " << detail::fmt(e) << (e.heavy_uncertainty ? "  (heavy uncertainty)" : "") << "\n";
  }
  return {Exit::pass, r, {}};
}

inline Outcome cmd_lundberg(const ExperimentConfig& c, std::ostream& out) {
  const IndexValue v = lundberg_index(detail::need_dist(c));
  out << "I1: " << detail::fmt(v) << "\n";
  for (const auto& n : v.notes) out << "  note: " << n << "\n";
  return {Exit::pass, {{"lundberg", to_json(v)}}, {}};
}

inline Outcome cmd_h(const ExperimentConfig& c, std::ostream& out) {
  const JointRiskSpec& s = detail::need_spec(c);
  const auto n = detail::param<std::size_t>(c, "samples", 0);
  json rows = json::array();
  std::string csv = "c,h,h_left\n";
  out << "c             h(c)          h(c-)\n";
  std::uint64_t k = 0;
  for (const ExtReal& x : detail::c_grid(c)) {
    const IndexValue h = h_function(s, x);
    const IndexValue hl = h_left_limit(s, x);
    json row{{"c", to_json(x)}, {"h", to_json(h)}, {"h_left", to_json(hl)}};
    if (n > 0 && x.is_finite()) {
      row["empirical"] = to_json(h_function_empirical(s, x.value(), c.path.base.child(++k), n, c.estimator));
    }
    rows.push_back(row);
    const std::string line = detail::fmt(x) + "," + detail::fmt(h) + "," + detail::fmt(hl);
    csv += line + "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-13s %-13s %s\n", detail::fmt(x).c_str(), detail::fmt(h).c_str(),
                  detail::fmt(hl).c_str());
    out << buf;
  }
  return {Exit::pass, {{"rows", rows}}, csv};
}

inline Outcome cmd_esssup(const ExperimentConfig& c, std::ostream& out) {
  const JointRiskSpec& s = detail::need_spec(c);
  const auto n = detail::param<std::size_t>(c, "n", 10);
  const EsssupReport r = esssup_sequence(s, n);
  std::string csv = "k,y_bar\n";
  out << "k   y_bar\n";
  for (std::size_t i = 0; i < r.sequence.size(); ++i) {
    out << i << "   " << detail::fmt(r.sequence[i]) << "\n";
    csv += std::to_string(i) + "," + detail::fmt(r.sequence[i]) + "\n";
  }
  out << (r.verdict.bounded ? "bounded" : "unbounded") << ": " << r.verdict.reason << "\n";
  return {Exit::pass, {{"esssup", to_json(r)}}, csv};
}

inline Outcome cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
  const RuinEstimate est = estimate_ruin(detail::need_spec(c), c.path);
  out << "horizon: " << est.horizon << "\n";
  detail::print_rows(out, est);
  return {Exit::pass, {{"estimate", to_json(est)}}, detail::ruin_csv(est, std::nullopt)};
}

inline Outcome cmd_ruin_slope(const ExperimentConfig& c, std::ostream& out) {
  const RuinExperimentResult r = verify_ultimate(detail::need_spec(c), c.path, c.tolerance);
  detail::print_rows(out, r.estimate);
  out << "predicted exponent: " << detail::fmt(r.predicted.value) << " (" << r.predicted.attained_by << ")\n";
  if (r.fit) out << "fitted slope: " << detail::fmt(r.fit->slope) << " +- " << detail::fmt(r.fit->std_error) << "\n";
  out << "verdict: " << to_string(r.verdict) << (r.note.empty() ? "" : "  (" + r.note + ")") << "\n";
  return {r.verdict == Verdict::consistent ? Exit::pass : Exit::fail, {{"experiment", to_json(r)}},
          detail::ruin_csv(r.estimate, r.fit)};
}

inline Outcome cmd_finite_band(const ExperimentConfig& c, std::ostream& out) {
  const JointRiskSpec& s = detail::need_spec(c);
  const auto n = detail::param<std::size_t>(c, "n", 1);
  const auto samples = detail::param<std::size_t>(c, "samples", 0);
  if (samples == 0) {
    const FiniteBand b = finite_horizon_band(s, n);
    out << "N = " << n << ": I(Y_N) in [" << detail::fmt(b.lo) << ", " << detail::fmt(b.hi) << "]\n";
    return {Exit::pass, {{"band", to_json(b)}}, {}};
  }
  const FiniteHorizonCheck f = finite_horizon_check(s, n, samples, c.path.base.child(1), c.estimator, c.path.workers);
  out << "N = " << n << ": I(Y_N) in [" << detail::fmt(f.band.lo) << ", " << detail::fmt(f.band.hi) << "]\n"
      << "empirical: " << detail::fmt(f.empirical) << "\n"
      << (f.within ? "within band" : "outside band") << "\n";
  return {f.within ? Exit::pass : Exit::fail,
          {{"band", to_json(f.band)}, {"empirical", to_json(f.empirical)}, {"within", f.within}},
          {}};
}

/// Runs check_law over a corpus in the requested modes. Any analytic
/// failure fails the run; empirical failures are listed with their bands.
inline Outcome cmd_laws(const ExperimentConfig& c, std::ostream& out) {
  std::vector<LawCase> corpus;
  std::optional<std::vector<LawId>> only;
  if (c.params.contains("laws")) {
    std::vector<LawId> ids;
    for (const auto& s : c.params.at("laws")) {
      const auto id = s.is_string() ? parse_law_id(s.get<std::string>()) : std::nullopt;
      if (!id) throw UsageError("laws: unknown law id " + s.dump());
      ids.push_back(*id);
    }
    if (ids.empty()) throw UsageError("laws: empty law list");
    only = ids;
  }
  if (c.params.contains("cases")) {
    for (const auto& j : c.params.at("cases")) {
      try {
        corpus.push_back(law_case_from_json(j));
      } catch (const ConfigError& e) {
        throw UsageError(std::string("laws: ") + e.what());
      }
    }
  } else {
    corpus = random_law_corpus(detail::param<std::uint64_t>(c, "corpus_seed", c.seed),
                               detail::param<std::size_t>(c, "corpus_size", 55));
  }
  if (only) {
    std::erase_if(corpus, [&](const LawCase& lc) { return std::find(only->begin(), only->end(), lc.law) == only->end(); });
  }
  if (corpus.empty()) throw UsageError("laws: corpus is empty");

  std::vector<LawMode> modes;
  for (const auto& m : detail::param<std::vector<std::string>>(c, "modes", {"analytic", "empirical"})) {
    if (m == "analytic") {
      modes.push_back(LawMode::analytic);
    } else if (m == "empirical") {
      modes.push_back(LawMode::empirical);
    } else {
      throw UsageError("laws: mode must be \"analytic\" or \"empirical\"");
    }
  }
  LawCheckOptions opt;
  opt.samples = detail::param<std::size_t>(c, "samples", opt.samples);
  opt.estimator = c.estimator;

  json reports = json::array();
  std::string csv = "case,law,mode,lhs,rhs,lhs_lo,lhs_hi,rhs_lo,rhs_hi,pass\n";
  std::size_t an_total = 0, an_pass = 0, em_total = 0, em_pass = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (LawMode m : modes) {
      opt.stream = SeedStream{c.seed, 0}.child(i);
      const LawReport r = check_law(corpus[i].law, corpus[i].operands, m, opt);
      json jr = to_json(r);
      jr["case"] = i;
      reports.push_back(jr);
      const bool an = m == LawMode::analytic;
      (an ? an_total : em_total) += 1;
      (an ? an_pass : em_pass) += r.pass ? 1 : 0;
      csv += std::to_string(i) + "," + to_string(r.law) + "," + (an ? "analytic" : "empirical") + "," +
             detail::fmt(r.lhs) + "," + detail::fmt(r.rhs) + "," + detail::fmt(r.lhs_band.first) + "," +
             detail::fmt(r.lhs_band.second) + "," + detail::fmt(r.rhs_band.first) + "," +
             detail::fmt(r.rhs_band.second) + "," + (r.pass ? "1" : "0") + "\n";
      if (!r.pass) {
        out << "FAIL case " << i << " " << to_string(r.law) << " (" << (an ? "analytic" : "empirical") << "): lhs "
            << detail::fmt(r.lhs) << " [" << detail::fmt(r.lhs_band.first) << ", " << detail::fmt(r.lhs_band.second)
            << "] " << r.relation << " rhs " << detail::fmt(r.rhs) << " [" << detail::fmt(r.rhs_band.first) << ", "
            << detail::fmt(r.rhs_band.second) << "]\n";
      }
    }
  }
  out << "analytic: " << an_pass << "/" << an_total << " pass\n";
  out << "empirical: " << em_pass << "/" << em_total << " pass\n";
  json res{{"reports", reports},
           {"analytic", {{"pass", an_pass}, {"total", an_total}}},
           {"empirical", {{"pass", em_pass}, {"total", em_total}}}};
  return {an_pass == an_total ? Exit::pass : Exit::fail, res, csv};
}

inline Outcome cmd_rw_borovkov(const ExperimentConfig& c, std::ostream& out) {
  const DistExpr& b = detail::need_dist(c);
  const auto horizon = detail::param<std::size_t>(c, "horizon", 10'000);
  const RuinEstimate est = random_walk_sup(b, c.path.base, horizon, c.path.u0_grid, c.path.n_paths, c.path.workers);
  const SlopeFit fit = slope_fit(est);
  const ExtReal ib = upper_tail_index(b);
  const ExtReal predicted = ib.is_finite() ? ExtReal::finite(ib.value() - 1.0) : ib;
  const bool ok = predicted.is_finite() && std::abs(fit.slope + predicted.value()) <= c.tolerance;
  detail::print_rows(out, est);
  out << "predicted exponent I(B) - 1: " << detail::fmt(predicted) << "\n"
      << "fitted slope: " << detail::fmt(fit.slope) << " +- " << detail::fmt(fit.std_error) << "\n"
      << (ok ? "consistent" : "inconsistent") << "\n";
  return {ok ? Exit::pass : Exit::fail,
          {{"estimate", to_json(est)}, {"fit", to_json(fit)}, {"predicted", to_json(predicted)}, {"consistent", ok}},
          detail::ruin_csv(est, fit)};
}

inline Outcome cmd_lundberg_equiv(const ExperimentConfig& c, std::ostream& out) {
  TruncatedUltimate tu;
  if (const auto* t = std::get_if<TruncatedUltimate>(&c.path.horizon)) tu = *t;
  const auto samples = detail::param<std::size_t>(c, "samples", 1'000'000);
  const LundbergEquivalence r =
      lundberg_equivalence_check(detail::need_dist(c), samples, c.path.base, tu, c.estimator, c.path.workers);
  out << "I1(Z): " << detail::fmt(r.lundberg) << "\n"
      << "I(Z-bar): " << detail::fmt(r.z_bar) << "\n"
      << "I(Z_inf): " << detail::fmt(r.z_inf) << "\n"
      << "censored: " << r.censored << "\n"
      << (r.agree ? "agree" : "disagree") << "\n";
  return {r.agree ? Exit::pass : Exit::fail,
          {{"lundberg", to_json(r.lundberg)},
           {"z_bar", to_json(r.z_bar)},
           {"z_inf", to_json(r.z_inf)},
           {"censored", r.censored},
           {"agree", r.agree}},
          {}};
}

inline Outcome cmd_construct_minorant(const ExperimentConfig& c, std::ostream& out) {
  const DistExpr& d = detail::need_dist(c);
  const auto side = detail::param<std::string>(c, "side", "A");
  MinorantSpec m;
  if (side == "A") {
    m = minorant_A(d, detail::param<double>(c, "eps", 0.5));
  } else if (side == "B") {
    if (!c.params.contains("beta")) throw UsageError("construct-minorant: params.beta required for side B");
    try {
      m = minorant_B(d, detail::param<double>(c, "beta", 0.0));
    } catch (const std::invalid_argument& e) {
      throw Refusal(e.what());
    }
  } else {
    throw UsageError("construct-minorant: side must be \"A\" or \"B\"");
  }
  json r{{"side", to_string(m.kind)},
         {"ok", m.ok},
         {"diagnostic", m.diagnostic},
         {"constructed", ruinex::to_json(m.constructed)},
         {"target", m.target},
         {"dominated", m.dominated}};
  if (m.achieved) r["achieved"] = to_json(*m.achieved);
  if (m.kind == MinorantKind::a_side) r["moment_at_target"] = m.moment_at_target;
  if (!m.ok) {
    out << "construction failed: " << m.diagnostic << "\n";
    throw Refusal("construct-minorant: " + m.diagnostic);
  }
  out << to_string(m.kind) << " minorant: " << ruinex::to_json(m.constructed).dump() << "\n"
      << "target " << detail::fmt(m.target) << ", achieved " << (m.achieved ? detail::fmt(*m.achieved) : "?") << "\n";
  int code = Exit::pass;
  const auto paths = detail::param<std::size_t>(c, "paths", 0);
  if (paths > 0) {
    const CouplingReport cr =
        coupled_ruin_monotonicity(detail::need_spec(c), m, paths, detail::param<double>(c, "u0", 1.0), c.path.base,
                                  detail::param<std::size_t>(c, "horizon", 1000), c.path.workers);
    r["coupling"] = {{"paths", cr.paths},     {"violations", cr.violations},   {"ruined", cr.ruined},
                     {"ruined_star", cr.ruined_star}, {"identical", cr.identical},
                     {"domination_failures", cr.domination_failures}};
    out << "coupled paths: " << cr.paths << ", violations of T <= T*: " << cr.violations << "\n";
    if (cr.violations > 0 || cr.domination_failures > 0) code = Exit::fail;
  }
  return {code, r, {}};
}

inline Outcome dispatch(const ExperimentConfig& c, std::ostream& out) {
  const std::string& s = c.subcommand;
  if (s == "validate") return cmd_validate(c, out);
  if (s == "index") return cmd_index(c, out);
  if (s == "lundberg") return cmd_lundberg(c, out);
  if (s == "h") return cmd_h(c, out);
  if (s == "esssup") return cmd_esssup(c, out);
  if (s == "simulate") return cmd_simulate(c, out);
  if (s == "ruin-slope") return cmd_ruin_slope(c, out);
  if (s == "finite-band") return cmd_finite_band(c, out);
  if (s == "laws") return cmd_laws(c, out);
  if (s == "rw-borovkov") return cmd_rw_borovkov(c, out);
  if (s == "lundberg-equiv") return cmd_lundberg_equiv(c, out);
  if (s == "construct-minorant") return cmd_construct_minorant(c, out);
  throw UsageError("unknown subcommand \"" + s + "\"");
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write \"" + path + "\"");
  f << text;
}

/// Executes a parsed config: runs the subcommand and writes the artifacts.
inline int execute(ExperimentConfig c, std::ostream& out, std::ostream& err) {
  try {
    c.path.base = SeedStream{c.seed, 0};
    Outcome o = dispatch(c, out);
    json doc{{"schema_version", kSchemaVersion},
             {"subcommand", c.subcommand},
             {"seed", c.seed},
             {"exit_code", o.code},
             {"config", to_json(c)},
             {"result", o.result}};
    if (c.spec) doc["spec_digest"] = spec_digest(*c.spec);
    if (!c.out_json.empty()) write_file(c.out_json, doc.dump(2) + "\n");
    if (!c.out_csv.empty() && !o.csv.empty()) {
      std::string prov = "# seed=" + std::to_string(c.seed);
      if (c.spec) prov += " spec_digest=" + spec_digest(*c.spec);
      write_file(c.out_csv, prov + "\n" + o.csv);
    }
    return o.code;
  } catch (const Refusal& e) {
    err << "refused: " << e.what() << "\n";
  } catch (const InexpressibleOperand& e) {
    err << "refused: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return Exit::usage;
}

/// Entry point. `ruinex <subcommand> --config FILE [--out-json F]
/// [--out-csv F] [--seed N] [--workers N]`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Ruin probabilities under financial and insurance risks: experiment runner", "ruinex"};
  app.require_subcommand(1);
  std::string config_path, out_json, out_csv;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  for (const auto& name : subcommands()) {
    CLI::App* sc = app.add_subcommand(name);
    sc->add_option("--config,-c", config_path, "experiment config (JSON)")->required();
    sc->add_option("--out-json", out_json, "write the JSON result here");
    sc->add_option("--out-csv", out_csv, "write the CSV table or plot data here");
    sc->add_option("--seed", seed, "override the master seed");
    sc->add_option("--workers", workers, "worker threads (0 = all cores)");
  }
  std::ostringstream cli_out, cli_err;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code == 0 ? Exit::pass : Exit::usage;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  ExperimentConfig c;
  try {
    c = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return Exit::usage;
  }
  if (!c.subcommand.empty() && c.subcommand != sub) {
    err << "usage error: config is for \"" << c.subcommand << "\", not \"" << sub << "\"\n";
    return Exit::usage;
  }
  c.subcommand = sub;
  if (seed) c.seed = *seed;
  if (workers) c.path.workers = *workers;
  if (!out_json.empty()) c.out_json = out_json;
  if (!out_csv.empty()) c.out_csv = out_csv;
  return execute(std::move(c), out, err);
}

}  // namespace ruinex::cli
