#pragma once

// JSON and CSV forms of specs, index values, reports and estimates.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ruinex/dist_expr.hpp"
#include "ruinex/esssup.hpp"
#include "ruinex/ext_real.hpp"
#include "ruinex/index.hpp"
#include "ruinex/joint.hpp"
#include "ruinex/process.hpp"

namespace ruinex {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// ExtReal

inline json to_json(const ExtReal& x) {
  if (x.is_infinite()) return "inf";
  return x.value();
}

inline ExtReal ext_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return ExtReal::infinity();
    throw ConfigError("expected a number or \"inf\"");
  }
  if (!j.is_number()) throw ConfigError("expected a number or \"inf\"");
  return ExtReal::finite(j.get<double>());
}

// ---------------------------------------------------------------------------
// DistExpr

inline json to_json(const DistExpr& e) {
  return std::visit(
      overloaded{
          [](const node::PointMass& n) { return json{{"kind", "point_mass"}, {"value", n.value}}; },
          [](const node::Atoms& n) {
            json a = json::array();
            for (std::size_t i = 0; i < n.values.size(); ++i) a.push_back({n.values[i], n.probs[i]});
            return json{{"kind", "atoms"}, {"atoms", a}};
          },
          [](const node::Pareto& n) { return json{{"kind", "pareto"}, {"gamma", n.gamma}}; },
          [](const node::Lognormal& n) {
            return json{{"kind", "lognormal"}, {"mu", n.mu}, {"sigma", n.sigma}};
          },
          [](const node::Normal& n) { return json{{"kind", "normal"}, {"mu", n.mu}, {"sigma", n.sigma}}; },
          [](const node::Affine& n) {
            return json{{"kind", "affine"}, {"scale", n.scale}, {"shift", n.shift}, {"child", to_json(n.child)}};
          },
          [](const node::PosPower& n) {
            return json{{"kind", "pos_power"}, {"exponent", n.exponent}, {"child", to_json(n.child)}};
          },
          [](const node::Square& n) { return json{{"kind", "square"}, {"child", to_json(n.child)}}; },
          [](const node::Negate& n) { return json{{"kind", "negate"}, {"child", to_json(n.child)}}; },
          [](const node::Min& n) {
            return json{{"kind", "min"}, {"left", to_json(n.left)}, {"right", to_json(n.right)}};
          },
          [](const node::Max& n) {
            return json{{"kind", "max"}, {"left", to_json(n.left)}, {"right", to_json(n.right)}};
          },
          [](const node::SumIndep& n) {
            return json{{"kind", "sum"}, {"left", to_json(n.left)}, {"right", to_json(n.right)}};
          },
          [](const node::MinWithPareto& n) {
            return json{{"kind", "min_with_pareto"}, {"child", to_json(n.child)}, {"gamma", n.gamma}};
          },
          [](const node::Mixture& n) {
            json c = json::array();
            for (std::size_t i = 0; i < n.children.size(); ++i) {
              c.push_back({{"prob", n.probs[i]}, {"dist", to_json(n.children[i])}});
            }
            return json{{"kind", "mixture"}, {"components", c}};
          },
      },
      e.node().v);
}

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline double num(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw ConfigError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

}  // namespace detail

inline DistExpr dist_from_json(const json& j) {
  using detail::field;
  using detail::num;
  const std::string k = field(j, "kind").get<std::string>();
  try {
    if (k == "point_mass") return DistExpr::point_mass(num(j, "value"));
    if (k == "atoms") {
      std::vector<std::pair<double, double>> vp;
      for (const auto& a : field(j, "atoms")) vp.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
      return DistExpr::atoms(std::move(vp));
    }
    if (k == "pareto") return DistExpr::pareto(num(j, "gamma"));
    if (k == "lognormal") return DistExpr::lognormal(num(j, "mu"), num(j, "sigma"));
    if (k == "normal") return DistExpr::normal(num(j, "mu"), num(j, "sigma"));
    if (k == "affine") {
      return DistExpr::affine(num(j, "scale"), num(j, "shift"), dist_from_json(field(j, "child")));
    }
    if (k == "pos_power") return DistExpr::pos_power(num(j, "exponent"), dist_from_json(field(j, "child")));
    if (k == "square") return DistExpr::square(dist_from_json(field(j, "child")));
    if (k == "negate") return DistExpr::negate(dist_from_json(field(j, "child")));
    if (k == "min" || k == "max" || k == "sum") {
      DistExpr l = dist_from_json(field(j, "left")), r = dist_from_json(field(j, "right"));
      if (k == "min") return DistExpr::min(l, r);
      if (k == "max") return DistExpr::max(l, r);
      return DistExpr::sum(l, r);
    }
    if (k == "min_with_pareto") {
      return DistExpr::min_with_pareto(dist_from_json(field(j, "child")), num(j, "gamma"));
    }
    if (k == "mixture") {
      std::vector<std::pair<double, DistExpr>> pc;
      for (const auto& c : field(j, "components")) pc.emplace_back(num(c, "prob"), dist_from_json(field(c, "dist")));
      return DistExpr::mixture(std::move(pc));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown distribution kind \"" + k + "\"");
}

// ---------------------------------------------------------------------------
// JointRiskSpec

inline json to_json(const JointRiskSpec& s) {
  return std::visit(
      overloaded{
          [](const IndepProduct& p) { return json{{"kind", "indep"}, {"a", to_json(p.a)}, {"b", to_json(p.b)}}; },
          [](const BranchMixture& m) {
            json br = json::array();
            for (const auto& b : m.branches) {
              json driver = b.gamma ? json{{"kind", "pareto"}, {"gamma", *b.gamma}} : json{{"kind", "unit"}};
              br.push_back({{"prob", b.prob},
                            {"a", {{"constant", b.a.constant}, {"slope", b.a.slope}}},
                            {"b", {{"constant", b.b.constant}, {"slope", b.b.slope}}},
                            {"driver", driver}});
            }
            return json{{"kind", "branches"}, {"branches", br}};
          },
          [](const ArchCoupling& a) {
            return json{{"kind", "arch"}, {"lambda", a.lambda}, {"beta", a.beta}, {"z", to_json(a.z)}};
          },
      },
      s.v());
}

inline JointRiskSpec spec_from_json(const json& j) {
  using detail::field;
  using detail::num;
  const std::string k = field(j, "kind").get<std::string>();
  try {
    if (k == "indep") return JointRiskSpec::indep(dist_from_json(field(j, "a")), dist_from_json(field(j, "b")));
    if (k == "arch") return JointRiskSpec::arch(num(j, "lambda"), num(j, "beta"), dist_from_json(field(j, "z")));
    if (k == "branches") {
      std::vector<Branch> br;
      for (const auto& b : field(j, "branches")) {
        Branch x;
        x.prob = num(b, "prob");
        x.a = {num(field(b, "a"), "constant"), num(field(b, "a"), "slope")};
        x.b = {num(field(b, "b"), "constant"), num(field(b, "b"), "slope")};
        const json& d = field(b, "driver");
        const std::string dk = field(d, "kind").get<std::string>();
        if (dk == "pareto") {
          x.gamma = num(d, "gamma");
        } else if (dk != "unit") {
          throw ConfigError("driver kind must be \"unit\" or \"pareto\"");
        }
        br.push_back(x);
      }
      return JointRiskSpec::branches(std::move(br));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown spec kind \"" + k + "\"");
}

/// FNV-1a over the canonical JSON text.
inline std::string digest(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string spec_digest(const JointRiskSpec& s) { return digest(to_json(s)); }

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const IndexValue& v) {
  json j{{"value", v.value ? to_json(*v.value) : json("unknown")}, {"method", to_string(v.method)}};
  if (v.empirical) {
    const auto& d = *v.empirical;
    j["empirical"] = {{"point", std::isfinite(d.point) ? json(d.point) : json("inf")},
                      {"band", {to_json(d.band_lo), to_json(d.band_hi)}},
                      {"std_error", d.std_error},
                      {"estimator", to_string(d.estimator)},
                      {"threshold", d.threshold},
                      {"k", d.k},
                      {"n", d.n}};
  }
  j["degenerate_positive_part"] = v.degenerate_positive_part;
  j["heavy_uncertainty"] = v.heavy_uncertainty;
  j["notes"] = v.notes;
  return j;
}

inline json to_json(const SeedStream& s) { return {{"seed", s.seed}, {"index", s.index}}; }

inline json to_json(const EsssupReport& r) {
  json seq = json::array();
  for (const auto& x : r.sequence) seq.push_back(to_json(x));
  json v{{"bounded", r.verdict.bounded}, {"reason", r.verdict.reason}};
  if (r.verdict.witness) v["witness"] = *r.verdict.witness;
  json j{{"sequence", seq}, {"attaining_branch", r.attaining}, {"verdict", v},
         {"finite_but_diverging", r.finite_but_diverging}, {"within_hypotheses", r.within_hypotheses}};
  if (r.first_infinite) j["first_infinite"] = *r.first_infinite;
  if (r.overflow_at) j["overflow_at"] = *r.overflow_at;
  return j;
}

inline json to_json(const RuinEstimate& e) {
  json rows = json::array();
  for (const auto& r : e.rows) {
    rows.push_back({{"u0", r.u0}, {"n_paths", r.n_paths}, {"ruins", r.ruins}, {"censored", r.censored},
                    {"p_hat", r.p_hat}, {"ci_lo", r.ci_lo}, {"ci_hi", r.ci_hi}});
  }
  return {{"rows", rows}, {"horizon", e.horizon}, {"seed", to_json(e.seed)}, {"total_steps", e.total_steps}};
}

/// Columns u0, n_paths, ruins, censored, p_hat, ci_lo, ci_hi.
inline void write_csv(std::ostream& os, const RuinEstimate& e) {
  os << "u0,n_paths,ruins,censored,p_hat,ci_lo,ci_hi\n";
  char buf[256];
  for (const auto& r : e.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%zu,%zu,%.17g,%.17g,%.17g\n", r.u0, r.n_paths, r.ruins,
                  r.censored, r.p_hat, r.ci_lo, r.ci_hi);
    os << buf;
  }
}

}  // namespace ruinex
