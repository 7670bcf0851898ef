#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radsys/conditions.hpp"
#include "radsys/error.hpp"
#include "radsys/problem.hpp"
#include "radsys/solver.hpp"

namespace radsys::cli {

using json = nlohmann::ordered_json;

struct ProblemText {
  int N = 3;
  std::vector<double> p;
  std::vector<std::string> h, a, f;
  double F_anchor = 1.0;
};

struct OutputConfig {
  std::string dir = ".";
  std::string prefix = "run";
  bool include_timings = false;
};

struct RunConfig {
  ProblemText problem;
  double R = 5.0;
  std::size_t M = 1000;
  SolverOptions solver;
  ClassifyOptions classify;
  VerifyOptions verify;
  std::vector<CentralValues> beta;
  OutputConfig output;

  std::size_t d() const { return problem.p.size(); }
  ProblemSpec spec() const;
  RadialGrid grid() const { return RadialGrid(R, M); }
  json to_json() const;
};

namespace detail {

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg, const std::string& key = {}) const {
    throw ConfigError(key.empty() ? path_ : path_ + "." + key, msg);
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return node_.contains(key); }
  const json& get(const std::string& key) const { return node_.at(key); }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : node_.items()) {
      bool known = false;
      for (const char* allowed : keys) known = known || k == allowed;
      if (!known) fail("unknown key", k);
    }
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return number_at(get(key), at(key));
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail("must be > 0", key);
    return v;
  }

  long long integer(const std::string& key, long long fallback, long long min) const {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_number_integer()) fail("expected an integer", key);
    const long long x = v.get<long long>();
    if (x < min) fail("must be >= " + std::to_string(min), key);
    return x;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!get(key).is_boolean()) fail("expected true or false", key);
    return get(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!get(key).is_string()) fail("expected a string", key);
    return get(key).get<std::string>();
  }

  static double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
  }

 private:
  const json& node_;
  std::string path_;
};

// Scalar or d-array; scalars are broadcast.
template <class T, class Conv>
std::vector<T> per_component(const json& v, const std::string& path, std::size_t d, Conv conv) {
  std::vector<T> out;
  if (v.is_array()) {
    if (v.size() != d) throw ConfigError(path, "expected " + std::to_string(d) + " entries, got " + std::to_string(v.size()));
    for (std::size_t j = 0; j < d; ++j) out.push_back(conv(v[j], path + "[" + std::to_string(j) + "]"));
  } else {
    out.assign(d, conv(v, path));
  }
  return out;
}

inline std::string expr_text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected an expression string");
  return v.get<std::string>();
}

inline CentralValues beta_vector(const json& v, const std::string& path, std::size_t d) {
  std::vector<double> b;
  if (v.is_array()) {
    if (v.size() != d) throw ConfigError(path, "expected " + std::to_string(d) + " central values");
    for (std::size_t j = 0; j < d; ++j) b.push_back(Reader::number_at(v[j], path + "[" + std::to_string(j) + "]"));
  } else {
    b.assign(d, Reader::number_at(v, path));
  }
  for (std::size_t j = 0; j < d; ++j)
    if (!(b[j] > 0.0)) throw ConfigError(path, "central values must be > 0");
  return CentralValues(std::move(b));
}

// number -> one equal vector; array of d numbers -> one vector;
// otherwise each element (number or d-array) is one run.
inline std::vector<CentralValues> parse_beta(const json& v, std::size_t d) {
  const std::string path = "beta";
  if (v.is_number()) return {beta_vector(v, path, d)};
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a number, a vector or a non-empty list");
  bool all_numbers = true;
  for (const auto& e : v) all_numbers = all_numbers && e.is_number();
  if (all_numbers && v.size() == d) return {beta_vector(v, path, d)};
  std::vector<CentralValues> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(beta_vector(v[k], path + "[" + std::to_string(k) + "]", d));
  return out;
}

}  // namespace detail

inline ProblemSpec RunConfig::spec() const {
  ProblemSpec s;
  s.N = problem.N;
  s.p = problem.p;
  const std::size_t n = d();
  auto parse_all = [&](const std::vector<std::string>& texts, const char* key, Role role) {
    std::vector<Expr> out;
    for (std::size_t j = 0; j < texts.size(); ++j) {
      try {
        out.push_back(parse(texts[j], role, n));
      } catch (const ParseError& e) {
        throw ConfigError("problem." + std::string(key) + "[" + std::to_string(j) + "]", e.what());
      }
    }
    return out;
  };
  s.h = parse_all(problem.h, "h", Role::radial);
  s.a = parse_all(problem.a, "a", Role::radial);
  s.f = parse_all(problem.f, "f", Role::nonlinearity);
  s.F_anchor = problem.F_anchor;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem", e.what());
  }
  return s;
}

inline RunConfig parse_config(const json& doc) {
  using detail::Reader;
  RunConfig c;
  const Reader top(doc, "$");
  top.only({"problem", "grid", "solver", "probes", "verify", "beta", "output"});
  if (!top.has("problem")) top.fail("missing key", "problem");
  if (!top.has("beta")) top.fail("missing key", "beta");

  {
    const Reader r(top.get("problem"), "problem");
    r.only({"d", "N", "p", "h", "a", "f", "F_anchor"});
    if (!r.has("f")) r.fail("missing key", "f");
    const json& f = r.get("f");
    std::size_t d = f.is_array() ? f.size() : 1;
    if (r.has("d")) {
      d = std::size_t(r.integer("d", 1, 1));
      if (f.is_array() && f.size() != d) r.fail("expected " + std::to_string(d) + " entries", "f");
    }
    if (d == 0) r.fail("need at least one component", "f");
    c.problem.N = int(r.integer("N", 3, 3));
    c.problem.p = detail::per_component<double>(r.has("p") ? r.get("p") : json(2.0), r.at("p"), d,
                                                [](const json& v, const std::string& path) {
                                                  const double x = Reader::number_at(v, path);
                                                  if (!(x > 1.0)) throw ConfigError(path, "must be > 1");
                                                  return x;
                                                });
    c.problem.h = detail::per_component<std::string>(r.has("h") ? r.get("h") : json("0"), r.at("h"), d, detail::expr_text);
    c.problem.a = detail::per_component<std::string>(r.has("a") ? r.get("a") : json("1"), r.at("a"), d, detail::expr_text);
    c.problem.f = detail::per_component<std::string>(f, r.at("f"), d, detail::expr_text);
    c.problem.F_anchor = r.positive("F_anchor", 1.0);
  }

  if (top.has("grid")) {
    const Reader r(top.get("grid"), "grid");
    r.only({"R", "M"});
    c.R = r.positive("R", c.R);
    const long long M = r.integer("M", (long long)c.M, 0);
    if (M < 8) r.fail("M >= 8 required", "M");
    c.M = std::size_t(M);
  }

  if (top.has("solver")) {
    const Reader r(top.get("solver"), "solver");
    r.only({"tol", "max_iter"});
    c.solver.tol = r.positive("tol", c.solver.tol);
    c.solver.max_iter = std::size_t(r.integer("max_iter", (long long)c.solver.max_iter, 1));
  }
  c.verify.integral_tol = 10.0 * c.solver.tol;

  if (top.has("probes")) {
    const Reader r(top.get("probes"), "probes");
    r.only({"r_start", "horizons", "rho_conv", "panels", "flat_tol", "s_start", "s_factor", "s_count",
            "sublinear_threshold", "c6_eps"});
    auto& p = c.classify.probe;
    p.r_start = r.positive("r_start", p.r_start);
    p.horizons = int(r.integer("horizons", p.horizons, 4));
    p.rho_conv = r.positive("rho_conv", p.rho_conv);
    if (!(p.rho_conv < 1.0)) r.fail("must be < 1", "rho_conv");
    p.panels = int(r.integer("panels", p.panels, 2));
    if (p.panels % 2) r.fail("must be even", "panels");
    p.flat_tol = r.positive("flat_tol", p.flat_tol);
    auto& s = c.classify.sequence;
    s.start = r.positive("s_start", s.start);
    s.factor = r.positive("s_factor", s.factor);
    if (!(s.factor > 1.0)) r.fail("must be > 1", "s_factor");
    s.count = int(r.integer("s_count", s.count, 6));
    s.threshold = r.positive("sublinear_threshold", s.threshold);
    c.classify.c6.eps = r.positive("c6_eps", c.classify.c6.eps);
  }

  if (top.has("verify")) {
    const Reader r(top.get("verify"), "verify");
    r.only({"bound_slack", "integral_tol", "ode_window", "ode_tol"});
    c.verify.bound_slack = r.positive("bound_slack", c.verify.bound_slack);
    c.verify.integral_tol = r.positive("integral_tol", c.verify.integral_tol);
    c.verify.ode_window = r.positive("ode_window", c.verify.ode_window);
    c.verify.ode_tol = r.positive("ode_tol", c.verify.ode_tol);
  }

  c.beta = detail::parse_beta(top.get("beta"), c.d());

  if (top.has("output")) {
    const Reader r(top.get("output"), "output");
    r.only({"dir", "prefix", "include_timings"});
    c.output.dir = r.string("dir", c.output.dir);
    c.output.prefix = r.string("prefix", c.output.prefix);
    if (c.output.prefix.empty()) r.fail("must not be empty", "prefix");
    c.output.include_timings = r.boolean("include_timings", c.output.include_timings);
  }

  (void)c.spec();  // parse and validate every expression up front
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("$", "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Fully normalized config: every default made explicit, p/h/a/f as arrays,
/// beta as a list of vectors. Parsing the result reproduces the config.
inline json RunConfig::to_json() const {
  json j;
  json pj;
  pj["d"] = d();
  pj["N"] = problem.N;
  pj["p"] = problem.p;
  pj["h"] = problem.h;
  pj["a"] = problem.a;
  pj["f"] = problem.f;
  pj["F_anchor"] = problem.F_anchor;
  j["problem"] = pj;
  j["grid"] = {{"R", R}, {"M", M}};
  j["solver"] = {{"tol", solver.tol}, {"max_iter", solver.max_iter}};
  const auto& p = classify.probe;
  const auto& s = classify.sequence;
  j["probes"] = {{"r_start", p.r_start},   {"horizons", p.horizons}, {"rho_conv", p.rho_conv},
                 {"panels", p.panels},     {"flat_tol", p.flat_tol}, {"s_start", s.start},
                 {"s_factor", s.factor},   {"s_count", s.count},     {"sublinear_threshold", s.threshold},
                 {"c6_eps", classify.c6.eps}};
  j["verify"] = {{"bound_slack", verify.bound_slack},
                 {"integral_tol", verify.integral_tol},
                 {"ode_window", verify.ode_window},
                 {"ode_tol", verify.ode_tol}};
  json bl = json::array();
  for (const auto& b : beta) bl.push_back(b.values());
  // a single vector stays a single vector so that "solve" keeps one run
  j["beta"] = beta.size() == 1 && d() > 1 ? bl[0] : beta.size() == 1 ? json(beta[0][0]) : bl;
  j["output"] = {{"dir", output.dir}, {"prefix", output.prefix}, {"include_timings", output.include_timings}};
  return j;
}

}  // namespace radsys::cli
