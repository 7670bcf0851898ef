#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "radsys/cli/config.hpp"
#include "radsys/conditions.hpp"
#include "radsys/solver.hpp"
#include "radsys/transforms.hpp"

namespace radsys::cli {

inline constexpr const char* tool_name = "radsys";
inline constexpr const char* tool_version = "1.0.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int nonconvergence = 3;
inline constexpr int verification = 4;
inline constexpr int inconclusive = 5;
inline constexpr int internal = 6;
}  // namespace exit_code

/// Stored solution file does not match the config's grid or layout.
class SolutionFileError : public Error {
 public:
  using Error::Error;
};

struct CommandResult {
  json report;
  int exit_code = exit_code::ok;
  std::vector<std::filesystem::path> files;
};

// ---------------------------------------------------------------------------
// JSON views of library results

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const DivergenceVerdict& v) {
  return {{"verdict", to_string(v.verdict)},
          {"limit", optional_number(v.limit)},
          {"horizons", v.horizons},
          {"partials", v.partials},
          {"note", v.note}};
}

inline json to_json(const ConditionVerdict& v) {
  json j = {{"status", to_string(v.status)}, {"evidence", v.evidence}};
  if (!v.points.empty()) {
    j["s"] = v.points;
    j["values"] = v.values;
  }
  return j;
}

inline json to_json(const Classification& c) {
  json cond;
  cond["C3"] = to_json(c.c3);
  cond["C4"] = to_json(c.c4);
  cond["C5"] = to_json(c.c5);
  json c6 = to_json(c.c6);
  if (c.c6_window.status == Status::holds) {
    c6["window"] = {c.c6_window.beta_min, c.c6_window.beta_max};
    c6["beta_max_is_domain_limit"] = c.c6_window.beta_max_is_domain_limit;
    c6["g_at_beta_max"] = c.c6_window.g_at_max;
  }
  cond["C6"] = c6;
  cond["sublinearity"] = to_json(c.sublinearity);
  cond["sup_bounded"] = to_json(c.sup_bounded);
  json tails;
  tails["F_inf"] = to_json(c.F_inf);
  json a = json::array();
  for (const auto& v : c.A_inf) a.push_back(to_json(v));
  tails["A_inf"] = a;
  return {{"theorem", to_string(c.theorem)},
          {"equal_beta", c.equal_beta},
          {"beta_in_window", c.beta_in_window ? json(*c.beta_in_window) : json(nullptr)},
          {"conditions", cond},
          {"tails", tails},
          {"note", c.note}};
}

inline json to_json(const ValidationReport& r) {
  json j = {{"property", to_string(r.property)}, {"grid", r.grid}, {"points", r.points}, {"passed", r.passed}};
  if (!r.passed) {
    j["witness"] = r.witness;
    if (!r.witness_pair.empty()) j["witness_pair"] = r.witness_pair;
    j["witness_value"] = r.witness_value;
    j["violation"] = r.violation;
  }
  return j;
}

inline json to_json(const VerificationReport& v) {
  const auto& b = v.bounds;
  const auto& r = v.residual;
  json bounds = {{"pass", b.pass()},
                 {"lower_margin", b.lower_margin},
                 {"upper_margin", b.sum_upper_margin ? json(b.upper_margin) : json(nullptr)},
                 {"sum_upper_margin", optional_number(b.sum_upper_margin)},
                 {"upper_note", b.upper_note},
                 {"slack", b.slack}};
  json res = {{"pass", r.pass()},
              {"integral", r.integral},
              {"integral_tol", r.integral_tol},
              {"ode", r.ode},
              {"ode_absolute", r.ode_absolute},
              {"ode_near_origin", r.ode_near_origin},
              {"ode_tol", r.ode_tol}};
  return {{"pass", v.pass()}, {"bounds", bounds}, {"residual", res}};
}

inline json solution_summary(const SolutionBundle& s) {
  json u_R = json::array();
  for (const auto& u : s.u) u_R.push_back(u.back());
  return {{"beta", s.beta.values()},
          {"status", to_string(s.status)},
          {"iterations", s.iterations},
          {"final_update", s.final_update},
          {"tol", s.tol},
          {"monotone", s.monotone},
          {"monotone_violations", s.monotone_violations},
          {"worst_monotone_drop", s.worst_monotone_drop},
          {"u_at_R", u_R},
          {"L_estimate", s.L_estimate},
          {"note", s.note}};
}

// ---------------------------------------------------------------------------
// Hypothesis sampling

inline json check_hypotheses(const ProblemSpec& spec, const RunConfig& cfg) {
  const std::size_t d = spec.d();
  double b_max = 0.0;
  for (const auto& b : cfg.beta)
    for (double x : b.values()) b_max = std::max(b_max, x);
  const double s_hi = std::max(10.0 * b_max, spec.F_anchor + 1.0);
  const std::size_t samples =
      std::clamp<std::size_t>(std::size_t(std::floor(std::pow(20000.0, 1.0 / double(d)))), 2, 41);

  json checks = json::array();
  bool all = true;
  auto run = [&](const std::string& target, const Expr& e, Property prop, std::vector<Interval> box, std::size_t n) {
    json j;
    try {
      const ValidationReport r = validate_sampled(e, prop, box, n);
      j = to_json(r);
      all = all && r.passed;
    } catch (const Error& err) {
      j = {{"property", to_string(prop)}, {"passed", false}, {"error", err.what()}};
      all = false;
    }
    json entry = {{"target", target}};
    entry.update(j);
    checks.push_back(std::move(entry));
  };
  for (std::size_t j = 0; j < d; ++j)
    run("a_" + std::to_string(j + 1), spec.a[j], Property::nonnegativity, {{0.0, cfg.R}}, 201);
  const std::vector<Interval> box(d, Interval{0.0, s_hi});
  for (std::size_t j = 0; j < d; ++j) {
    run("f_" + std::to_string(j + 1), spec.f[j], Property::nonnegativity, box, samples);
    run("f_" + std::to_string(j + 1), spec.f[j], Property::monotone, box, samples);
  }
  return {{"verified", all}, {"note", all ? "no sampled violation" : "hypotheses unverified"}, {"checks", checks}};
}

// ---------------------------------------------------------------------------
// Files

inline std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string csv_header(std::size_t d) {
  std::string h = "r";
  for (std::size_t j = 1; j <= d; ++j) h += ",u_" + std::to_string(j);
  for (std::size_t j = 1; j <= d; ++j) h += ",lb_" + std::to_string(j);
  return h + ",ub";
}

inline void write_csv(const std::filesystem::path& path, const SolutionBundle& s, const BoundCurves& bounds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << csv_header(s.d()) << '\n';
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    out << format_real(s.grid.node(i));
    for (const auto& u : s.u) out << ',' << format_real(u[i]);
    for (const auto& lb : bounds.lower) out << ',' << format_real(lb[i]);
    out << ',';
    if (bounds.upper) out << format_real((*bounds.upper)[i]);
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

/// Reads the u columns of a solution CSV and checks it against `grid`.
inline Iterate read_solution_csv(const std::filesystem::path& path, const RadialGrid& grid, std::size_t d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolutionFileError("cannot open solution file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header(d))
    throw SolutionFileError("solution header does not match " + csv_header(d));
  Iterate u(d);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= grid.size()) throw SolutionFileError("grid mismatch: more rows than grid nodes");
    std::vector<double> fields;
    std::size_t pos = 0;
    for (std::size_t k = 0; k <= d; ++k) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      double x = 0.0;
      const auto res = std::from_chars(line.data() + pos, line.data() + end, x);
      if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw SolutionFileError("malformed value in row " + std::to_string(row + 1));
      fields.push_back(x);
      pos = end + 1;
    }
    const double r = grid.node(row);
    if (std::fabs(fields[0] - r) > 1e-12 * std::max(1.0, grid.horizon()))
      throw SolutionFileError("grid mismatch at row " + std::to_string(row + 1) + ": r = " + format_real(fields[0]) +
                              ", expected " + format_real(r));
    for (std::size_t j = 0; j < d; ++j) u[j].push_back(fields[j + 1]);
    ++row;
  }
  if (row != grid.size())
    throw SolutionFileError("grid mismatch: " + std::to_string(row) + " rows, expected " + std::to_string(grid.size()));
  return u;
}

inline std::filesystem::path output_path(const RunConfig& cfg, const std::string& suffix) {
  return std::filesystem::path(cfg.output.dir) / (cfg.output.prefix + suffix);
}

inline void write_report(CommandResult& res, const RunConfig& cfg, const std::string& command) {
  std::filesystem::create_directories(cfg.output.dir);
  const auto path = output_path(cfg, "_" + command + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << res.report.dump(2) << '\n';
  res.files.push_back(path);
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

using clock = std::chrono::steady_clock;

inline double elapsed_ms(clock::time_point since) {
  return std::chrono::duration<double, std::milli>(clock::now() - since).count();
}

inline json report_head(const RunConfig& cfg, const std::string& command) {
  json r;
  r["tool"] = {{"name", tool_name}, {"version", tool_version}};
  r["command"] = command;
  r["config"] = cfg.to_json();
  return r;
}

inline TransformTables tables_for(const ProblemSpec& spec, const RunConfig& cfg,
                                  const std::vector<CentralValues>& betas) {
  double lo = INFINITY, hi = 0.0;
  for (const auto& b : betas)
    for (double x : b.values()) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  return build_tables(spec, cfg.grid(), lo, hi, cfg.classify.probe, cfg.classify.ftable);
}

struct SolvedRun {
  SolutionBundle solution;
  std::optional<VerificationReport> verification;
  json entry;
  int exit_code = exit_code::ok;
};

inline SolvedRun solve_one(const ProblemSpec& spec, const RunConfig& cfg, const TransformTables& tables,
                           const CentralValues& beta, std::size_t index, CommandResult& res) {
  const auto t0 = clock::now();
  SolvedRun run{iterate(spec, cfg.grid(), beta, cfg.solver), std::nullopt, json::object()};
  const double solve_ms = elapsed_ms(t0);
  const SolutionBundle& s = run.solution;

  const BoundCurves bounds = bound_curves(spec, tables, beta);
  std::filesystem::create_directories(cfg.output.dir);
  const std::string csv_name = cfg.output.prefix + "_beta" + std::to_string(index + 1) + ".csv";
  write_csv(std::filesystem::path(cfg.output.dir) / csv_name, s, bounds);
  res.files.push_back(std::filesystem::path(cfg.output.dir) / csv_name);

  run.entry = solution_summary(s);
  run.entry["csv"] = csv_name;
  run.entry["classification"] = to_json(classify(spec, beta, cfg.classify));
  if (s.converged()) {
    run.verification = verify(s, spec, tables, cfg.verify);
    run.entry["verification"] = to_json(*run.verification);
  } else {
    run.entry["verification"] = nullptr;
  }
  if (cfg.output.include_timings) run.entry["timings_ms"] = {{"solve", solve_ms}, {"total", elapsed_ms(t0)}};

  if (!s.monotone) run.exit_code = exit_code::internal;
  else if (!s.converged()) run.exit_code = exit_code::nonconvergence;
  else if (!run.verification->pass()) run.exit_code = exit_code::verification;
  return run;
}

// Most severe code wins; severity order differs from numeric order.
inline int combine(int a, int b) {
  auto rank = [](int c) {
    switch (c) {
      case exit_code::internal: return 5;
      case exit_code::nonconvergence: return 4;
      case exit_code::verification: return 3;
      case exit_code::inconclusive: return 2;
      case exit_code::ok: return 0;
      default: return 1;
    }
  };
  return rank(b) > rank(a) ? b : a;
}

inline void finish(CommandResult& res, const RunConfig& cfg, const std::string& command, clock::time_point t0) {
  res.report["exit_code"] = res.exit_code;
  if (cfg.output.include_timings) res.report["timings_ms"] = {{"total", elapsed_ms(t0)}};
  write_report(res, cfg, command);
}

}  // namespace detail

inline CommandResult cmd_solve(const RunConfig& cfg) {
  const auto t0 = detail::clock::now();
  const ProblemSpec spec = cfg.spec();
  CommandResult res;
  res.report = detail::report_head(cfg, "solve");
  res.report["hypotheses"] = check_hypotheses(spec, cfg);
  const TransformTables tables = detail::tables_for(spec, cfg, cfg.beta);
  json runs = json::array();
  for (std::size_t k = 0; k < cfg.beta.size(); ++k) {
    auto run = detail::solve_one(spec, cfg, tables, cfg.beta[k], k, res);
    runs.push_back(std::move(run.entry));
    res.exit_code = detail::combine(res.exit_code, run.exit_code);
  }
  res.report["runs"] = runs;
  detail::finish(res, cfg, "solve", t0);
  return res;
}

inline CommandResult cmd_classify(const RunConfig& cfg) {
  const auto t0 = detail::clock::now();
  const ProblemSpec spec = cfg.spec();
  CommandResult res;
  res.report = detail::report_head(cfg, "classify");
  res.report["hypotheses"] = check_hypotheses(spec, cfg);

  json per_beta = json::array();
  for (const auto& beta : cfg.beta) {
    const Classification c = classify(spec, beta, cfg.classify);
    json entry = {{"beta", beta.values()}};
    entry.update(to_json(c));
    per_beta.push_back(entry);
    if (c.theorem == Theorem::inconclusive) res.exit_code = exit_code::inconclusive;
  }
  res.report["classification"] = per_beta;

  json aux;
  json ko = json::array(), yz = json::array();
  for (std::size_t j = 0; j < spec.d(); ++j) {
    const ScalarFunction fj = [&spec, j](double s) { return spec.f_diagonal(j, s); };
    ko.push_back(to_json(check_keller_osserman(fj, cfg.classify.probe)));
    yz.push_back(to_json(check_ye_zhou(fj, cfg.classify.probe)));
  }
  aux["keller_osserman"] = ko;
  aux["ye_zhou"] = yz;

  const DivergenceVerdict F_inf = estimate_F_inf(spec, cfg.classify.probe);
  const Status c3 = F_inf.diverges() ? Status::holds : F_inf.converges() ? Status::fails : Status::inconclusive;
  const RemarkReport rem = check_remark_implications(spec, c3, cfg.classify.probe);
  json r1 = json::array(), r2 = json::array();
  for (const auto& v : rem.reciprocal) r1.push_back(to_json(v));
  for (const auto& v : rem.primitive) r2.push_back(to_json(v));
  aux["remarks"] = {{"C3", to_string(rem.c3)},
                    {"applicable", rem.applicable},
                    {"contradiction", rem.contradiction},
                    {"reciprocal", r1},
                    {"primitive", r2},
                    {"note", rem.note}};

  if (const auto lair = match_lair(spec)) {
    const LairReport lr = check_lair_proposition(*lair, cfg.classify.probe);
    aux["lair"] = {{"alpha", lair->alpha},
                   {"beta", lair->beta},
                   {"in_range", lr.in_range},
                   {"first", to_json(lr.first)},
                   {"second", to_json(lr.second)},
                   {"explosive_predicted", lr.explosive_predicted},
                   {"note", lr.note}};
  } else {
    aux["lair"] = nullptr;
  }
  res.report["auxiliary"] = aux;
  detail::finish(res, cfg, "classify", t0);
  return res;
}

inline CommandResult cmd_verify(const RunConfig& cfg, const std::filesystem::path& solution) {
  const auto t0 = detail::clock::now();
  const ProblemSpec spec = cfg.spec();
  const RadialGrid grid = cfg.grid();
  const Iterate u = read_solution_csv(solution, grid, spec.d());
  std::vector<double> b;
  for (const auto& uj : u) b.push_back(uj.front());
  CentralValues beta = [&] {
    try {
      return CentralValues(b);
    } catch (const std::invalid_argument& e) {
      throw SolutionFileError(std::string("central values in solution file: ") + e.what());
    }
  }();
  const SolutionBundle sol = SolutionBundle::from_values(grid, beta, u);
  const TransformTables tables = detail::tables_for(spec, cfg, {beta});
  const VerificationReport v = verify(sol, spec, tables, cfg.verify);

  CommandResult res;
  res.report = detail::report_head(cfg, "verify");
  res.report["solution"] = solution.filename().string();
  res.report["beta"] = beta.values();
  res.report["verification"] = to_json(v);
  res.exit_code = v.pass() ? exit_code::ok : exit_code::verification;
  detail::finish(res, cfg, "verify", t0);
  return res;
}

inline CommandResult cmd_sweep(const RunConfig& cfg) {
  if (cfg.beta.size() < 2) throw ConfigError("beta", "sweep needs at least 2 central-value vectors");
  const auto t0 = detail::clock::now();
  const ProblemSpec spec = cfg.spec();
  CommandResult res;
  res.report = detail::report_head(cfg, "sweep");
  res.report["hypotheses"] = check_hypotheses(spec, cfg);
  const TransformTables tables = detail::tables_for(spec, cfg, cfg.beta);

  std::vector<detail::SolvedRun> runs;
  json entries = json::array();
  for (std::size_t k = 0; k < cfg.beta.size(); ++k) {
    runs.push_back(detail::solve_one(spec, cfg, tables, cfg.beta[k], k, res));
    entries.push_back(runs.back().entry);
    res.exit_code = detail::combine(res.exit_code, runs.back().exit_code);
  }
  res.report["runs"] = entries;

  json table = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& s = runs[k].solution;
    json u_R = json::array();
    for (const auto& u : s.u) u_R.push_back(u.back());
    table.push_back({{"index", k + 1},
                     {"beta", s.beta.values()},
                     {"status", to_string(s.status)},
                     {"iterations", s.iterations},
                     {"u_at_R", u_R},
                     {"L_estimate", s.L_estimate}});
  }

  // beta <= beta' componentwise must give u <= u' nodewise; distinct beta
  // must give distinct solutions, equal beta identical ones.
  json pairs = json::array();
  bool consistent = true;
  const double slack = 10.0 * cfg.solver.tol;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (std::size_t l = k + 1; l < runs.size(); ++l) {
      const auto& a = runs[k].solution;
      const auto& b = runs[l].solution;
      if (!a.converged() || !b.converged()) continue;
      double max_gap = 0.0, worst_order = -INFINITY;
      const bool k_le_l = a.beta.dominated_by(b.beta), l_le_k = b.beta.dominated_by(a.beta);
      bool identical = true;
      for (std::size_t j = 0; j < a.d(); ++j)
        for (std::size_t i = 0; i < a.grid.size(); ++i) {
          const double diff = b.u[j][i] - a.u[j][i];
          identical = identical && diff == 0.0;
          max_gap = std::max(max_gap, std::fabs(diff));
          if (k_le_l) worst_order = std::max(worst_order, -diff);
          else if (l_le_k) worst_order = std::max(worst_order, diff);
        }
      const bool equal_beta = a.beta == b.beta;
      std::string relation = equal_beta ? "equal" : k_le_l ? "ordered" : l_le_k ? "ordered_reverse" : "incomparable";
      bool ok = true;
      if (equal_beta) ok = identical;
      else if (k_le_l || l_le_k) ok = worst_order <= slack && max_gap > 0.0;
      else ok = max_gap > 0.0;
      consistent = consistent && ok;
      pairs.push_back({{"pair", {k + 1, l + 1}},
                       {"relation", relation},
                       {"max_gap", max_gap},
                       {"order_violation", (k_le_l || l_le_k) && !equal_beta ? json(worst_order) : json(nullptr)},
                       {"ok", ok}});
    }
  }
  res.report["comparison"] = {{"table", table}, {"pairs", pairs}, {"consistent", consistent}};
  if (!consistent) res.exit_code = detail::combine(res.exit_code, exit_code::internal);
  detail::finish(res, cfg, "sweep", t0);
  return res;
}

}  // namespace radsys::cli
