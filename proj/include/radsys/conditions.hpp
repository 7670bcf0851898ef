#pragma once

// Hypothesis checks and the theorem classifier.
//
// Every limit condition is decided by a finite-horizon probe that may
// answer "inconclusive"; the classifier never claims more than its probes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radsys/error.hpp"
#include "radsys/expr.hpp"
#include "radsys/problem.hpp"
#include "radsys/quadrature.hpp"
#include "radsys/transforms.hpp"

namespace radsys {

enum class Theorem { thm1_large, thm1_bounded, thm2_bounded, thm3_large, thm3_bounded, inconclusive };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::thm1_large: return "Thm1-large";
    case Theorem::thm1_bounded: return "Thm1-bounded";
    case Theorem::thm2_bounded: return "Thm2-bounded";
    case Theorem::thm3_large: return "Thm3-large";
    case Theorem::thm3_bounded: return "Thm3-bounded";
    default: return "inconclusive";
  }
}

inline bool is_large(Theorem t) { return t == Theorem::thm1_large || t == Theorem::thm3_large; }
inline bool is_bounded(Theorem t) {
  return t == Theorem::thm1_bounded || t == Theorem::thm2_bounded || t == Theorem::thm3_bounded;
}

enum class Status { holds, fails, inconclusive, not_applicable };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::holds: return "holds";
    case Status::fails: return "fails";
    case Status::not_applicable: return "not_applicable";
    default: return "inconclusive";
  }
}

struct ConditionVerdict {
  Status status = Status::inconclusive;
  std::string evidence;
  std::vector<double> points;  // sample points (s or r)
  std::vector<double> values;  // probed quantity at each point
};

struct SequenceOptions {
  double start = 1.0;
  double factor = 4.0;
  int count = 12;
  double threshold = 1e-2;  // sublinearity: last ratio must fall below this
};

inline std::vector<double> geometric_sequence(const SequenceOptions& opt) {
  if (opt.count < 6) throw std::invalid_argument("s sequence needs at least 6 points");
  if (!(opt.start > 0.0 && opt.factor > 1.0)) throw std::invalid_argument("s sequence must be geometric and increasing");
  std::vector<double> s(std::size_t(opt.count));
  s[0] = opt.start;
  for (std::size_t k = 1; k < s.size(); ++k) s[k] = s[k - 1] * opt.factor;
  return s;
}

/// sum_i (1 + f_i(s, ..., s))^{1/(min p - 1)}
inline double diagonal_bracket(const ProblemSpec& spec, double s) {
  const double e = 1.0 / (spec.min_p() - 1.0);
  std::vector<double> env(spec.d(), s);
  double sum = 0.0;
  for (const auto& fi : spec.f) sum += std::pow(1.0 + fi.eval(env), e);
  return sum;
}

/// Growth condition lim_{s->inf} bracket(s)/s = 0, probed along a geometric
/// sequence.
inline ConditionVerdict check_sublinearity(const ProblemSpec& spec, const SequenceOptions& opt = {}) {
  ConditionVerdict v;
  v.points = geometric_sequence(opt);
  try {
    for (double s : v.points) v.values.push_back(diagonal_bracket(spec, s) / s);
  } catch (const Error& e) {
    v.evidence = std::string("evaluation failed: ") + e.what();
    v.values.clear();
    return v;
  }
  const std::size_t n = v.values.size(), first = n - std::max<std::size_t>(3, n / 2);
  bool decreasing = true, nondecreasing = true;
  for (std::size_t k = first + 1; k < n; ++k) {
    decreasing = decreasing && v.values[k] < v.values[k - 1];
    nondecreasing = nondecreasing && v.values[k] >= v.values[k - 1];
  }
  const double last = v.values.back();
  if (decreasing && last < opt.threshold) {
    v.status = Status::holds;
    v.evidence = "ratio decreasing along the tail, last value below threshold";
  } else if (nondecreasing || (last >= opt.threshold && last >= 0.5 * v.values[first])) {
    v.status = Status::fails;
    v.evidence = "ratio bounded away from 0 along the tail";
  } else {
    v.evidence = "ratio decreasing but not yet below threshold";
  }
  return v;
}

/// sup_{s >= 0} bracket(s) < inf. The bracket is non-decreasing for
/// monotone f, so this is the convergence of its increments along the
/// sequence; the plateau estimate is reported in `values`' extrapolation.
inline ConditionVerdict check_sup_bounded(const ProblemSpec& spec, const SequenceOptions& opt = {},
                                          const ProbeOptions& probe = {}, double* plateau = nullptr) {
  ConditionVerdict v;
  v.points = geometric_sequence(opt);
  double at_zero = 0.0;
  try {
    at_zero = diagonal_bracket(spec, 0.0);
    for (double s : v.points) v.values.push_back(diagonal_bracket(spec, s));
  } catch (const Error& e) {
    v.evidence = std::string("evaluation failed: ") + e.what();
    v.values.clear();
    return v;
  }
  const DivergenceVerdict dv = verdict_from_partials(v.points, v.values, probe, at_zero);
  if (dv.converges()) {
    v.status = Status::holds;
    v.evidence = "bracket approaches a finite plateau ~ " + std::to_string(*dv.limit);
    if (plateau) *plateau = *dv.limit;
  } else if (dv.diverges()) {
    v.status = Status::fails;
    v.evidence = "bracket keeps growing";
  } else {
    v.evidence = "bracket growth undetermined: " + dv.note;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Standalone growth conditions on a scalar nonlinearity

using ScalarFunction = std::function<double(double)>;

namespace detail {

inline DivergenceVerdict failed_probe(const ProbeGrid& grid, const std::string& note) {
  DivergenceVerdict v;
  v.horizons = grid.horizons();
  v.note = note;
  return v;
}

// Probe of t |-> 1 / (int_0^t g)^{power} over [r_start, inf), inner
// integral by cumulative trapezoid on the probe grid.
inline DivergenceVerdict probe_inverse_primitive(const ScalarFunction& g, double power, ProbeOptions opt) {
  ProbeGrid grid = ProbeGrid::make(opt, true);
  std::vector<double> gv(grid.nodes.size());
  try {
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = g(grid.nodes[i]);
  } catch (const Error& e) {
    return failed_probe(grid, std::string("evaluation failed: ") + e.what());
  }
  const std::vector<double> G = cumulative_trapezoid(grid.nodes, gv);
  std::vector<double> y(G.size(), 0.0);
  for (std::size_t i = grid.marks[0]; i < G.size(); ++i) {
    if (!(G[i] > 0.0)) return failed_probe(grid, "zero denominator: primitive vanishes at t = " + std::to_string(grid.nodes[i]));
    y[i] = std::pow(G[i], -power);
  }
  return probe_tabulated(grid, y, opt);
}

inline DivergenceVerdict probe_reciprocal(const ScalarFunction& g, double power, const ProbeOptions& opt) {
  return probe_divergence(
      [&](double s) {
        const double v = g(s);
        if (!(v > 0.0)) throw DomainError("zero denominator at s = " + std::to_string(s));
        return std::pow(v, -power);
      },
      opt);
}

}  // namespace detail

/// int_1^inf [int_0^s f(t) dt]^{-1/2} ds = inf ?
inline DivergenceVerdict check_keller_osserman(const ScalarFunction& f, ProbeOptions opt = {}) {
  opt.r_start = 1.0;
  return detail::probe_inverse_primitive(f, 0.5, opt);
}

/// int_1^inf dt / f(t) = inf ?
inline DivergenceVerdict check_ye_zhou(const ScalarFunction& f, ProbeOptions opt = {}) {
  opt.r_start = 1.0;
  return detail::probe_reciprocal(f, 1.0, opt);
}

// ---------------------------------------------------------------------------
// Consistency of the two implication remarks

struct RemarkReport {
  Status c3 = Status::inconclusive;
  // Per component: int_a^inf ds / f_j^{1/(min p - 1)}(s, ..., s)
  std::vector<DivergenceVerdict> reciprocal;
  // Per component: int_a^inf dt / (int_0^t f_j(s, ..., s) ds)^{1/min p}
  std::vector<DivergenceVerdict> primitive;
  bool applicable = false;    // C3 holds, so the first implication has content
  bool contradiction = false; // a probe outcome contradicts an implication
  std::string note;
};

inline RemarkReport check_remark_implications(const ProblemSpec& spec, Status c3, ProbeOptions opt = {}) {
  RemarkReport rep;
  rep.c3 = c3;
  rep.applicable = c3 == Status::holds;
  opt.r_start = spec.F_anchor;
  const double mp = spec.min_p();
  for (std::size_t j = 0; j < spec.d(); ++j) {
    const ScalarFunction fj = [&spec, j](double s) { return spec.f_diagonal(j, s); };
    rep.reciprocal.push_back(detail::probe_reciprocal(fj, 1.0 / (mp - 1.0), opt));
    rep.primitive.push_back(detail::probe_inverse_primitive(fj, 1.0 / mp, opt));
  }
  std::vector<std::string> notes;
  for (std::size_t j = 0; j < spec.d(); ++j) {
    const auto& r1 = rep.reciprocal[j];
    const auto& r2 = rep.primitive[j];
    if (rep.applicable && r1.converges()) {
      rep.contradiction = true;
      notes.push_back("component " + std::to_string(j + 1) + ": C3 holds but reciprocal integral converges");
    }
    if (r1.diverges() && r2.converges()) {
      rep.contradiction = true;
      notes.push_back("component " + std::to_string(j + 1) + ": reciprocal integral diverges but primitive integral converges");
    }
    if (r1.verdict == Convergence::inconclusive && !r1.note.empty())
      notes.push_back("component " + std::to_string(j + 1) + ": " + r1.note);
  }
  if (!rep.applicable) notes.insert(notes.begin(), "C3 does not hold: first implication not applicable");
  if (!rep.contradiction) notes.push_back("no numerical contradiction found");
  for (std::size_t i = 0; i < notes.size(); ++i) rep.note += (i ? "; " : "") + notes[i];
  return rep;
}

// ---------------------------------------------------------------------------
// Two-component Lair system  Delta u1 = a1 u2^alpha, Delta u2 = a2 u1^beta

struct LairInstance {
  Expr a1;
  Expr a2;
  double alpha = 1.0;
  double beta = 1.0;
  int N = 3;

  bool in_range() const { return alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0; }
};

struct LairReport {
  DivergenceVerdict first;
  DivergenceVerdict second;
  bool explosive_predicted = false;
  bool in_range = true;
  std::string note;
};

namespace detail {

// int_0^inf t a(t) (t^{2-N} int_0^t s^{N-3} int_0^s tau b(tau) dtau ds)^e dt
inline DivergenceVerdict lair_integral(const Expr& a, const Expr& b, double e, int N, const ProbeOptions& opt) {
  ProbeGrid grid = ProbeGrid::make(opt, true);
  const auto& x = grid.nodes;
  std::vector<double> y(x.size(), 0.0);
  try {
    std::vector<double> inner(x.size()), av(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      inner[i] = x[i] * b(x[i]);
      av[i] = a(x[i]);
    }
    std::vector<double> first = cumulative_trapezoid(x, inner);
    for (std::size_t i = 0; i < x.size(); ++i) first[i] *= std::pow(x[i], double(N - 3));
    const std::vector<double> second = cumulative_trapezoid(x, first);
    for (std::size_t i = 1; i < x.size(); ++i) y[i] = x[i] * av[i] * std::pow(std::pow(x[i], 2.0 - N) * second[i], e);
  } catch (const Error& err) {
    return failed_probe(grid, std::string("evaluation failed: ") + err.what());
  }
  const double head = simpson_segment(grid, y, 0, grid.marks[0]);
  return probe_tabulated(grid, y, opt, head);
}

}  // namespace detail

inline LairReport check_lair_proposition(const LairInstance& inst, const ProbeOptions& opt = {}) {
  if (inst.N < 3) throw std::invalid_argument("Lair criterion needs N >= 3");
  LairReport rep;
  rep.first = detail::lair_integral(inst.a1, inst.a2, inst.alpha, inst.N, opt);
  rep.second = detail::lair_integral(inst.a2, inst.a1, inst.beta, inst.N, opt);
  rep.in_range = inst.in_range();
  rep.explosive_predicted = rep.first.diverges() && rep.second.diverges();
  if (!rep.in_range) rep.note = "exponents outside (0,1]: reported, not mapped to the criterion";
  else if (rep.explosive_predicted) rep.note = "both integrals diverge: explosive radial solution predicted";
  else if (rep.first.converges() || rep.second.converges()) rep.note = "an integral converges: no explosive solution predicted";
  else rep.note = "undetermined";
  return rep;
}

/// Recognizes d = 2, p = (2, 2), h = 0, f1 = u2^alpha, f2 = u1^beta.
inline std::optional<LairInstance> match_lair(const ProblemSpec& spec) {
  if (spec.d() != 2 || spec.p[0] != 2.0 || spec.p[1] != 2.0) return std::nullopt;
  auto is_zero = [](const Expr& e) { return e.root().op == Op::constant && e.root().value == 0.0; };
  if (!is_zero(spec.h[0]) || !is_zero(spec.h[1])) return std::nullopt;
  auto power_of = [](const Expr& e, std::size_t var) -> std::optional<double> {
    const Node& n = e.root();
    if (n.op == Op::variable && n.index == var) return 1.0;
    if (n.op == Op::pow && n.args[0]->op == Op::variable && n.args[0]->index == var &&
        n.args[1]->op == Op::constant && n.args[1]->value > 0.0)
      return n.args[1]->value;
    return std::nullopt;
  };
  auto alpha = power_of(spec.f[0], 1);
  auto beta = power_of(spec.f[1], 0);
  if (!alpha || !beta) return std::nullopt;
  return LairInstance{spec.a[0], spec.a[1], *alpha, *beta, spec.N};
}

// ---------------------------------------------------------------------------
// Bounded-solution window

struct C6Result {
  Status status = Status::not_applicable;
  double beta_min = 0.0;  // a/d (excluded)
  double beta_max = 0.0;  // largest feasible beta found
  bool beta_max_is_domain_limit = false;
  double g_at_max = 0.0;
  std::vector<std::pair<double, double>> trace;  // (beta, g(beta)) in evaluation order
  std::string note;
};

struct C6Options {
  double eps = 1e-6;  // first probe at beta = a/d (1 + eps)
  int max_doublings = 60;
  int bisection_steps = 200;
};

/// Searches the window of beta > a/d with sum_j A_j(inf) < F(inf) - F(d beta).
/// g(beta) = F(inf) - F(d beta) - sum_j A_j(inf) is decreasing, so feasibility
/// is decided at beta -> a/d and the right end is found by bisection.
inline C6Result check_C6(const ProblemSpec& spec, const FTable& F, const DivergenceVerdict& F_inf,
                         const std::vector<DivergenceVerdict>& A_inf, const C6Options& opt = {}) {
  C6Result res;
  const double d = double(spec.d());
  res.beta_min = spec.F_anchor / d;
  if (F_inf.verdict == Convergence::inconclusive ||
      std::any_of(A_inf.begin(), A_inf.end(), [](const auto& v) { return v.verdict == Convergence::inconclusive; })) {
    res.status = Status::inconclusive;
    res.note = "tail estimates inconclusive";
    return res;
  }
  if (!F_inf.converges() || !std::all_of(A_inf.begin(), A_inf.end(), [](const auto& v) { return v.converges(); })) {
    res.note = "requires F(inf) < inf and A_j(inf) < inf";
    return res;
  }
  const double F_limit = *F_inf.limit;
  double A_total = 0.0;
  for (const auto& v : A_inf) A_total += *v.limit;

  FTable table = F;
  auto g = [&](double beta) {
    const double s = d * beta;
    if (s > table.s_max()) table = table.covering_point(s);
    const double val = F_limit - table(s) - A_total;
    res.trace.emplace_back(beta, val);
    return val;
  };

  double lo = res.beta_min * (1.0 + opt.eps);
  if (!(g(lo) > 0.0)) {
    res.status = Status::fails;
    res.note = "infeasible already as beta -> a/d";
    return res;
  }
  res.status = Status::holds;
  if (A_total == 0.0) {
    res.beta_max = table.s_max() / d;
    res.beta_max_is_domain_limit = true;
    res.g_at_max = F_limit - table(table.s_max());
    res.note = "sum of A_j(inf) vanishes: every tabulated beta is feasible";
    return res;
  }
  double hi = 2.0 * lo;
  try {
    for (int k = 0; g(hi) > 0.0; ++k) {
      if (k >= opt.max_doublings) throw RangeError("doubling limit");
      lo = hi;
      hi *= 2.0;
    }
  } catch (const RangeError&) {
    res.beta_max = lo;
    res.beta_max_is_domain_limit = true;
    res.g_at_max = res.trace.back().second;
    res.note = "no infeasible beta found within the F table range";
    return res;
  }
  for (int it = 0; it < opt.bisection_steps; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  res.beta_max = lo;
  res.g_at_max = F_limit - table(d * lo) - A_total;
  return res;
}

// ---------------------------------------------------------------------------
// Classification

struct SubVerdicts {
  Status c3 = Status::inconclusive;
  Status c4 = Status::inconclusive;
  Status c5 = Status::inconclusive;            // all A_j(inf) finite
  Status all_A_diverge = Status::inconclusive; // all A_j(inf) infinite
  Status c6 = Status::not_applicable;
  Status sublinearity = Status::inconclusive;
  Status sup_bounded = Status::inconclusive;
};

/// Maps sub-verdicts to a theorem. Only "holds" facts are used, so refining
/// an inconclusive sub-verdict never turns a determined answer inconclusive.
inline Theorem decide(const SubVerdicts& v, bool equal_beta) {
  if (equal_beta) {
    if (v.c3 == Status::holds && v.c5 == Status::holds) return Theorem::thm1_bounded;
    if (v.c3 == Status::holds && v.all_A_diverge == Status::holds) return Theorem::thm1_large;
    if (v.c4 == Status::holds && v.c5 == Status::holds && v.c6 == Status::holds) return Theorem::thm2_bounded;
  }
  if (v.all_A_diverge == Status::holds && v.sublinearity == Status::holds) return Theorem::thm3_large;
  if (v.c5 == Status::holds && v.sup_bounded == Status::holds) return Theorem::thm3_bounded;
  return Theorem::inconclusive;
}

inline SubVerdicts sub_verdicts(const DivergenceVerdict& F_inf, const std::vector<DivergenceVerdict>& A_inf) {
  SubVerdicts v;
  switch (F_inf.verdict) {
    case Convergence::diverges: v.c3 = Status::holds; v.c4 = Status::fails; break;
    case Convergence::converges: v.c3 = Status::fails; v.c4 = Status::holds; break;
    default: break;
  }
  const bool all_conv = std::all_of(A_inf.begin(), A_inf.end(), [](const auto& a) { return a.converges(); });
  const bool all_div = std::all_of(A_inf.begin(), A_inf.end(), [](const auto& a) { return a.diverges(); });
  const bool any_conv = std::any_of(A_inf.begin(), A_inf.end(), [](const auto& a) { return a.converges(); });
  const bool any_div = std::any_of(A_inf.begin(), A_inf.end(), [](const auto& a) { return a.diverges(); });
  v.c5 = all_conv ? Status::holds : any_div ? Status::fails : Status::inconclusive;
  v.all_A_diverge = all_div ? Status::holds : any_conv ? Status::fails : Status::inconclusive;
  return v;
}

struct ClassifyOptions {
  ProbeOptions probe;
  SequenceOptions sequence;
  C6Options c6;
  FTableOptions ftable;
};

struct Classification {
  Theorem theorem = Theorem::inconclusive;
  bool equal_beta = true;
  DivergenceVerdict F_inf;
  std::vector<DivergenceVerdict> A_inf;
  ConditionVerdict c3, c4, c5, c6, sublinearity, sup_bounded;
  C6Result c6_window;
  std::optional<bool> beta_in_window;  // Thm2 only
  std::string note;
};

inline ConditionVerdict describe(Status s, std::string evidence) {
  ConditionVerdict v;
  v.status = s;
  v.evidence = std::move(evidence);
  return v;
}

inline Classification classify(const ProblemSpec& spec, const CentralValues& beta, const ClassifyOptions& opt = {}) {
  spec.validate();
  Classification c;
  c.equal_beta = beta.all_equal();
  c.F_inf = estimate_F_inf(spec, opt.probe);
  for (std::size_t j = 0; j < spec.d(); ++j) c.A_inf.push_back(estimate_A_inf(spec, j, opt.probe));
  SubVerdicts sv = sub_verdicts(c.F_inf, c.A_inf);

  auto F_evidence = [&] {
    std::string e = std::string("F(inf) probe ") + to_string(c.F_inf.verdict);
    if (c.F_inf.limit) e += ", F(inf) ~ " + std::to_string(*c.F_inf.limit);
    if (!c.F_inf.note.empty()) e += " (" + c.F_inf.note + ")";
    return e;
  };
  c.c3 = describe(sv.c3, F_evidence());
  c.c4 = describe(sv.c4, F_evidence());
  {
    std::string e;
    for (std::size_t j = 0; j < c.A_inf.size(); ++j) {
      e += (j ? "; " : "") + std::string("A_") + std::to_string(j + 1) + "(inf) " + to_string(c.A_inf[j].verdict);
      if (c.A_inf[j].limit) e += " ~ " + std::to_string(*c.A_inf[j].limit);
    }
    c.c5 = describe(sv.c5, e);
  }

  if (sv.c4 == Status::holds && sv.c5 == Status::holds) {
    const double s_max = std::max(10.0 * double(spec.d()) * beta.values().back(), spec.F_anchor + 1.0);
    c.c6_window = check_C6(spec, build_F(spec, s_max, opt.ftable), c.F_inf, c.A_inf, opt.c6);
    sv.c6 = c.c6_window.status;
    std::string e = c.c6_window.note;
    if (sv.c6 == Status::holds)
      e = "feasible beta in (" + std::to_string(c.c6_window.beta_min) + ", " + std::to_string(c.c6_window.beta_max) +
          "]" + (e.empty() ? "" : "; " + e);
    c.c6 = describe(sv.c6, e);
  } else {
    c.c6 = describe(Status::not_applicable, "requires C4 and C5");
  }

  c.sublinearity = check_sublinearity(spec, opt.sequence);
  c.sup_bounded = check_sup_bounded(spec, opt.sequence, opt.probe);
  sv.sublinearity = c.sublinearity.status;
  sv.sup_bounded = c.sup_bounded.status;

  c.theorem = decide(sv, c.equal_beta);
  if (c.theorem == Theorem::thm2_bounded) {
    const double b = beta[0];
    c.beta_in_window = b > c.c6_window.beta_min && b <= c.c6_window.beta_max;
  }
  if (!c.equal_beta) c.note = "unequal central values: only the third theorem's conditions apply";
  if (c.theorem == Theorem::inconclusive) {
    if (sv.c3 == Status::holds)
      c.note = "existence holds (F(inf) = inf) but the bounded/large dichotomy is undetermined";
    else if (c.note.empty())
      c.note = "required conditions undetermined or failing";
  }
  return c;
}

}  // namespace radsys
