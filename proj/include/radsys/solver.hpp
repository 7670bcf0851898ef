#pragma once

// Monotone successive approximation of the radial integral system
//   u_j(r) = beta_j + int_0^r ( H_j(t)^{-1} int_0^t H_j a_j f_j(u) ds )^{1/(p_j-1)} dt
// and a posteriori checks of the result (sandwich bounds, residuals).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radsys/error.hpp"
#include "radsys/problem.hpp"
#include "radsys/quadrature.hpp"
#include "radsys/transforms.hpp"

namespace radsys {

using Iterate = std::vector<std::vector<double>>;  // [component][node]

/// The right-hand side of the integral system on a fixed grid.
class IntegralOperator {
 public:
  IntegralOperator(ProblemSpec spec, RadialGrid grid) : spec_(std::move(spec)), grid_(grid) {
    spec_.validate();
    const std::vector<double> nodes = grid_.nodes();
    for (std::size_t j = 0; j < spec_.d(); ++j) {
      const GridFunction e = build_exponent_integral(spec_, grid_, j);
      kernels_.emplace_back(nodes, spec_.N, e.values());
      a_.push_back(sample(spec_.a[j], nodes));
    }
  }

  const ProblemSpec& spec() const noexcept { return spec_; }
  const RadialGrid& grid() const noexcept { return grid_; }

  /// (T u)_j = beta_j + cumulative integral of the component flux.
  Iterate apply(const Iterate& u, const CentralValues& beta) const {
    const std::size_t d = spec_.d(), n = grid_.size();
    std::vector<std::vector<double>> source(d, std::vector<double>(n));
    std::vector<double> env(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) env[k] = u[k][i];
      for (std::size_t j = 0; j < d; ++j) source[j][i] = a_[j][i] * spec_.f[j].eval(env);
    }
    Iterate out(d, std::vector<double>(n));
    std::vector<double> flux(n);
    const double half_h = 0.5 * grid_.spacing();
    for (std::size_t j = 0; j < d; ++j) {
      kernels_[j].weighted_mean(source[j], flux);
      raise_to_flux(flux, spec_.p[j]);
      auto& uj = out[j];
      uj[0] = beta[j];
      double acc = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        acc += half_h * (flux[i - 1] + flux[i]);
        uj[i] = beta[j] + acc;
      }
    }
    return out;
  }

 private:
  ProblemSpec spec_;
  RadialGrid grid_;
  std::vector<RadialKernel> kernels_;
  std::vector<std::vector<double>> a_;
};

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  // An iterate value below its predecessor by more than this relative
  // amount counts as a monotonicity violation (rounding allowance).
  double monotone_slack = 1e-13;
};

enum class SolveStatus { converged, max_iter_reached, diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter_reached: return "max_iter_reached";
    default: return "diverged";
  }
}

struct SolutionBundle {
  RadialGrid grid;
  CentralValues beta;
  std::vector<GridFunction> u;
  SolveStatus status = SolveStatus::converged;
  std::size_t iterations = 0;
  double final_update = 0.0;
  double tol = 0.0;
  bool monotone = true;  // every iterate >= its predecessor at every node
  std::size_t monotone_violations = 0;
  double worst_monotone_drop = 0.0;
  double L_estimate = 0.0;  // sup over the grid of sum_j u_j
  std::string note;

  SolutionBundle(RadialGrid g, CentralValues b, std::vector<GridFunction> values = {})
      : grid(std::move(g)), beta(std::move(b)), u(std::move(values)) {}

  bool converged() const noexcept { return status == SolveStatus::converged; }
  std::size_t d() const noexcept { return u.size(); }

  /// Wraps stored values (e.g. read back from a file) for verification.
  static SolutionBundle from_values(RadialGrid grid, CentralValues beta, const Iterate& values) {
    std::vector<GridFunction> u;
    for (const auto& v : values) u.emplace_back(grid, v);
    SolutionBundle b(grid, std::move(beta), std::move(u));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double s = 0.0;
      for (const auto& uj : b.u) s += uj[i];
      b.L_estimate = std::max(b.L_estimate, s);
    }
    return b;
  }
};

/// Called after every iteration with the iteration count and the new iterate.
using IterationObserver = std::function<void(std::size_t, const Iterate&)>;

/// Monotone iteration from u^0 = beta until the sup-norm update is <= tol.
/// Non-convergence and blow-up (non-finite values) are reported through
/// the bundle's status; the last finite iterate is kept.
inline SolutionBundle iterate(const IntegralOperator& op, const CentralValues& beta, const SolverOptions& opt = {},
                              const IterationObserver& observer = {}) {
  const ProblemSpec& spec = op.spec();
  const RadialGrid& grid = op.grid();
  if (beta.size() != spec.d()) throw std::invalid_argument("central values must have d entries");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");

  const std::size_t d = spec.d(), n = grid.size();
  Iterate u(d);
  for (std::size_t j = 0; j < d; ++j) u[j].assign(n, beta[j]);

  SolutionBundle out(grid, beta);
  out.tol = opt.tol;
  out.status = SolveStatus::max_iter_reached;
  for (std::size_t k = 1; k <= opt.max_iter; ++k) {
    Iterate next;
    try {
      next = op.apply(u, beta);
    } catch (const DomainError& e) {
      out.status = SolveStatus::diverged;
      out.note = std::string("iteration ") + std::to_string(k) + ": " + e.what();
      break;
    }
    bool finite = true;
    double update = 0.0;
    for (std::size_t j = 0; j < d && finite; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double v = next[j][i], prev = u[j][i];
        if (!std::isfinite(v)) {
          finite = false;
          break;
        }
        const double drop = prev - v;
        if (drop > opt.monotone_slack * std::max(1.0, std::fabs(prev))) {
          ++out.monotone_violations;
          out.worst_monotone_drop = std::max(out.worst_monotone_drop, drop);
        }
        update = std::max(update, std::fabs(v - prev));
      }
    }
    if (!finite) {
      out.status = SolveStatus::diverged;
      out.note = "iterates became non-finite at iteration " + std::to_string(k) + " (blow-up before R?)";
      break;
    }
    u = std::move(next);
    out.iterations = k;
    out.final_update = update;
    if (observer) observer(k, u);
    if (update <= opt.tol) {
      out.status = SolveStatus::converged;
      break;
    }
  }
  if (out.status == SolveStatus::max_iter_reached)
    out.note = "no fixed point found at this tolerance within max_iter";
  out.monotone = out.monotone_violations == 0;

  for (std::size_t j = 0; j < d; ++j) out.u.emplace_back(grid, u[j]);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += u[j][i];
    out.L_estimate = std::max(out.L_estimate, s);
  }
  return out;
}

inline SolutionBundle iterate(const ProblemSpec& spec, const RadialGrid& grid, const CentralValues& beta,
                              const SolverOptions& opt = {}, const IterationObserver& observer = {}) {
  return iterate(IntegralOperator(spec, grid), beta, opt, observer);
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyOptions {
  double bound_slack = 1e-6;    // absolute slack on both sandwich inequalities
  double integral_tol = 1e-9;   // on sup |u - T u|
  double ode_window = 0.1;      // ODE residual checked on [w, R - w]
  double ode_tol = 1e-2;        // on the windowed ODE residual, relative to 1 + |a f|
};

struct BoundCurves {
  std::vector<std::vector<double>> lower;  // per component
  std::optional<std::vector<double>> upper;
  std::string upper_note;
};

/// Lower bounds beta_j + f_j(beta)^{1/(p_j-1)} A_j(r) and, for equal
/// central values, the upper bound F^{-1}(F(d beta) + sum_j A_j(r)).
inline BoundCurves bound_curves(const ProblemSpec& spec, const TransformTables& tables, const CentralValues& beta) {
  const std::size_t d = spec.d(), n = tables.grid.size();
  BoundCurves c;
  const std::vector<double>& bv = beta.values();
  for (std::size_t j = 0; j < d; ++j) {
    const double gain = std::pow(spec.f[j].eval(bv), 1.0 / (spec.p[j] - 1.0));
    std::vector<double> lb(n);
    for (std::size_t i = 0; i < n; ++i) lb[i] = beta[j] + gain * tables.A[j][i];
    c.lower.push_back(std::move(lb));
  }
  if (!beta.all_equal()) {
    c.upper_note = "upper bound is stated for equal central values only";
    return c;
  }
  try {
    const double s0 = double(d) * beta[0];
    FTable table = s0 < tables.F.s_min() ? build_F(spec, s0, tables.F.s_max(), tables.F.options())
                                         : tables.F.covering_point(s0);
    const double F0 = table(s0);
    table = table.covering_value(F0 + tables.A_sum(n - 1), tables.F_limit());
    std::vector<double> ub(n);
    for (std::size_t i = 0; i < n; ++i) ub[i] = i == 0 ? s0 : table.inverse(F0 + tables.A_sum(i));
    c.upper = std::move(ub);
  } catch (const Error& e) {
    c.upper_note = std::string("upper bound not evaluable: ") + e.what();
  }
  return c;
}

struct BoundsReport {
  std::vector<double> lower_margin;  // max_r (lb_j - u_j); > 0 means violated
  std::vector<double> upper_margin;  // max_r (u_j - ub); empty when not evaluable
  std::optional<double> sum_upper_margin;  // max_r (sum_j u_j - ub)
  std::string upper_note;
  double slack = 0.0;

  bool pass() const {
    for (double m : lower_margin)
      if (!(m <= slack)) return false;
    if (sum_upper_margin && !(*sum_upper_margin <= slack)) return false;
    return true;
  }
};

inline BoundsReport verify_bounds(const SolutionBundle& sol, const ProblemSpec& spec, const TransformTables& tables,
                                  const VerifyOptions& opt = {}) {
  if (!(sol.grid == tables.grid)) throw std::invalid_argument("solution and tables use different grids");
  const BoundCurves c = bound_curves(spec, tables, sol.beta);
  const std::size_t d = spec.d(), n = sol.grid.size();
  BoundsReport rep;
  rep.slack = opt.bound_slack;
  rep.upper_note = c.upper_note;
  for (std::size_t j = 0; j < d; ++j) {
    double m = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, c.lower[j][i] - sol.u[j][i]);
    rep.lower_margin.push_back(m);
  }
  if (c.upper) {
    double ms = -INFINITY;
    std::vector<double> mj(d, -INFINITY);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        s += sol.u[j][i];
        mj[j] = std::max(mj[j], sol.u[j][i] - (*c.upper)[i]);
      }
      ms = std::max(ms, s - (*c.upper)[i]);
    }
    rep.upper_margin = mj;
    rep.sum_upper_margin = ms;
  }
  return rep;
}

struct ResidualReport {
  std::vector<double> integral;      // sup_r |u_j - (T u)_j|
  std::vector<double> ode;           // on [w, R - w], relative to 1 + |a_j f_j|
  std::vector<double> ode_absolute;  // same nodes, absolute
  std::vector<double> ode_near_origin;  // r < w; reported, not judged
  double integral_tol = 0.0;
  double ode_tol = 0.0;
  bool solution_converged = true;

  bool pass() const {
    for (double v : integral)
      if (!(v <= integral_tol)) return false;
    for (double v : ode)
      if (!(v <= ode_tol)) return false;
    return true;
  }
};

/// Integral-equation residual (primary) and finite-difference ODE residual
/// (secondary) of a stored solution.
inline ResidualReport residual(const SolutionBundle& sol, const ProblemSpec& spec, const VerifyOptions& opt = {}) {
  const RadialGrid& grid = sol.grid;
  const std::size_t d = spec.d(), n = grid.size();
  ResidualReport rep;
  rep.integral_tol = opt.integral_tol;
  rep.ode_tol = opt.ode_tol;
  rep.solution_converged = sol.converged();

  Iterate u(d);
  for (std::size_t j = 0; j < d; ++j) u[j].assign(sol.u[j].values().begin(), sol.u[j].values().end());

  const IntegralOperator op(spec, grid);
  const Iterate tu = op.apply(u, sol.beta);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(u[j][i] - tu[j][i]));
    rep.integral.push_back(m);
  }

  const double h = grid.spacing();
  const double R = grid.horizon();
  std::vector<double> env(d);
  for (std::size_t j = 0; j < d; ++j) {
    const GridFunction e = build_exponent_integral(spec, grid, j);
    const double pm1 = spec.p[j] - 1.0;
    const double power = double(spec.N - 1);
    auto log_H = [&](double r, double ex) { return power * std::log(r) + ex; };
    // flux at midpoint i+1/2 in sign-preserving form |u'|^{p-1} sgn(u')
    auto flux = [&](std::size_t i) {
      const double du = (u[j][i + 1] - u[j][i]) / h;
      return std::copysign(std::pow(std::fabs(du), pm1), du);
    };
    double rel = 0.0, abs_max = 0.0, near = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double r = grid.node(i);
      const double lh = log_H(r, e[i]);
      const double up = std::exp(log_H(0.5 * (r + grid.node(i + 1)), 0.5 * (e[i] + e[i + 1])) - lh) * flux(i);
      const double dn = std::exp(log_H(0.5 * (r + grid.node(i - 1)), 0.5 * (e[i] + e[i - 1])) - lh) * flux(i - 1);
      for (std::size_t k = 0; k < d; ++k) env[k] = u[k][i];
      const double rhs = spec.a[j](r) * spec.f[j].eval(env);
      const double res = std::fabs((up - dn) / h - rhs);
      if (r < opt.ode_window) {
        near = std::max(near, res);
      } else if (r <= R - opt.ode_window) {
        abs_max = std::max(abs_max, res);
        rel = std::max(rel, res / (1.0 + std::fabs(rhs)));
      }
    }
    rep.ode.push_back(rel);
    rep.ode_absolute.push_back(abs_max);
    rep.ode_near_origin.push_back(near);
  }
  return rep;
}

struct VerificationReport {
  BoundsReport bounds;
  ResidualReport residual;
  bool pass() const { return residual.solution_converged && bounds.pass() && residual.pass(); }
};

inline VerificationReport verify(const SolutionBundle& sol, const ProblemSpec& spec, const TransformTables& tables,
                                 const VerifyOptions& opt = {}) {
  return VerificationReport{verify_bounds(sol, spec, tables, opt), residual(sol, spec, opt)};
}

// ---------------------------------------------------------------------------
// Horizon doubling

struct GrowthWitness {
  double R = 0.0;
  std::vector<double> growth;    // u_j(2R) - u_j(R)
  std::vector<double> required;  // f_j(beta)^{1/(p_j-1)} (A_j(2R) - A_j(R))
  std::vector<double> agreement; // sup over [0, R] of |u_j^{R} - u_j^{2R}|
  double tolerance = 0.0;
  bool converged = false;

  bool holds() const {
    if (!converged) return false;
    for (std::size_t j = 0; j < growth.size(); ++j)
      if (!(growth[j] >= required[j] - tolerance)) return false;
    return true;
  }
};

/// Solves on [0, R] with M intervals and on [0, 2R] with 2M intervals (same
/// spacing) and compares the growth of each component over [R, 2R] with the
/// lower-bound growth f_j(beta)^{1/(p_j-1)} (A_j(2R) - A_j(R)).
inline GrowthWitness horizon_growth(const ProblemSpec& spec, const CentralValues& beta, double R, std::size_t M,
                                    const SolverOptions& opt = {}) {
  const RadialGrid g1(R, M), g2(2.0 * R, 2 * M);
  const SolutionBundle s1 = iterate(spec, g1, beta, opt);
  const SolutionBundle s2 = iterate(spec, g2, beta, opt);
  GrowthWitness w;
  w.R = R;
  w.tolerance = 10.0 * opt.tol;
  w.converged = s1.converged() && s2.converged();
  for (std::size_t j = 0; j < spec.d(); ++j) {
    const GridFunction A = build_A(spec, g2, j);
    const double gain = std::pow(spec.f[j].eval(beta.values()), 1.0 / (spec.p[j] - 1.0));
    w.growth.push_back(s2.u[j].back() - s1.u[j].back());
    w.required.push_back(gain * (A.back() - A[M]));
    double agree = 0.0;
    for (std::size_t i = 0; i <= M; ++i) agree = std::max(agree, std::fabs(s1.u[j][i] - s2.u[j][i]));
    w.agreement.push_back(agree);
  }
  return w;
}

}  // namespace radsys
