#pragma once

// Weight functions H_j, barrier functions A_j, and the F quantity
//   H_j(r) = r^{N-1} exp(int_0^r h_j)
//   A_j(r) = int_0^r ( H_j(t)^{-1} int_0^t H_j a_j )^{1/(p_j-1)} dt
//   F(r)   = int_a^r (1 + sum_j f_j(s, ..., s))^{1/(1 - min p)} ds
// together with F^{-1} and tail estimates for A_j(inf) and F(inf).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radsys/error.hpp"
#include "radsys/problem.hpp"
#include "radsys/quadrature.hpp"

namespace radsys {

/// Discrete form of q |-> (1/H(t)) int_0^t H(s) q(s) ds on increasing nodes
/// starting at 0, with H(s) = s^{N-1} exp(E(s)) and E given at the nodes.
///
/// On each cell exp(E) q is interpolated linearly and the s^{N-1} factor is
/// integrated exactly (Gauss-Legendre of sufficient order). Everything is
/// scaled by H(t_i), so nothing overflows when E grows. The value at t = 0
/// is the limit 0.
class RadialKernel {
 public:
  RadialKernel(std::span<const double> nodes, int N, std::span<const double> exponent) {
    if (nodes.size() != exponent.size()) throw std::invalid_argument("RadialKernel: size mismatch");
    if (nodes.size() < 2 || nodes[0] != 0.0) throw std::invalid_argument("RadialKernel: nodes must start at 0");
    const std::size_t n = nodes.size();
    carry_.assign(n, 0.0);
    left_.assign(n, 0.0);
    right_.assign(n, 0.0);
    const GaussRule rule = gauss_legendre(std::size_t(N) / 2 + 1);
    const double power = double(N - 1);
    for (std::size_t i = 1; i < n; ++i) {
      const double x0 = nodes[i - 1], x1 = nodes[i], width = x1 - x0;
      if (!(width > 0.0)) throw std::invalid_argument("RadialKernel: nodes must increase");
      const double decay = std::exp(exponent[i - 1] - exponent[i]);
      double wl = 0.0, wr = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double s = x0 + 0.5 * width * (1.0 + rule.nodes[k]);
        const double w = 0.5 * width * rule.weights[k] * std::pow(s / x1, power);
        wl += w * (x1 - s) / width;
        wr += w * (s - x0) / width;
      }
      carry_[i] = std::pow(x0 / x1, power) * decay;
      left_[i] = wl * decay;
      right_[i] = wr;
    }
  }

  std::size_t size() const noexcept { return carry_.size(); }

  void weighted_mean(std::span<const double> q, std::span<double> out) const {
    out[0] = 0.0;
    for (std::size_t i = 1; i < carry_.size(); ++i)
      out[i] = carry_[i] * out[i - 1] + left_[i] * q[i - 1] + right_[i] * q[i];
  }

  std::vector<double> weighted_mean(std::span<const double> q) const {
    if (q.size() != size()) throw std::invalid_argument("RadialKernel: size mismatch");
    std::vector<double> out(size());
    weighted_mean(q, out);
    return out;
  }

 private:
  std::vector<double> carry_;
  std::vector<double> left_;
  std::vector<double> right_;
};

/// Raises the kernel output to 1/(p-1) in place. A negative value can only
/// come from a negative source term.
inline void raise_to_flux(std::span<double> values, double p) {
  const double e = 1.0 / (p - 1.0);
  for (double& v : values) {
    if (v < 0.0) {
      if (v > -1e-300) v = 0.0;
      else throw InternalError("negative inner integral in radial kernel (negative coefficient or nonlinearity?)");
    }
    v = std::pow(v, e);
  }
}

inline std::vector<double> sample(const Expr& e, std::span<const double> nodes) {
  std::vector<double> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = e(nodes[i]);
  return out;
}

/// int_0^r h_j on the grid.
inline GridFunction build_exponent_integral(const ProblemSpec& spec, const RadialGrid& grid, std::size_t j) {
  return cumulative_integral(GridFunction(grid, sample(spec.h.at(j), grid.nodes())));
}

inline GridFunction build_H(const ProblemSpec& spec, const RadialGrid& grid, std::size_t j) {
  const GridFunction e = build_exponent_integral(spec, grid, j);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::pow(grid.node(i), double(spec.N - 1)) * std::exp(e[i]);
    if (!std::isfinite(out[i])) throw DomainError("H overflows at r = " + std::to_string(grid.node(i)));
  }
  return GridFunction(grid, std::move(out));
}

namespace detail {

// A_j integrand (the flux of A_j) at arbitrary increasing nodes from 0.
inline std::vector<double> A_flux(const ProblemSpec& spec, std::size_t j, std::span<const double> nodes) {
  std::vector<double> h = sample(spec.h.at(j), nodes);
  std::vector<double> e = cumulative_trapezoid(nodes, h);
  RadialKernel kernel(nodes, spec.N, e);
  std::vector<double> flux = kernel.weighted_mean(sample(spec.a.at(j), nodes));
  raise_to_flux(flux, spec.p.at(j));
  return flux;
}

}  // namespace detail

inline GridFunction build_A(const ProblemSpec& spec, const RadialGrid& grid, std::size_t j) {
  const std::vector<double> nodes = grid.nodes();
  std::vector<double> flux = detail::A_flux(spec, j, nodes);
  return cumulative_integral(GridFunction(grid, std::move(flux)));
}

/// F integrand (1 + sum_j f_j(s, ..., s))^{1/(1 - min p)}.
inline double F_integrand(const ProblemSpec& spec, double s) {
  return std::pow(1.0 + spec.f_diagonal_sum(s), spec.F_exponent());
}

struct FTableOptions {
  std::size_t cells_per_segment = 4096;
  std::size_t max_doublings = 128;
};

/// Tabulated, strictly increasing F on [s_min, s_max] with F(anchor) = 0.
/// Values between nodes use monotone cubic Hermite interpolation with the
/// exact integrand as slope data. Tables never mutate: extension returns a
/// new table. Once increments fall below floating-point resolution the table
/// is saturated: it stops growing and F is constant at F_max() beyond s_max().
class FTable {
 public:
  using Integrand = std::function<double(double)>;

  FTable(Integrand integrand, double anchor, double s_min, double s_max, FTableOptions opt = {})
      : g_(std::move(integrand)), anchor_(anchor), opt_(opt) {
    if (!(s_min > 0.0 || s_min == 0.0) || !(anchor > 0.0) || !(s_max > anchor) || s_min > anchor)
      throw std::invalid_argument("F table needs 0 <= s_min <= a < s_max");
    if (opt_.cells_per_segment < 2) throw std::invalid_argument("F table needs >= 2 cells per segment");
    s_.push_back(s_min);
    F_.push_back(0.0);
    dF_.push_back(g_(s_min));
    if (s_min < anchor) append(anchor);
    if (saturated_) throw RangeError("F table saturated below the anchor");
    const std::size_t anchor_index = s_.size() - 1;
    const double shift = F_[anchor_index];
    for (double& v : F_) v -= shift;
    F_[anchor_index] = 0.0;
    append(s_max);
  }

  double anchor() const noexcept { return anchor_; }
  double s_min() const noexcept { return s_.front(); }
  double s_max() const noexcept { return s_.back(); }
  double F_min() const noexcept { return F_.front(); }
  double F_max() const noexcept { return F_.back(); }
  bool saturated() const noexcept { return saturated_; }
  std::span<const double> nodes() const noexcept { return s_; }
  std::span<const double> values() const noexcept { return F_; }
  std::span<const double> slopes() const noexcept { return dF_; }
  const FTableOptions& options() const noexcept { return opt_; }

  double integrand(double s) const { return g_(s); }

  bool covers_point(double s) const { return s >= s_min() && (s <= s_max() || saturated_); }

  double operator()(double s) const {
    if (!covers_point(s)) throw std::out_of_range("F table does not cover s = " + std::to_string(s));
    if (s >= s_max()) return F_max();
    std::size_t i = cell_of_point(s);
    return hermite(i, (s - s_[i]) / (s_[i + 1] - s_[i]));
  }

  /// s in the table with F(s) = y; requires F_min() <= y <= F_max().
  double inverse(double y) const {
    if (!(y >= F_min() && y <= F_max())) throw std::out_of_range("F table does not cover y = " + std::to_string(y));
    std::size_t i = std::size_t(std::upper_bound(F_.begin(), F_.end(), y) - F_.begin());
    if (i == 0) return s_.front();
    if (i >= F_.size()) return s_.back();
    --i;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (hermite(i, mid) < y) lo = mid;
      else hi = mid;
    }
    const double t = std::fabs(hermite(i, lo) - y) <= std::fabs(hermite(i, hi) - y) ? lo : hi;
    return s_[i] + t * (s_[i + 1] - s_[i]);
  }

  /// Same table with s_max doubled.
  FTable extended() const {
    FTable next = *this;
    if (!saturated_) next.append(2.0 * s_max());
    return next;
  }

  /// Table extended by doubling until it covers the point s.
  FTable covering_point(double s) const {
    FTable t = *this;
    for (std::size_t k = 0; !t.covers_point(s); ++k) {
      if (k >= opt_.max_doublings) throw RangeError("F table extension limit reached");
      t.append(2.0 * t.s_max());
    }
    return t;
  }

  /// Table extended by doubling until F_max() >= y. When F(inf) is known to
  /// be finite (`limit`), y >= limit is reported as out of range at once.
  FTable covering_value(double y, std::optional<double> limit = {}) const {
    if (limit && y >= *limit)
      throw RangeError("beyond range of F^{-1}: value " + std::to_string(y) + " >= F(inf) ~ " +
                       std::to_string(*limit));
    FTable t = *this;
    for (std::size_t k = 0; y > t.F_max(); ++k) {
      if (t.saturated_) throw RangeError("beyond range of F^{-1}: F saturates at " + std::to_string(t.F_max()));
      if (k >= opt_.max_doublings) throw RangeError("beyond range of F^{-1}: table extension limit reached");
      t.append(2.0 * t.s_max());
    }
    return t;
  }

 private:
  std::size_t cell_of_point(double s) const {
    std::size_t i = std::size_t(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin());
    if (i == 0) return 0;
    return std::min(i - 1, s_.size() - 2);
  }

  // Monotone (Fritsch-Carlson limited) cubic Hermite on cell i at t in [0,1].
  double hermite(std::size_t i, double t) const {
    const double w = s_[i + 1] - s_[i];
    const double delta = (F_[i + 1] - F_[i]) / w;
    double m0 = dF_[i], m1 = dF_[i + 1];
    const double a = m0 / delta, b = m1 / delta;
    if (a * a + b * b > 9.0) {
      const double tau = 3.0 / std::sqrt(a * a + b * b);
      m0 *= tau;
      m1 *= tau;
    }
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * F_[i] + (t3 - 2 * t2 + t) * w * m0 + (-2 * t3 + 3 * t2) * F_[i + 1] +
           (t3 - t2) * w * m1;
  }

  void append(double hi) {
    if (saturated_) return;
    static const GaussRule rule = gauss_legendre(5);
    const double lo = s_.back();
    const std::size_t cells = opt_.cells_per_segment;
    for (std::size_t c = 1; c <= cells; ++c) {
      const double a = s_.back();
      const double b = c == cells ? hi : lo + (hi - lo) * double(c) / double(cells);
      double integral = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        integral += rule.weights[k] * g_(a + 0.5 * (b - a) * (1.0 + rule.nodes[k]));
      integral *= 0.5 * (b - a);
      const double next = F_.back() + integral;
      const double slope = g_(b);
      if (!(std::isfinite(next) && std::isfinite(slope) && slope > 0.0))
        throw DomainError("F integrand is not finite and positive near s = " + std::to_string(b));
      if (!(next > F_.back())) {
        saturated_ = true;
        return;
      }
      s_.push_back(b);
      F_.push_back(next);
      dF_.push_back(slope);
    }
  }

  Integrand g_;
  double anchor_;
  FTableOptions opt_;
  std::vector<double> s_;
  std::vector<double> F_;
  std::vector<double> dF_;
  bool saturated_ = false;
};

inline FTable build_F(const ProblemSpec& spec, double s_min, double s_max, FTableOptions opt = {}) {
  return FTable([spec](double s) { return F_integrand(spec, s); }, spec.F_anchor, s_min, s_max, opt);
}

inline FTable build_F(const ProblemSpec& spec, double s_max, FTableOptions opt = {}) {
  return build_F(spec, spec.F_anchor, s_max, opt);
}

/// s with F(s) = y, extending a copy of the table on demand.
inline double invert_F(const FTable& table, double y, std::optional<double> F_limit = {}) {
  if (y < table.F_min()) throw RangeError("below range of F^{-1}: value " + std::to_string(y));
  if (y <= table.F_max()) return table.inverse(y);
  return table.covering_value(y, F_limit).inverse(y);
}

/// Tail probe for F(inf), starting at the anchor a.
inline DivergenceVerdict estimate_F_inf(const ProblemSpec& spec, ProbeOptions opt = {}) {
  opt.r_start = spec.F_anchor;
  return probe_divergence([&](double s) { return F_integrand(spec, s); }, opt);
}

/// Tail probe for A_j(inf); partials include A_j(r_start).
inline DivergenceVerdict estimate_A_inf(const ProblemSpec& spec, std::size_t j, const ProbeOptions& opt = {}) {
  ProbeGrid grid = ProbeGrid::make(opt, true);
  std::vector<double> flux;
  try {
    flux = detail::A_flux(spec, j, grid.nodes);
    for (double v : flux)
      if (!std::isfinite(v)) throw DomainError("non-finite A integrand");
  } catch (const Error& e) {
    DivergenceVerdict v;
    v.horizons = grid.horizons();
    v.note = std::string("A integrand evaluation failed: ") + e.what();
    return v;
  }
  const double head = simpson_segment(grid, flux, 0, grid.marks[0]);
  return probe_tabulated(grid, flux, opt, head);
}

/// Everything the solver checks and the classifier need, for one spec and grid.
struct TransformTables {
  RadialGrid grid;
  std::vector<GridFunction> exponent;  // int_0^r h_j
  std::vector<GridFunction> A;
  std::vector<DivergenceVerdict> A_inf;
  FTable F;
  DivergenceVerdict F_inf;

  // sum_j A_j at node i
  double A_sum(std::size_t i) const {
    double s = 0.0;
    for (const auto& Aj : A) s += Aj[i];
    return s;
  }

  std::optional<double> F_limit() const { return F_inf.converges() ? F_inf.limit : std::nullopt; }
};

/// Builds tables for central values up to `beta_max` (and down to
/// `beta_min`, so that F(d beta) is tabulated even when d beta < a).
inline TransformTables build_tables(const ProblemSpec& spec, const RadialGrid& grid, double beta_min,
                                    double beta_max, const ProbeOptions& probe = {},
                                    const FTableOptions& fopt = {}) {
  const double d = double(spec.d());
  const double s_min = std::min(spec.F_anchor, d * beta_min);
  const double s_max = std::max(10.0 * d * beta_max, spec.F_anchor + 1.0);
  std::vector<GridFunction> exponent, A;
  std::vector<DivergenceVerdict> A_inf;
  for (std::size_t j = 0; j < spec.d(); ++j) {
    exponent.push_back(build_exponent_integral(spec, grid, j));
    A.push_back(build_A(spec, grid, j));
    A_inf.push_back(estimate_A_inf(spec, j, probe));
  }
  return TransformTables{grid,
                         std::move(exponent),
                         std::move(A),
                         std::move(A_inf),
                         build_F(spec, s_min, s_max, fopt),
                         estimate_F_inf(spec, probe)};
}

}  // namespace radsys
