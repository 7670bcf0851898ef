#pragma once

// Radial grids, cumulative trapezoid integration and improper-integral
// divergence probing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radsys/error.hpp"

namespace radsys {

/// Uniform grid 0 = r_0 < r_1 < ... < r_M = R.
class RadialGrid {
 public:
  static constexpr std::size_t min_intervals = 8;

  RadialGrid(double horizon, std::size_t intervals) : horizon_(horizon), intervals_(intervals) {
    if (!(std::isfinite(horizon) && horizon > 0.0)) throw std::invalid_argument("grid horizon R must be > 0");
    if (intervals < min_intervals) throw std::invalid_argument("grid needs M >= 8 intervals");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t intervals() const noexcept { return intervals_; }
  std::size_t size() const noexcept { return intervals_ + 1; }
  double spacing() const noexcept { return horizon_ / double(intervals_); }

  double node(std::size_t i) const noexcept {
    return i == intervals_ ? horizon_ : horizon_ * double(i) / double(intervals_);
  }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
    return out;
  }

  friend bool operator==(const RadialGrid&, const RadialGrid&) = default;

 private:
  double horizon_;
  std::size_t intervals_;
};

/// Finite values of a scalar function at the nodes of a RadialGrid.
class GridFunction {
 public:
  GridFunction(RadialGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw std::invalid_argument("grid function size does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw DomainError("grid function value is not finite");
  }

  const RadialGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double back() const { return values_.back(); }

 private:
  RadialGrid grid_;
  std::vector<double> values_;
};

/// Composite trapezoid running integral on arbitrary increasing nodes;
/// out[0] = 0.
inline std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("cumulative_trapezoid: size mismatch");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i - 1] + y[i]);
  return out;
}

/// Running integral of `f` from 0 on its own grid.
inline GridFunction cumulative_integral(const GridFunction& f) {
  const auto& g = f.grid();
  const double h = g.spacing();
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return GridFunction(g, std::move(out));
}

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
inline GaussRule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  // Returns (P_n(x), P_n'(x)).
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      double pk = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    return std::pair{p1, double(n) * (x * p1 - p0) / (x * x - 1.0)};
  };
  GaussRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(x);
      double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    if (n % 2 == 1 && i == n / 2) x = 0.0;
    double dp = legendre(x).second;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Divergence probing

enum class Convergence { diverges, converges, inconclusive };

inline const char* to_string(Convergence c) {
  switch (c) {
    case Convergence::diverges: return "diverges";
    case Convergence::converges: return "converges";
    default: return "inconclusive";
  }
}

struct ProbeOptions {
  double r_start = 1.0;
  int horizons = 10;       // K: partial integrals up to r_start * 2^K
  double rho_conv = 0.9;   // increment ratio below which the tail counts as geometric
  int panels = 256;        // Simpson panels per dyadic segment (even)
  // Relative slack when testing increments for "non-decreasing"; absorbs
  // quadrature noise on integrands whose dyadic increments are constant.
  double flat_tol = 1e-8;
};

struct DivergenceVerdict {
  Convergence verdict = Convergence::inconclusive;
  std::optional<double> limit;   // only when converges
  std::vector<double> horizons;  // r_start * 2^k, k = 1..K
  std::vector<double> partials;  // integral up to each horizon
  std::string note;

  bool diverges() const noexcept { return verdict == Convergence::diverges; }
  bool converges() const noexcept { return verdict == Convergence::converges; }
};

/// Number of trailing increment ratios inspected by the ratio test.
inline std::size_t probe_tail_length(std::size_t K) {
  std::size_t ratios = K - 1;
  std::size_t t = std::max<std::size_t>(3, K / 2);
  return std::min(t, ratios);
}

/// Classifies a sequence of partial values I_1..I_K (I_0 = `offset`).
/// Increments D_k = I_k - I_{k-1}: if every tail ratio D_k/D_{k-1} <= rho_conv
/// the integral converges and its limit is extrapolated geometrically from
/// the last ratio; if the tail increments are non-decreasing it diverges.
inline DivergenceVerdict verdict_from_partials(std::vector<double> horizons, std::vector<double> partials,
                                               const ProbeOptions& opt, double offset = 0.0) {
  const std::size_t K = partials.size();
  if (K < 4) throw std::invalid_argument("divergence probe needs at least 4 horizons");
  DivergenceVerdict v;
  v.horizons = std::move(horizons);
  v.partials = std::move(partials);
  for (double p : v.partials) {
    if (!std::isfinite(p)) {
      v.note = "non-finite partial integral";
      return v;
    }
  }

  std::vector<double> inc(K);
  for (std::size_t k = 0; k < K; ++k) inc[k] = v.partials[k] - (k == 0 ? offset : v.partials[k - 1]);
  for (double d : inc) {
    if (d < 0.0) {
      v.note = "negative increment: integrand is not nonnegative";
      return v;
    }
  }

  const std::size_t tail = probe_tail_length(K);
  const std::size_t first = K - tail;  // ratios inc[k]/inc[k-1] for k in [first, K)

  bool all_zero = true;
  for (std::size_t k = first - 1; k < K; ++k) all_zero = all_zero && inc[k] == 0.0;
  if (all_zero) {
    v.verdict = Convergence::converges;
    v.limit = v.partials.back();
    v.note = "tail increments vanish";
    return v;
  }

  bool geometric = true;
  bool nondecreasing = true;
  double last_ratio = 0.0;
  for (std::size_t k = first; k < K; ++k) {
    if (inc[k - 1] > 0.0) {
      double q = inc[k] / inc[k - 1];
      geometric = geometric && q <= opt.rho_conv;
      last_ratio = q;
    } else if (inc[k] > 0.0) {
      geometric = false;
    }
    nondecreasing = nondecreasing && inc[k] >= inc[k - 1] * (1.0 - opt.flat_tol);
  }

  if (geometric) {
    v.verdict = Convergence::converges;
    v.limit = v.partials.back() + inc.back() * last_ratio / (1.0 - last_ratio);
    return v;
  }
  if (nondecreasing && inc.back() > 0.0) {
    v.verdict = Convergence::diverges;
    return v;
  }
  v.note = "tail increments neither geometric nor non-decreasing";
  return v;
}

/// Piecewise-uniform probe grid: `panels` cells on each dyadic segment
/// [r_start 2^{k-1}, r_start 2^k], k = 1..K, optionally preceded by `panels`
/// cells on [0, r_start].
struct ProbeGrid {
  std::vector<double> nodes;
  std::vector<std::size_t> marks;  // marks[k] = index of node r_start 2^k, k = 0..K

  static ProbeGrid make(const ProbeOptions& opt, bool from_origin) {
    if (opt.horizons < 4) throw std::invalid_argument("divergence probe needs K >= 4 horizons");
    if (opt.panels < 2 || opt.panels % 2 != 0) throw std::invalid_argument("probe panels must be even and >= 2");
    if (!(opt.r_start > 0.0)) throw std::invalid_argument("probe r_start must be > 0");
    ProbeGrid g;
    const auto P = static_cast<std::size_t>(opt.panels);
    if (from_origin) {
      for (std::size_t i = 0; i < P; ++i) g.nodes.push_back(opt.r_start * double(i) / double(P));
    }
    g.marks.push_back(g.nodes.size());
    g.nodes.push_back(opt.r_start);
    double lo = opt.r_start;
    for (int k = 1; k <= opt.horizons; ++k) {
      double hi = std::ldexp(opt.r_start, k);
      for (std::size_t i = 1; i < P; ++i) g.nodes.push_back(lo + (hi - lo) * double(i) / double(P));
      g.marks.push_back(g.nodes.size());
      g.nodes.push_back(hi);
      lo = hi;
    }
    return g;
  }

  std::vector<double> horizons() const {
    std::vector<double> h;
    for (std::size_t k = 1; k < marks.size(); ++k) h.push_back(nodes[marks[k]]);
    return h;
  }
};

/// Simpson integral of tabulated values between two marks of `grid`.
inline double simpson_segment(const ProbeGrid& grid, std::span<const double> y, std::size_t from, std::size_t to) {
  const double h = (grid.nodes[to] - grid.nodes[from]) / double(to - from);
  double s = y[from] + y[to];
  for (std::size_t i = from + 1; i < to; ++i) s += ((i - from) % 2 == 1 ? 4.0 : 2.0) * y[i];
  return s * h / 3.0;
}

/// Probe on values tabulated at every node of `grid`. `offset` is the
/// integral accumulated before r_start (e.g. over [0, r_start]).
inline DivergenceVerdict probe_tabulated(const ProbeGrid& grid, std::span<const double> values,
                                         const ProbeOptions& opt, double offset = 0.0) {
  if (values.size() != grid.nodes.size()) throw std::invalid_argument("probe_tabulated: size mismatch");
  std::vector<double> partials;
  double acc = offset;
  for (std::size_t k = 1; k < grid.marks.size(); ++k) {
    acc += simpson_segment(grid, values, grid.marks[k - 1], grid.marks[k]);
    partials.push_back(acc);
  }
  return verdict_from_partials(grid.horizons(), std::move(partials), opt, offset);
}

/// Decides whether the integral of a nonnegative `integrand` over
/// [r_start, infinity) diverges, from partial integrals over
/// [r_start, r_start 2^k], k = 1..K. Evaluation errors make the verdict
/// inconclusive with a note.
template <class F>
DivergenceVerdict probe_divergence(F&& integrand, const ProbeOptions& opt) {
  ProbeGrid grid = ProbeGrid::make(opt, false);
  std::vector<double> y(grid.nodes.size());
  try {
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = integrand(grid.nodes[i]);
      if (!std::isfinite(y[i])) throw DomainError("non-finite integrand value");
      if (y[i] < 0.0) throw DomainError("negative integrand value");
    }
  } catch (const Error& e) {
    DivergenceVerdict v;
    v.horizons = grid.horizons();
    v.note = std::string("integrand evaluation failed: ") + e.what();
    return v;
  }
  return probe_tabulated(grid, y, opt);
}

}  // namespace radsys
