#pragma once

// Reference values computed without the library's quadrature or iteration.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

// sinh(r)/r by its Taylor series near 0.
inline double sinh_over_r(double r) {
  if (std::fabs(r) > 0.5) return std::sinh(r) / r;
  double term = 1.0, sum = 1.0;
  const double r2 = r * r;
  for (int k = 1; k < 30; ++k) {
    term *= r2 / double((2 * k) * (2 * k + 1));
    sum += term;
  }
  return sum;
}

// Radial system (H_j |u_j'|^{p_j-2} u_j')' = H_j a_j f_j(u), H_j = r^{N-1} e^{E_j},
// E_j' = h_j, integrated by classical RK4 from a series start at r0.
struct RadialSystem {
  int N = 3;
  std::vector<double> p;
  std::vector<std::function<double(double)>> h, a;
  std::function<double(std::size_t, const std::vector<double>&)> f;
};

// Returns u_j sampled at r = R * i / samples, i = 0..samples.
inline std::vector<std::vector<double>> rk4_solve(const RadialSystem& sys, const std::vector<double>& beta, double R,
                                                  std::size_t samples, std::size_t steps_per_sample = 200) {
  const std::size_t d = beta.size();
  // state: u (d), v = H |u'|^{p-2} u' (d), E (d)
  auto rhs = [&](double r, const std::vector<double>& y) {
    std::vector<double> dy(3 * d);
    std::vector<double> u(y.begin(), y.begin() + long(d));
    for (std::size_t j = 0; j < d; ++j) {
      const double H = std::pow(r, sys.N - 1) * std::exp(y[2 * d + j]);
      const double v = y[d + j];
      dy[j] = std::copysign(std::pow(std::fabs(v) / H, 1.0 / (sys.p[j] - 1.0)), v);
      dy[d + j] = H * sys.a[j](r) * sys.f(j, u);
      dy[2 * d + j] = sys.h[j](r);
    }
    return dy;
  };

  const double r0 = 1e-6;
  std::vector<double> y(3 * d);
  for (std::size_t j = 0; j < d; ++j) {
    const double src = sys.a[j](0.0) * sys.f(j, beta);
    const double e = 1.0 / (sys.p[j] - 1.0);
    y[j] = beta[j] + std::pow(src / sys.N, e) * (sys.p[j] - 1.0) / sys.p[j] * std::pow(r0, sys.p[j] * e);
    y[d + j] = src * std::pow(r0, sys.N) / sys.N;
    y[2 * d + j] = sys.h[j](0.0) * r0;
  }

  std::vector<std::vector<double>> out(d, std::vector<double>(samples + 1));
  for (std::size_t j = 0; j < d; ++j) out[j][0] = beta[j];
  double r = r0;
  for (std::size_t s = 1; s <= samples; ++s) {
    const double target = R * double(s) / double(samples);
    const double hstep = (target - r) / double(steps_per_sample);
    for (std::size_t k = 0; k < steps_per_sample; ++k) {
      auto k1 = rhs(r, y);
      std::vector<double> t(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] + 0.5 * hstep * k1[i];
      auto k2 = rhs(r + 0.5 * hstep, t);
      for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] + 0.5 * hstep * k2[i];
      auto k3 = rhs(r + 0.5 * hstep, t);
      for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] + hstep * k3[i];
      auto k4 = rhs(r + hstep, t);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += hstep / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      r += hstep;
    }
    for (std::size_t j = 0; j < d; ++j) out[j][s] = y[j];
  }
  return out;
}

// Adaptive Simpson on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol = 1e-12,
                               int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int level) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = g(lm), frm = g(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi);
        if (level <= 0 || std::fabs(left + right - whole) <= 15 * eps)
          return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, eps / 2, level - 1) +
               rec(mid, hi, fmid, frm, fhi, right, eps / 2, level - 1);
      };
  const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4 * fm + fb), tol, depth);
}

// Antiderivative of 1/(1+s^3) and its limit at infinity.
inline double inv_one_plus_cube_primitive(double s) {
  return std::log1p(s) / 3.0 - std::log(s * s - s + 1.0) / 6.0 + std::atan((2.0 * s - 1.0) / std::sqrt(3.0)) / std::sqrt(3.0);
}
inline double inv_one_plus_cube_tail(double s) {
  return std::numbers::pi / (2.0 * std::sqrt(3.0)) - inv_one_plus_cube_primitive(s);
}

// Largest beta with int_beta^inf ds/(1+s^3) >= A, by bisection on the closed form.
inline double cube_window_end(double A) {
  double lo = 1e-9, hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (inv_one_plus_cube_tail(mid) > A ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace oracle
