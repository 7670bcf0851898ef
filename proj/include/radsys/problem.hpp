#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "radsys/expr.hpp"

namespace radsys {

/// One instance of the radial system
///   Delta_{p_j} u_j + h_j(r) |grad u_j|^{p_j-1} = a_j(r) f_j(u_1, ..., u_d),  j = 1..d,
/// on R^N. Component indices are 0-based throughout the library.
struct ProblemSpec {
  int N = 3;
  std::vector<double> p;
  std::vector<Expr> h;
  std::vector<Expr> a;
  std::vector<Expr> f;
  double F_anchor = 1.0;  // lower limit a of the integral defining F

  std::size_t d() const noexcept { return p.size(); }

  double min_p() const { return *std::min_element(p.begin(), p.end()); }

  // Exponent 1/(1 - min p) of the F integrand (negative).
  double F_exponent() const { return 1.0 / (1.0 - min_p()); }

  void validate() const {
    if (N < 3) throw std::invalid_argument("space dimension N must be >= 3");
    if (p.empty()) throw std::invalid_argument("need at least one component");
    if (h.size() != d() || a.size() != d() || f.size() != d())
      throw std::invalid_argument("p, h, a and f must all have d entries");
    for (double pj : p)
      if (!(std::isfinite(pj) && pj > 1.0)) throw std::invalid_argument("every exponent p_j must be > 1");
    for (std::size_t j = 0; j < d(); ++j) {
      if (h[j].empty() || h[j].role() != Role::radial) throw std::invalid_argument("h_j must be a radial expression");
      if (a[j].empty() || a[j].role() != Role::radial) throw std::invalid_argument("a_j must be a radial expression");
      if (f[j].empty() || f[j].role() != Role::nonlinearity || f[j].variables() != d())
        throw std::invalid_argument("f_j must be a nonlinearity in u1..ud");
    }
    if (!(std::isfinite(F_anchor) && F_anchor > 0.0)) throw std::invalid_argument("F anchor a must be > 0");
  }

  static ProblemSpec from_text(int N, std::vector<double> p, const std::vector<std::string>& h,
                               const std::vector<std::string>& a, const std::vector<std::string>& f,
                               double anchor = 1.0) {
    ProblemSpec s;
    s.N = N;
    s.p = std::move(p);
    for (const auto& t : h) s.h.push_back(parse_radial(t));
    for (const auto& t : a) s.a.push_back(parse_radial(t));
    for (const auto& t : f) s.f.push_back(parse_nonlinearity(t, s.p.size()));
    s.F_anchor = anchor;
    s.validate();
    return s;
  }

  // f_j(s, ..., s)
  double f_diagonal(std::size_t j, double s) const { return f[j].diagonal(s); }

  // sum_j f_j(s, ..., s)
  double f_diagonal_sum(double s) const {
    std::vector<double> env(d(), s);
    double sum = 0.0;
    for (const auto& fj : f) sum += fj.eval(env);
    return sum;
  }
};

/// Central values u_j(0) = beta_j > 0.
class CentralValues {
 public:
  explicit CentralValues(std::vector<double> beta) : beta_(std::move(beta)) {
    if (beta_.empty()) throw std::invalid_argument("central values must not be empty");
    for (double b : beta_)
      if (!(std::isfinite(b) && b > 0.0)) throw std::invalid_argument("central values must be > 0");
  }

  static CentralValues equal(std::size_t d, double beta) { return CentralValues(std::vector<double>(d, beta)); }

  std::size_t size() const noexcept { return beta_.size(); }
  double operator[](std::size_t j) const { return beta_[j]; }
  const std::vector<double>& values() const noexcept { return beta_; }

  bool all_equal() const {
    return std::all_of(beta_.begin(), beta_.end(), [&](double b) { return b == beta_.front(); });
  }

  // Componentwise <=.
  bool dominated_by(const CentralValues& other) const {
    if (other.size() != size()) return false;
    for (std::size_t j = 0; j < size(); ++j)
      if (beta_[j] > other.beta_[j]) return false;
    return true;
  }

  friend bool operator==(const CentralValues&, const CentralValues&) = default;

 private:
  std::vector<double> beta_;
};

}  // namespace radsys
