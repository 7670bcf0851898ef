#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "radsys/quadrature.hpp"

using namespace radsys;

namespace {

GridFunction tabulate(const RadialGrid& g, double (*fn)(double)) {
  std::vector<double> v;
  for (double x : g.nodes()) v.push_back(fn(x));
  return GridFunction(g, v);
}

ProbeOptions probe_k(int K) {
  ProbeOptions o;
  o.horizons = K;
  return o;
}

}  // namespace

TEST(Grid, NodesAndValidation) {
  const RadialGrid g(2.0, 8);
  EXPECT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(8), 2.0);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.25);
  EXPECT_THROW(RadialGrid(2.0, 4), std::invalid_argument);
  EXPECT_THROW(RadialGrid(0.0, 100), std::invalid_argument);
  EXPECT_THROW(GridFunction(g, std::vector<double>(3)), std::invalid_argument);
  std::vector<double> bad(9, 0.0);
  bad[3] = NAN;
  EXPECT_THROW(GridFunction(g, bad), DomainError);
}

TEST(CumulativeIntegral, ZeroIntegrand) {
  const RadialGrid g(3.0, 50);
  const GridFunction I = cumulative_integral(GridFunction(g, std::vector<double>(g.size(), 0.0)));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(I[i], 0.0);
}

TEST(CumulativeIntegral, ConstantIntegrand) {
  for (std::size_t M : {8, 37, 1000}) {
    const RadialGrid g(2.0, M);
    const GridFunction I = cumulative_integral(GridFunction(g, std::vector<double>(g.size(), 1.0)));
    EXPECT_EQ(I[0], 0.0);
    EXPECT_NEAR(I.back(), 2.0, 1e-13);
  }
}

TEST(CumulativeIntegral, AffineIntegrandIsExact) {
  const RadialGrid g(1.0, 1000);
  const GridFunction I = cumulative_integral(tabulate(g, [](double x) { return x; }));
  EXPECT_NEAR(I.back(), 0.5, 1e-15);
}

TEST(CumulativeIntegral, MonotoneForNonnegativeIntegrand) {
  const RadialGrid g(4.0, 300);
  const GridFunction I = cumulative_integral(tabulate(g, [](double x) { return std::fabs(std::sin(3 * x)); }));
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GE(I[i], I[i - 1]);
}

TEST(CumulativeIntegral, SecondOrderOnCubic) {
  double prev = 0.0;
  for (std::size_t M : {100, 200, 400}) {
    const RadialGrid g(1.0, M);
    const double err = std::fabs(cumulative_integral(tabulate(g, [](double x) { return x * x * x; })).back() - 0.25);
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.05);
    prev = err;
  }
}

TEST(GaussLegendre, ExactForPolynomials) {
  for (std::size_t n = 1; n <= 8; ++n) {
    const GaussRule rule = gauss_legendre(n);
    for (std::size_t k = 0; k < 2 * n; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], double(k));
      const double exact = k % 2 ? 0.0 : 2.0 / double(k + 1);
      EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Probe, ConvergentQuadraticTail) {
  const auto v = probe_divergence([](double r) { return 1.0 / ((1 + r) * (1 + r)); }, probe_k(8));
  ASSERT_TRUE(v.converges()) << v.note;
  EXPECT_NEAR(*v.limit, 0.5, 0.025);
  EXPECT_GE(*v.limit, v.partials.back());
}

TEST(Probe, HarmonicTailDiverges) {
  EXPECT_TRUE(probe_divergence([](double r) { return 1.0 / (1 + r); }, probe_k(8)).diverges());
  EXPECT_TRUE(probe_divergence([](double) { return 1.0; }, probe_k(8)).diverges());
  EXPECT_TRUE(probe_divergence([](double r) { return 1.0 / r; }, probe_k(10)).diverges());
}

TEST(Probe, ZeroIntegrandConvergesToZero) {
  const auto v = probe_divergence([](double) { return 0.0; }, probe_k(8));
  ASSERT_TRUE(v.converges());
  EXPECT_EQ(*v.limit, 0.0);
}

TEST(Probe, EvaluationFailureIsInconclusive) {
  const auto v = probe_divergence([](double r) -> double {
    if (r > 10) throw DomainError("boom");
    return 1.0;
  }, probe_k(8));
  EXPECT_EQ(v.verdict, Convergence::inconclusive);
  EXPECT_FALSE(v.note.empty());
  EXPECT_EQ(probe_divergence([](double) { return -1.0; }, probe_k(8)).verdict, Convergence::inconclusive);
}

TEST(Probe, SlowDecayIsNotCalledConvergent) {
  // r^{-1.05}: convergent, but the dyadic ratios sit at 2^{-0.05} ~ 0.966
  const auto v = probe_divergence([](double r) { return std::pow(r, -1.05); }, probe_k(10));
  EXPECT_FALSE(v.converges());
}

TEST(Probe, ExponentialTailLimit) {
  const auto v = probe_divergence([](double r) { return std::exp(-r); }, probe_k(8));
  ASSERT_TRUE(v.converges());
  EXPECT_NEAR(*v.limit, std::exp(-1.0), 1e-6);
}

TEST(Probe, ScalingCoherence) {
  const auto base = [](double r) { return std::pow(1 + r, -3.0); };
  const auto v = probe_divergence(base, probe_k(10));
  for (double c : {1e-6, 0.3, 7.0, 1e5}) {
    const auto w = probe_divergence([&](double r) { return c * base(r); }, probe_k(10));
    EXPECT_EQ(w.verdict, v.verdict) << c;
    ASSERT_TRUE(w.converges());
    EXPECT_NEAR(*w.limit / c, *v.limit, 1e-9 * *v.limit);
  }
  const auto div = probe_divergence([](double r) { return 1 / (1 + r); }, probe_k(10));
  for (double c : {1e-6, 7.0, 1e5})
    EXPECT_EQ(probe_divergence([&](double r) { return c / (1 + r); }, probe_k(10)).verdict, div.verdict);
}

TEST(Probe, PartialsReportedAsEvidence) {
  const auto v = probe_divergence([](double r) { return 1.0 / (1 + r); }, probe_k(6));
  ASSERT_EQ(v.horizons.size(), 6u);
  ASSERT_EQ(v.partials.size(), 6u);
  EXPECT_DOUBLE_EQ(v.horizons.back(), 64.0);
  EXPECT_NEAR(v.partials.back(), std::log(65.0 / 2.0), 1e-8);
}

TEST(Probe, RequiresFourHorizons) {
  EXPECT_THROW(probe_divergence([](double) { return 1.0; }, probe_k(3)), std::invalid_argument);
}
