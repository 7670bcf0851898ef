#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "radsys/solver.hpp"

using namespace radsys;

namespace {

ProblemSpec sinh_spec() { return ProblemSpec::from_text(3, {2}, {"0"}, {"1"}, {"u1"}); }

double sup_rel_error_to_sinh(const SolutionBundle& s) {
  double err = 0.0;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const double ref = oracle::sinh_over_r(s.grid.node(i));
    err = std::max(err, std::fabs(s.u[0][i] - ref) / ref);
  }
  return err;
}

}  // namespace

TEST(Iterate, ZeroNonlinearityConvergesImmediately) {
  const ProblemSpec s = ProblemSpec::from_text(4, {2, 3}, {"1", "0"}, {"1", "r"}, {"0", "0"});
  const RadialGrid g(5.0, 100);
  const SolutionBundle b = iterate(s, g, CentralValues({1.5, 0.25}));
  ASSERT_TRUE(b.converged());
  EXPECT_EQ(b.iterations, 1u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(b.u[0][i], 1.5);
    EXPECT_EQ(b.u[1][i], 0.25);
  }
}

TEST(Iterate, SinhOracle) {
  const RadialGrid g(5.0, 4000);
  const SolutionBundle b = iterate(sinh_spec(), g, CentralValues::equal(1, 1.0));
  ASSERT_TRUE(b.converged());
  EXPECT_LT(b.iterations, 200u);
  EXPECT_LT(sup_rel_error_to_sinh(b), 1e-5);
  EXPECT_TRUE(b.monotone);
  EXPECT_EQ(b.u[0][0], 1.0);
}

TEST(Iterate, SymmetricPairReducesToSinh) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2, 2}, {"0", "0"}, {"1", "1"}, {"u2", "u1"});
  const RadialGrid g(5.0, 4000);
  const SolutionBundle b = iterate(s, g, CentralValues({1.0, 1.0}));
  ASSERT_TRUE(b.converged());
  for (std::size_t i = 0; i < g.size(); i += 10) {
    const double ref = oracle::sinh_over_r(g.node(i));
    EXPECT_NEAR(b.u[0][i] / ref, 1.0, 1e-5);
    EXPECT_EQ(b.u[0][i], b.u[1][i]);
  }
}

TEST(Iterate, MatchesOdeOracleForGeneralData) {
  // p != 2, drift, non-constant weights, coupled sublinear f
  const ProblemSpec s =
      ProblemSpec::from_text(4, {3.0, 1.7}, {"1/(1+r)", "0.5"}, {"1 + r", "exp(-r)"}, {"sqrt(u2) + 1", "u1^0.8"});
  const double R = 2.0;
  const RadialGrid g(R, 4000);
  const CentralValues beta({0.7, 1.3});
  const SolutionBundle b = iterate(s, g, beta, {1e-12});
  ASSERT_TRUE(b.converged());

  oracle::RadialSystem sys;
  sys.N = 4;
  sys.p = {3.0, 1.7};
  sys.h = {[](double r) { return 1 / (1 + r); }, [](double) { return 0.5; }};
  sys.a = {[](double r) { return 1 + r; }, [](double r) { return std::exp(-r); }};
  sys.f = [](std::size_t j, const std::vector<double>& u) {
    return j == 0 ? std::sqrt(u[1]) + 1 : std::pow(u[0], 0.8);
  };
  const std::size_t samples = 20;
  const auto ref = oracle::rk4_solve(sys, beta.values(), R, samples, 2000);
  for (std::size_t k = 1; k <= samples; ++k) {
    const std::size_t i = k * 4000 / samples;
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(b.u[j][i] / ref[j][k], 1.0, 2e-4) << "j=" << j << " k=" << k;
  }
}

TEST(Iterate, IteratesAreNondecreasing) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2.5, 2}, {"0", "1"}, {"r^2", "1"}, {"u1*u2/(1+u1)", "u1^0.5"});
  const RadialGrid g(3.0, 400);
  Iterate prev;
  std::size_t violations = 0;
  const SolutionBundle b = iterate(s, g, CentralValues({1.0, 2.0}), {}, [&](std::size_t, const Iterate& u) {
    if (!prev.empty())
      for (std::size_t j = 0; j < u.size(); ++j)
        for (std::size_t i = 0; i < u[j].size(); ++i) violations += u[j][i] < prev[j][i];
    prev = u;
  });
  ASSERT_TRUE(b.converged());
  EXPECT_EQ(violations, 0u);
  EXPECT_TRUE(b.monotone);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GE(b.u[j][i], b.u[j][i - 1]);
}

TEST(Iterate, MaxIterIsReportedNotThrown) {
  const RadialGrid g(5.0, 400);
  SolverOptions opt;
  opt.max_iter = 3;
  const SolutionBundle b = iterate(sinh_spec(), g, CentralValues::equal(1, 1.0), opt);
  EXPECT_EQ(b.status, SolveStatus::max_iter_reached);
  EXPECT_FALSE(b.converged());
  EXPECT_GT(b.final_update, opt.tol);
  EXPECT_EQ(b.iterations, 3u);
}

TEST(Iterate, BlowUpIsDiverged) {
  // u'' + (2/r) u' = u^3 with large data blows up before r = 10
  const ProblemSpec s = ProblemSpec::from_text(3, {2}, {"0"}, {"1"}, {"u1^3"});
  const SolutionBundle b = iterate(s, RadialGrid(10.0, 400), CentralValues::equal(1, 5.0), {1e-10, 500});
  EXPECT_FALSE(b.converged());
}

TEST(Iterate, GridRefinementIsSecondOrder) {
  double prev = 0.0;
  for (std::size_t M : {500, 1000, 2000}) {
    const double e = sup_rel_error_to_sinh(iterate(sinh_spec(), RadialGrid(5.0, M), CentralValues::equal(1, 1.0)));
    if (prev > 0.0) EXPECT_GT(prev / e, 3.5);
    prev = e;
  }
}

TEST(Iterate, HorizonConsistency) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2.5}, {"0.3"}, {"1"}, {"u1^0.5"});
  SolverOptions opt;
  opt.tol = 1e-11;
  const SolutionBundle a = iterate(s, RadialGrid(2.0, 400), CentralValues::equal(1, 1.0), opt);
  const SolutionBundle b = iterate(s, RadialGrid(4.0, 800), CentralValues::equal(1, 1.0), opt);
  for (std::size_t i = 0; i <= 400; ++i) EXPECT_NEAR(a.u[0][i], b.u[0][i], 2 * opt.tol);
}

TEST(Verify, SinhLowerBoundAndResiduals) {
  const ProblemSpec s = sinh_spec();
  const RadialGrid g(5.0, 2000);
  const CentralValues beta = CentralValues::equal(1, 1.0);
  const SolutionBundle b = iterate(s, g, beta);
  const TransformTables t = build_tables(s, g, 1.0, 1.0);
  const VerificationReport v = verify(b, s, t);
  EXPECT_TRUE(v.pass());
  EXPECT_LE(v.bounds.lower_margin[0], 0.0);
  ASSERT_TRUE(v.bounds.sum_upper_margin.has_value());
  EXPECT_LE(*v.bounds.sum_upper_margin, 1e-6);
  EXPECT_LE(v.residual.integral[0], 10 * b.tol);
  EXPECT_LT(v.residual.ode_absolute[0], 1e-3);
}

TEST(Verify, OdeResidualShrinksWithGrid) {
  const ProblemSpec s = sinh_spec();
  double prev = 0.0;
  for (std::size_t M : {1000, 2000, 4000}) {
    const SolutionBundle b = iterate(s, RadialGrid(5.0, M), CentralValues::equal(1, 1.0));
    const double r = residual(b, s).ode_absolute[0];
    if (prev > 0.0) EXPECT_GT(prev / r, 1.8);
    prev = r;
  }
}

TEST(Verify, ZeroSourceMarginsExactlyZero) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2}, {"0"}, {"0"}, {"u1^2"});
  const RadialGrid g(3.0, 200);
  const SolutionBundle b = iterate(s, g, CentralValues::equal(1, 2.0));
  const TransformTables t = build_tables(s, g, 2.0, 2.0);
  const VerificationReport v = verify(b, s, t);
  EXPECT_EQ(v.bounds.lower_margin[0], 0.0);
  ASSERT_TRUE(v.bounds.sum_upper_margin);
  EXPECT_NEAR(*v.bounds.sum_upper_margin, 0.0, 1e-12);
  EXPECT_EQ(v.residual.integral[0], 0.0);
  EXPECT_EQ(v.residual.ode_absolute[0], 0.0);
}

TEST(Verify, ZeroNonlinearityDegenerateSandwich) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2}, {"0"}, {"1"}, {"0"});
  const RadialGrid g(3.0, 200);
  const SolutionBundle b = iterate(s, g, CentralValues::equal(1, 1.5));
  const TransformTables t = build_tables(s, g, 1.5, 1.5);
  const BoundCurves c = bound_curves(s, t, b.beta);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(c.lower[0][i], 1.5);
  const BoundsReport r = verify_bounds(b, s, t);
  EXPECT_EQ(r.lower_margin[0], 0.0);
  EXPECT_TRUE(r.pass());
}

TEST(Verify, UnequalBetaSkipsUpperBound) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2, 2}, {"0", "0"}, {"1", "1"}, {"u2^0.5", "u1^0.5"});
  const RadialGrid g(3.0, 400);
  const CentralValues beta({1.0, 3.0});
  const SolutionBundle b = iterate(s, g, beta);
  const TransformTables t = build_tables(s, g, 1.0, 3.0);
  const BoundsReport r = verify_bounds(b, s, t);
  EXPECT_FALSE(r.sum_upper_margin.has_value());
  EXPECT_FALSE(r.upper_note.empty());
  EXPECT_TRUE(r.pass());
  // lower bound uses f_j(beta_1, beta_2)
  const BoundCurves c = bound_curves(s, t, beta);
  EXPECT_NEAR(c.lower[0][g.intervals()], 1.0 + std::sqrt(3.0) * t.A[0].back(), 1e-12);
}

TEST(Verify, UpperBoundChainHoldsForIterates) {
  const ProblemSpec s = ProblemSpec::from_text(3, {2, 2.5}, {"0", "0"}, {"0.1*(1+r)^(-4)", "0.1*(1+r)^(-5)"},
                                               {"u1*u2", "u1^2"});
  const RadialGrid g(8.0, 800);
  const CentralValues beta = CentralValues::equal(2, 0.6);
  const TransformTables t = build_tables(s, g, 0.6, 0.6);
  const BoundCurves c = bound_curves(s, t, beta);
  ASSERT_TRUE(c.upper) << c.upper_note;
  std::size_t bad = 0;
  const SolutionBundle b = iterate(s, g, beta, {}, [&](std::size_t, const Iterate& u) {
    for (std::size_t i = 0; i < g.size(); ++i) bad += u[0][i] + u[1][i] > (*c.upper)[i] + 1e-6;
  });
  ASSERT_TRUE(b.converged());
  EXPECT_EQ(bad, 0u);
}

TEST(Verify, NonConvergedBundleCarriesGap) {
  const ProblemSpec s = sinh_spec();
  const RadialGrid g(5.0, 400);
  SolverOptions opt;
  opt.max_iter = 2;
  const SolutionBundle b = iterate(s, g, CentralValues::equal(1, 1.0), opt);
  const ResidualReport r = residual(b, s);
  EXPECT_FALSE(r.solution_converged);
  EXPECT_GT(r.integral[0], opt.tol);
  const VerificationReport v = verify(b, s, build_tables(s, g, 1, 1));
  EXPECT_FALSE(v.pass());
}

TEST(Verify, PerturbationRaisesIntegralResidual) {
  const ProblemSpec s = sinh_spec();
  const RadialGrid g(5.0, 1000);
  const SolutionBundle b = iterate(s, g, CentralValues::equal(1, 1.0));
  Iterate u{std::vector<double>(b.u[0].values().begin(), b.u[0].values().end())};
  u[0][500] += 0.1;
  const ResidualReport r = residual(SolutionBundle::from_values(g, b.beta, u), s);
  EXPECT_GE(r.integral[0], 0.05);
  EXPECT_FALSE(r.pass());
}

TEST(Growth, LargeSolutionGrowsAtLeastLikeLowerBound) {
  const GrowthWitness w = horizon_growth(sinh_spec(), CentralValues::equal(1, 1.0), 3.0, 600);
  ASSERT_TRUE(w.converged);
  EXPECT_TRUE(w.holds());
  EXPECT_LT(w.agreement[0], 2 * 1e-10);
  EXPECT_GT(w.growth[0], w.required[0]);
}
