#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "proxista/analysis.hpp"
#include "proxista/solver.hpp"

using namespace proxista;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

LinearMap random_map(Index rows, Index cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix a(rows, cols);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return make_dense(a);
}

StopCriteria tight(int iters = 10000, double fp = 1e-12) {
  StopCriteria s;
  s.max_iters = iters;
  s.fp_tol = fp;
  s.stall_window = 0;
  return s;
}

} // namespace

TEST(IstaStep, ZeroPenaltyIsGradientStep) {
  const auto op = make_diagonal(vec({1, 2}));
  const auto f = make_quadratic(op, vec({1, 1}));
  const auto p = separable_lift(make_zero(), 2);
  const Vector x = ista_step(f, p, vec({0, 0}), 0.1);
  EXPECT_NEAR(x[0], 0.1, 1e-15);
  EXPECT_NEAR(x[1], 0.2, 1e-15);
  const Vector z = vec({0.3, -0.4});
  EXPECT_LT((ista_step(f, p, z, 0.2) - (z - 0.2 * f.grad(z))).norm(), 1e-15);
}

TEST(IstaStep, IdentityOperatorWithL1GivesSoftThreshold) {
  const Vector y = vec({2.0, -0.3, 0.9, -1.7});
  const auto f = make_quadratic(make_identity(4), y);
  const auto p = separable_lift(make_l1(0.5), 4);
  const Vector x = ista_step(f, p, Vector::Zero(4), 1.0);
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(x[i], oracle::soft(y[i], 0.5));
  EXPECT_LT(fixed_point_residual(f, p, 1.0, x), 1e-15);
}

TEST(IstaStep, StepTooLargeRejected) {
  const auto f = make_quadratic(make_identity(2), vec({1, 1}));
  EXPECT_THROW(ista_step(f, separable_lift(make_firm(1, 0.5), 2), vec({0, 0}), 2.0), StepTooLarge);
  EXPECT_THROW(fixed_point_residual(f, separable_lift(make_integer_lattice(4), 2), 0.5, vec({0, 0})),
               StepTooLarge);
}

TEST(SmoothTerm, QuadraticPayloadAndGradient) {
  const auto op = random_map(6, 4, 3);
  SplitMix64 rng(5);
  const Vector y = rng.normal_vector(6);
  const auto f = make_quadratic(op, y);
  ASSERT_TRUE(f.quadratic().has_value());
  const Matrix h = op.to_dense();
  const auto ev = oracle::jacobi_eigenvalues(h.transpose() * h);
  EXPECT_NEAR(f.lipschitz(), ev.back(), 1e-10);
  EXPECT_NEAR(f.strong_convexity(), ev.front(), 1e-10);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.normal_vector(4);
    EXPECT_LT((f.grad(x) - h.transpose() * (h * x - y)).norm(), 1e-12);
    EXPECT_NEAR(f.eval(x), 0.5 * (y - h * x).squaredNorm(), 1e-12);
  }
  EXPECT_THROW(make_quadratic(op, rng.normal_vector(5)), ShapeError);
}

TEST(SmoothTerm, StrongConvexityOnSampledTriples) {
  const auto op = random_map(8, 5, 6);
  SplitMix64 rng(7);
  const auto f = make_quadratic(op, rng.normal_vector(8));
  const double mu = f.strong_convexity();
  auto g = [&](const Vector& x) { return f.eval(x) - 0.5 * mu * x.squaredNorm(); };
  for (int t = 0; t < 1000; ++t) {
    const Vector a = rng.uniform_vector(5, -3, 3), b = rng.uniform_vector(5, -3, 3);
    const double th = rng.uniform();
    EXPECT_LE(g(th * a + (1 - th) * b), th * g(a) + (1 - th) * g(b) + 1e-9);
  }
}

TEST(StepSizes, Arithmetic) {
  SpectralBounds b{1.0, 9.0};
  EXPECT_DOUBLE_EQ(max_step_mm(b), 1.0 / 9.0);
  EXPECT_EQ(max_step_mm(SpectralBounds{1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(max_step_fb(9.0, 1.0), 0.2);
  EXPECT_DOUBLE_EQ(max_step_fb(9.0, 1.0) / max_step_mm(b), 1.8);
  EXPECT_DOUBLE_EQ(max_step_fb(4.0, 0.0), 0.5);
  EXPECT_THROW(max_step_mm(SpectralBounds{0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(max_step_fb(0.0, 0.0), InvalidArgument);
}

TEST(ContractionRate, Examples) {
  EXPECT_NEAR(contraction_rate(SpectralBounds{1.0, 9.0}, 0.5, 0.2), 0.8 / 0.9, 1e-15);
  EXPECT_EQ(contraction_rate(SpectralBounds{4.0, 4.0}, 0.0, 0.25), 0.0);
  EXPECT_GE(contraction_rate(SpectralBounds{1.0, 9.0}, 1.0, 0.2), 1.0);
  EXPECT_THROW(contraction_rate(SpectralBounds{1.0, 9.0}, 1.0, 1.0), StepTooLarge);
}

TEST(ResolveStep, Policies) {
  const auto f = make_quadratic(make_diagonal(vec({1, 3})), vec({1, 1}));
  EXPECT_DOUBLE_EQ(resolve_step(StepKind::mm, f, 0.5).alpha, 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(resolve_step(StepKind::fb, f, 0.5).alpha, 2.0 / 9.5);
  EXPECT_DOUBLE_EQ(resolve_step(StepKind::fb, f, 0.5, 0.999).alpha, 0.999 * 2.0 / 9.5);
  EXPECT_DOUBLE_EQ(resolve_step(StepKind::contraction, f, 0.5).alpha, 0.2);
  EXPECT_THROW(resolve_step(StepKind::contraction, f, 1.0), InvalidArgument);
  EXPECT_DOUBLE_EQ(resolve_step(StepKind::explicit_step, f, 0.5, 1.0, 0.3).alpha, 0.3);
  EXPECT_THROW(resolve_step(StepKind::explicit_step, f, 0.5, 1.0, 2.5), StepTooLarge);
  EXPECT_THROW(resolve_step(StepKind::mm, f, 0.5, 1.5), InvalidArgument);
}

TEST(Cost, Examples) {
  const auto f = make_quadratic(make_identity(2), vec({1, 2}));
  EXPECT_DOUBLE_EQ(cost(f, separable_lift(make_zero(), 2), vec({0, 0})), 2.5);
  EXPECT_TRUE(std::isinf(cost(f, separable_lift(make_integer_lattice(4), 2), vec({5, 1}))));
  EXPECT_DOUBLE_EQ(cost(f, separable_lift(make_l1(1.0), 2), vec({1, 1})), 0.5 + 2.0);
}

TEST(MmSurrogate, Examples) {
  const auto op = make_diagonal(vec({1, 3}));
  const auto f = make_quadratic(op, vec({1, -1}));
  const auto p = separable_lift(make_firm(1, 0.5), 2);
  const Vector xk = vec({0.4, -0.2});
  const auto at = mm_surrogate(f, p, 0.1, xk, xk);
  EXPECT_EQ(at.gap, 0.0);
  EXPECT_EQ(at.majorizer, cost(f, p, xk));
  SplitMix64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const Vector x = rng.uniform_vector(2, -5, 5);
    EXPECT_GE(mm_surrogate(f, p, 0.999 / 9.0, x, xk).majorizer - cost(f, p, x), -1e-12);
  }
  // Along the top eigenvector the surrogate curvature goes negative past 1/sigma_M.
  const auto over = mm_surrogate(f, p, 0.2, xk + vec({0, 1}), xk);
  EXPECT_LT(over.gap, 0.0);
  EXPECT_THROW(mm_surrogate(SmoothTerm(1, [](const Vector&) { return 0.0; },
                                       [](const Vector& x) { return x; }, 1.0, 0.0),
                            separable_lift(make_zero(), 1), 0.5, vec({1}), vec({0})),
               InvalidArgument);
}

TEST(FixedPointResidual, Examples) {
  const Vector y = vec({2.0, -0.3, 0.9});
  const auto f = make_quadratic(make_identity(3), y);
  const auto p = separable_lift(make_l1(0.5), 3);
  const Vector xs = vec({1.5, 0.0, 0.4});
  EXPECT_LE(fixed_point_residual(f, p, 0.7, xs), 1e-12);
  EXPECT_GT(fixed_point_residual(f, p, 0.7, xs + vec({0.01, 0.0, 0.0})), 0.0);

  const auto op = random_map(7, 4, 10);
  SplitMix64 rng(3);
  const Vector d = rng.normal_vector(7);
  const Matrix h = op.to_dense();
  const Vector ls = (h.transpose() * h).ldlt().solve(h.transpose() * d);
  EXPECT_LE(fixed_point_residual(make_quadratic(op, d), separable_lift(make_zero(), 4), 0.01, ls), 1e-12);
}

TEST(SolveIsta, GradientDescentReachesLeastSquares) {
  const auto op = random_map(10, 5, 21);
  SplitMix64 rng(22);
  const Vector d = rng.normal_vector(10);
  const auto f = make_quadratic(op, d);
  const auto p = separable_lift(make_zero(), 5);
  const auto tr = solve_ista(f, p, Vector::Zero(5), resolve_step(StepKind::fb, f, 0.0, 0.99), tight(100000, 1e-10));
  EXPECT_EQ(tr.stop, StopReason::fp_residual);
  const Matrix h = op.to_dense();
  const Vector ls = (h.transpose() * h).ldlt().solve(h.transpose() * d);
  EXPECT_LT((tr.final_iterate - ls).norm(), 1e-8);
}

TEST(SolveIsta, TraceShapeAndReference) {
  const auto op = random_map(9, 6, 30);
  SplitMix64 rng(31);
  const auto f = make_quadratic(op, rng.normal_vector(9));
  const auto p = separable_lift(make_firm(0.3, f.strong_convexity()), 6);
  StopCriteria st = tight(40, 0.0);
  st.reference = Vector::Zero(6);
  st.record_iterates = true;
  const auto tr = solve_ista(f, p, Vector::Zero(6), resolve_step(StepKind::mm, f, p.rho()), st);
  EXPECT_EQ(tr.iterations(), 40);
  EXPECT_EQ(tr.size(), 41u);
  EXPECT_EQ(tr.fp_residual.size(), 41u);
  EXPECT_EQ(tr.dist_to_ref.size(), 41u);
  EXPECT_EQ(tr.elapsed_s.size(), 41u);
  EXPECT_EQ(tr.iterates.size(), 41u);
  EXPECT_TRUE(tr.has_reference);
  EXPECT_EQ(tr.dist_to_ref[0], 0.0);
  EXPECT_EQ(tr.stop, StopReason::max_iters);
  for (double c : tr.cost) EXPECT_TRUE(std::isfinite(c));
  EXPECT_EQ(tr.final_iterate, tr.iterates.back());
}

TEST(SolveIsta, CostStallStops) {
  // Error halves each step; the cost settles quadratically long before the residual reaches 0.
  const auto f = make_quadratic(make_identity(2), vec({1, 1}));
  const auto p = separable_lift(make_l1(0.5), 2);
  StopCriteria st;
  st.fp_tol = 0.0;
  st.stall_window = 3;
  st.stall_rel_tol = 1e-14;
  const auto tr = solve_ista(f, p, vec({0, 0}), {StepKind::explicit_step, 0.5, 1.0}, st);
  EXPECT_EQ(tr.stop, StopReason::cost_stall);
  EXPECT_GT(tr.fp_residual.back(), 0.0);
  EXPECT_LE(tr.iterations(), 40);
}

TEST(SolveIsta, RejectsBadStart) {
  const auto f = make_quadratic(make_identity(2), vec({1, 1}));
  EXPECT_THROW(solve_ista(f, separable_lift(make_zero(), 3), vec({0, 0}), {StepKind::mm, 1.0, 1.0}),
               ShapeError);
  EXPECT_THROW(solve_ista(f, separable_lift(make_integer_lattice(4), 2), vec({-1, 0}),
                          {StepKind::mm, 0.4, 1.0}),
               InvalidArgument);
}

TEST(SolveIsta, OverstepRecordsCostIncrease) {
  const auto f = make_quadratic(make_diagonal(vec({1.0, 3.0})), vec({1.0, 1.0}));
  const auto p = separable_lift(make_firm(0.2, 0.5), 2);
  const double alpha = 1.3 * max_step_fb(f.lipschitz(), 0.5);
  ASSERT_LT(alpha * 0.5, 1.0);
  StopCriteria st = tight(30, 0.0);
  SolveTrace tr;
  try {
    tr = solve_ista(f, p, vec({0.0, 0.0}), {StepKind::explicit_step, alpha, 1.0}, st);
  } catch (const DivergenceError& e) {
    tr = e.trace();
  }
  EXPECT_FALSE(descent_check(tr).pass);
}

TEST(SolveIsta, DivergenceKeepsTracePrefix) {
  const auto f = make_quadratic(make_identity(1), vec({1.0}));
  const auto p = separable_lift(make_zero(), 1);
  try {
    solve_ista(f, p, vec({0.0}), {StepKind::explicit_step, 1000.0, 1.0}, tight(100000, 0.0));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.trace().size(), 10u);
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
    EXPECT_EQ(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(SolveFista, MomentumSequence) {
  EXPECT_EQ(fista_next_t(1.0), 0.5 * (1.0 + std::sqrt(5.0)));
  double t = 1.0;
  for (int k = 0; k < 50; ++k) {
    const double n = fista_next_t(t);
    EXPECT_NEAR(n * n - n, t * t, 1e-9 * t * t);
    t = n;
  }
}

TEST(SolveFista, FasterThanIstaOnSmoothQuadratic) {
  const auto op = random_map(30, 20, 50);
  SplitMix64 rng(51);
  const auto f = make_quadratic(op, rng.normal_vector(30));
  const auto p = separable_lift(make_zero(), 20);
  const double alpha = max_step_mm(f.quadratic()->bounds);
  const auto ista = solve_ista(f, p, Vector::Zero(20), {StepKind::mm, alpha, 1.0}, tight(200000, 1e-8));
  const auto fista = solve_fista(f, p, Vector::Zero(20), alpha, tight(200000, 1e-8));
  EXPECT_EQ(fista.stop, StopReason::fp_residual);
  EXPECT_LT(fista.iterations(), ista.iterations());
}

TEST(SolveFista, ZeroStartCostUsesAbsoluteThreshold) {
  // Zero data and zero start: the cost stays at 0 and nothing diverges.
  const auto f = make_quadratic(make_identity(3), Vector::Zero(3));
  const auto tr = solve_fista(f, separable_lift(make_firm(1, 0.5), 3), Vector::Zero(3), 1.0, tight(20, 0.0));
  for (double c : tr.cost) EXPECT_EQ(c, 0.0);
}

TEST(SolveFista, DivergenceError) {
  const auto f = make_quadratic(make_identity(2), vec({1.0, -1.0}));
  const auto p = separable_lift(make_zero(), 2);
  EXPECT_THROW(solve_fista(f, p, vec({0.0, 0.0}), 3.0, tight(10000, 0.0)), DivergenceError);
}

TEST(SolveTwist, Parameters) {
  const auto tp = TwistParams::from_bounds(SpectralBounds{1.0, 4.0});
  EXPECT_DOUBLE_EQ(tp.kappa, 0.25);
  const double rh = (1 - 0.5) / (1 + 0.5);
  EXPECT_DOUBLE_EQ(tp.alpha, rh * rh + 1);
  EXPECT_DOUBLE_EQ(tp.beta, 2 * tp.alpha / 1.25);
  EXPECT_DOUBLE_EQ(tp.step, 0.25);
  EXPECT_EQ(TwistParams::from_bounds(SpectralBounds{0.0, 4.0}).kappa, TwistParams::kappa_floor);
}

TEST(SolveTwist, FirstIterationIsIstaStep) {
  const auto op = random_map(8, 5, 60);
  SplitMix64 rng(61);
  const auto f = make_quadratic(op, rng.normal_vector(8));
  const auto p = separable_lift(make_l1(0.2), 5);
  const auto tp = TwistParams::from_bounds(f.quadratic()->bounds);
  StopCriteria st = tight(1, 0.0);
  st.record_iterates = true;
  const auto tr = solve_twist(f, p, Vector::Zero(5), tp, st);
  ASSERT_EQ(tr.iterates.size(), 2u);
  EXPECT_LT((tr.iterates[1] - ista_step(f, p, Vector::Zero(5), tp.step)).norm(), 1e-15);
}

TEST(SolveTwist, SmoothCaseReachesLeastSquares) {
  const auto op = random_map(12, 6, 70);
  SplitMix64 rng(71);
  const Vector d = rng.normal_vector(12);
  const auto f = make_quadratic(op, d);
  const auto p = separable_lift(make_zero(), 6);
  const auto tr = solve_twist(f, p, Vector::Zero(6), TwistParams::from_bounds(f.quadratic()->bounds),
                              tight(100000, 1e-10));
  const Matrix h = op.to_dense();
  const Vector ls = (h.transpose() * h).ldlt().solve(h.transpose() * d);
  EXPECT_EQ(tr.stop, StopReason::fp_residual);
  EXPECT_LT((tr.final_iterate - ls).norm(), 1e-7);
}

TEST(SolveTwist, NeedsQuadraticPayload) {
  SmoothTerm f(1, [](const Vector& x) { return 0.5 * x.squaredNorm(); },
               [](const Vector& x) { return x; }, 1.0, 1.0);
  EXPECT_THROW(solve_twist(f, separable_lift(make_zero(), 1), vec({1.0}),
                           TwistParams::from_bounds(SpectralBounds{1, 1})),
               InvalidArgument);
}
