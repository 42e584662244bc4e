#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "proxista/analysis.hpp"

using namespace proxista;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

OperatorProbe linear_probe(const Matrix& m, double radius = 10.0) {
  return {m.cols(), [m](const Vector& x) -> Vector { return m * x; }, radius};
}

OperatorProbe identity_probe(Index n) {
  return {n, [](const Vector& x) { return x; }};
}

struct Instance {
  LinearMap op;
  SmoothTerm f;
};

Instance convolution_instance(Index n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto op = make_convolution({1.0, 0.6, 0.36, 0.216, 0.1296}, n);
  auto f = make_quadratic(op, rng.normal_vector(op.out_dim()));
  return {op, f};
}

void expect_witness_reproduces(const OperatorProbe& probe, const PropertyReport& r) {
  ASSERT_GT(r.witness_a.size(), 0);
  EXPECT_NEAR(lipschitz_ratio(probe, r.witness_a, r.witness_b), r.worst, 1e-12);
}

} // namespace

TEST(EmpiricalLipschitz, Examples) {
  const auto id = empirical_lipschitz(identity_probe(3), 500, 1);
  EXPECT_NEAR(id.worst, 1.0, 1e-12);
  EXPECT_TRUE(id.pass);
  const auto twice = empirical_lipschitz(linear_probe(Matrix::Identity(1, 1) * 2.0), 500, 2);
  EXPECT_NEAR(twice.worst, 2.0, 1e-12);
  EXPECT_FALSE(twice.pass);
  const auto firm = separable_lift(make_firm(1.0, 0.5), 1);
  const auto ramp = empirical_lipschitz(threshold_probe(firm, 1.0), 10000, 3, 2.0);
  EXPECT_TRUE(ramp.pass);
  EXPECT_GT(ramp.worst, 1.9);
  EXPECT_THROW(empirical_lipschitz(identity_probe(1), 0, 1), InvalidArgument);
}

TEST(EmpiricalLipschitz, RecordsTrialsSeedAndTolerance) {
  const auto r = empirical_lipschitz(identity_probe(2), 77, 1234, 1.0, 1e-7);
  EXPECT_EQ(r.trials, 77);
  EXPECT_EQ(r.seed, 1234u);
  EXPECT_EQ(r.tolerance, 1e-7);
}

TEST(CheckAveraged, Examples) {
  EXPECT_TRUE(check_averaged(identity_probe(2), 0.3, 500, 1).pass);
  EXPECT_TRUE(check_averaged(identity_probe(2), 0.9, 500, 1).pass);
  const auto s = separable_lift(make_firm(1.0, 0.5), 1);
  EXPECT_TRUE(check_averaged(scaled_threshold_probe(s, 1.0), 0.5, 10000, 2).pass);
  EXPECT_THROW(check_averaged(identity_probe(1), 1.0, 10, 1), InvalidArgument);
  EXPECT_THROW(check_averaged(identity_probe(1), 0.0, 10, 1), InvalidArgument);
}

TEST(CheckAveraged, ZeroMapAndReflection) {
  // x -> 0 is exactly 1/2-averaged (its residual map is -I); 1/4 is too small.
  const Matrix zero = Matrix::Zero(2, 2);
  const auto half = check_averaged(linear_probe(zero), 0.5, 500, 3);
  EXPECT_TRUE(half.pass);
  EXPECT_NEAR(half.worst, 1.0, 1e-12);
  EXPECT_FALSE(check_averaged(linear_probe(zero), 0.25, 500, 3).pass);
  // x -> -x is non-expansive but averaged for no beta < 1.
  const Matrix neg = -Matrix::Identity(2, 2);
  EXPECT_TRUE(empirical_lipschitz(linear_probe(neg), 500, 4).pass);
  const auto reflect = check_averaged(linear_probe(neg), 0.5, 500, 4);
  EXPECT_FALSE(reflect.pass);
  EXPECT_NEAR(reflect.worst, 3.0, 1e-12);
}

TEST(CheckAveraged, AveragedImpliesNonExpansive) {
  SplitMix64 rng(5);
  for (int t = 0; t < 20; ++t) {
    Matrix a(3, 3);
    for (Index i = 0; i < 9; ++i) a.data()[i] = rng.uniform(-1, 1);
    const Matrix m = 0.5 * (a + a.transpose());
    const auto probe = linear_probe(m);
    for (double beta : {0.3, 0.5, 0.8}) {
      if (check_averaged(probe, beta, 300, 6).pass)
        EXPECT_LE(empirical_lipschitz(probe, 300, 6).worst, 1.0 + 1e-9);
    }
  }
}

TEST(AffineAveragedInterval, Examples) {
  const auto id = affine_averaged_interval(Matrix::Identity(3, 3));
  EXPECT_EQ(id.eig_min, 1.0);
  EXPECT_EQ(id.eig_max, 1.0);
  EXPECT_TRUE(id.averaged);
  const auto neg = affine_averaged_interval(-Matrix::Identity(3, 3));
  EXPECT_EQ(neg.eig_min, -1.0);
  EXPECT_FALSE(neg.averaged);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(affine_averaged_interval(asym), InvalidArgument);
  EXPECT_THROW(affine_averaged_interval(Matrix::Zero(2, 3)), ShapeError);
}

TEST(AffineAveragedInterval, MatchesJacobiOracle) {
  const auto inst = convolution_instance(12, 9);
  const double rho = inst.f.strong_convexity() * 0.5;
  const double alpha = 0.9 * max_step_fb(inst.f.lipschitz(), rho);
  const Matrix m = scaled_forward_matrix(inst.op, alpha, rho);
  const auto ev = oracle::jacobi_eigenvalues(m);
  const auto r = affine_averaged_interval(m);
  EXPECT_NEAR(r.eig_min, ev.front(), 1e-10);
  EXPECT_NEAR(r.eig_max, ev.back(), 1e-10);
  EXPECT_TRUE(r.averaged);
}

TEST(AffineAveragedInterval, AgreesWithSampledCheck) {
  // Symmetric M with spectrum in (-1, 1] is beta-averaged for beta = (1 - eig_min) / 2.
  SplitMix64 rng(10);
  for (int t = 0; t < 30; ++t) {
    Matrix a(4, 4);
    for (Index i = 0; i < 16; ++i) a.data()[i] = rng.uniform(-1, 1);
    Matrix m = 0.5 * (a + a.transpose());
    const auto r = affine_averaged_interval(m);
    const auto probe = linear_probe(m, 1.0);
    if (r.averaged) {
      const double beta = std::clamp((1.0 - r.eig_min) / 2.0, 0.01, 0.99);
      EXPECT_TRUE(check_averaged(probe, beta, 2000, 11).pass) << "eig " << r.eig_min << " " << r.eig_max;
    } else {
      bool any = false;
      for (int k = 1; k <= 19; ++k) any = any || check_averaged(probe, 0.05 * k, 2000, 11).pass;
      EXPECT_FALSE(any) << "eig " << r.eig_min << " " << r.eig_max;
    }
  }
}

TEST(CertifyMinimizer, Examples) {
  const Vector y = vec({2.0, -0.3, 0.9, -1.5});
  const auto f = make_quadratic(make_identity(4), y);
  const auto p = separable_lift(make_l1(0.5), 4);
  Vector xs(4);
  for (Index i = 0; i < 4; ++i) xs[i] = oracle::soft(y[i], 0.5);
  EXPECT_TRUE(certify_minimizer(f, p, xs, 0.7, 1e-10).pass);
  SplitMix64 rng(12);
  Vector d = rng.normal_vector(4);
  d *= 0.1 / d.norm();
  EXPECT_FALSE(certify_minimizer(f, p, xs + d, 0.7, 1e-10).pass);

  const auto z = separable_lift(make_zero(), 4);
  EXPECT_TRUE(certify_minimizer(f, z, y, 0.7, 1e-12).pass);
  EXPECT_THROW(certify_minimizer(f, separable_lift(make_firm(1, 0.5), 4), xs, 2.0, 1e-10), StepTooLarge);
}

TEST(EstimateLinearRate, Examples) {
  std::vector<double> geo, flat(40, 0.3);
  for (int k = 0; k < 40; ++k) geo.push_back(std::pow(0.5, k));
  EXPECT_NEAR(estimate_linear_rate(geo).rate, 0.5, 1e-6);
  EXPECT_NEAR(estimate_linear_rate(flat).rate, 1.0, 1e-12);
  const auto done = estimate_linear_rate({1.0, 0.1, 0.0, 0.0});
  EXPECT_TRUE(done.converged_flat);
  EXPECT_THROW(estimate_linear_rate(geo, 0.0), InvalidArgument);
}

TEST(EstimateLinearRate, WindowSkipsConvergedTail) {
  std::vector<double> d;
  for (int k = 0; k < 30; ++k) d.push_back(std::pow(0.8, k));
  for (int k = 0; k < 20; ++k) d.push_back(0.0);
  const auto r = estimate_linear_rate(d, 0.5);
  EXPECT_NEAR(r.rate, 0.8, 1e-9);
  EXPECT_EQ(r.window_begin, 15u);
  EXPECT_EQ(r.window_end, 30u);
}

TEST(EstimateLinearRate, IstaRateBoundedByContraction) {
  const auto inst = convolution_instance(20, 13);
  const double rho = 0.5 * inst.f.strong_convexity();
  const auto p = separable_lift(make_firm(0.05, rho), 20);
  const double alpha = 0.99 * max_step_fb(inst.f.lipschitz(), rho);
  StopCriteria ref_stop;
  ref_stop.max_iters = 20000;
  ref_stop.fp_tol = 1e-15;
  ref_stop.stall_window = 0;
  const auto ref = solve_ista(inst.f, p, Vector::Zero(20), {StepKind::explicit_step, alpha, 1.0}, ref_stop);
  ASSERT_TRUE(certify_minimizer(inst.f, p, ref.final_iterate, alpha, 1e-12).pass);
  StopCriteria st;
  st.max_iters = 400;
  st.fp_tol = 0.0;
  st.stall_window = 0;
  st.reference = ref.final_iterate;
  const auto tr = solve_ista(inst.f, p, Vector::Zero(20), {StepKind::explicit_step, alpha, 1.0}, st);
  const double bound = contraction_rate(inst.f.quadratic()->bounds, rho, alpha);
  const auto est = estimate_linear_rate(tr.dist_to_ref);
  ASSERT_FALSE(est.converged_flat);
  EXPECT_LE(est.rate, bound + 1e-3);
}

TEST(CompositionAveraged, Examples) {
  const auto two = composition_averaged_check(identity_probe(2), identity_probe(2), 200, 1);
  ASSERT_TRUE(two.beta.has_value());
  EXPECT_NEAR(*two.beta, 0.05, 1e-15);

  const auto inst = convolution_instance(15, 14);
  const double rho = inst.f.strong_convexity();
  const auto p = separable_lift(make_firm(0.2, rho), 15);
  const double a1 = max_step_fb(inst.f.lipschitz(), rho);
  const auto ok = composition_averaged_check(threshold_probe(p, a1), forward_probe(inst.f, a1), 2000, 2);
  EXPECT_TRUE(ok.beta.has_value());

  const double big = std::min(3.0 * a1, 0.95 / rho);
  const auto bad = composition_averaged_check(threshold_probe(p, big), forward_probe(inst.f, big), 2000, 3);
  EXPECT_FALSE(bad.beta.has_value());
  EXPECT_FALSE(bad.report.pass);
  EXPECT_THROW(composition_averaged_check(identity_probe(2), identity_probe(3), 10, 1), ShapeError);
}

TEST(SmoothTermChecks, PassOnQuadratics) {
  const auto inst = convolution_instance(25, 15);
  const double rho = inst.f.strong_convexity();
  EXPECT_TRUE(cocoercivity_check(inst.f, 1000, 1).pass);
  EXPECT_TRUE(shifted_gradient_check(inst.f, rho, 1000, 2).pass);
  EXPECT_TRUE(descent_lemma_check(inst.f, 1000, 3).pass);
  const double alpha = 0.9 * max_step_fb(inst.f.lipschitz(), rho);
  const double beta = alpha * (inst.f.lipschitz() + rho) / 2.0;
  EXPECT_TRUE(check_averaged(scaled_forward_probe(inst.f, alpha, rho), beta, 1000, 4).pass);
}

TEST(SmoothTermChecks, FailWithWrongConstant) {
  const auto op = make_diagonal(vec({1.0, 2.0}));
  const auto good = make_quadratic(op, vec({0.0, 0.0}));
  // Claimed Lipschitz constant half the true one.
  SmoothTerm liar(2, [&](const Vector& x) { return good.eval(x); },
                  [&](const Vector& x) { return good.grad(x); }, 2.0, 1.0);
  EXPECT_FALSE(cocoercivity_check(liar, 500, 1).pass);
  EXPECT_FALSE(descent_lemma_check(liar, 500, 2).pass);
  EXPECT_FALSE(shifted_gradient_check(liar, 0.0, 500, 3).pass);
}

TEST(TraceChecks, IstaSatisfiesIterateInequalityAndDescent) {
  const auto inst = convolution_instance(20, 16);
  const double rho = inst.f.strong_convexity();
  const auto p = separable_lift(make_firm(0.3, rho), 20);
  const double alpha = 0.999 * max_step_fb(inst.f.lipschitz(), rho);
  StopCriteria st;
  st.max_iters = 300;
  st.fp_tol = 0.0;
  st.stall_window = 0;
  st.record_iterates = true;
  const auto tr = solve_ista(inst.f, p, Vector::Zero(20), {StepKind::explicit_step, alpha, 1.0}, st);
  EXPECT_TRUE(descent_check(tr).pass);
  EXPECT_TRUE(iterate_inequality_check(inst.f, p, alpha, tr.iterates).pass);
}

TEST(TraceChecks, DescentCheckFlagsIncrease) {
  SolveTrace tr;
  tr.cost = {3.0, 2.0, 2.5, 1.0};
  const auto r = descent_check(tr);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.worst, 0.25, 1e-15);
  EXPECT_EQ(r.detail, "iteration 2");
}

TEST(TraceChecks, MajorizationAndSurrogateGap) {
  const auto inst = convolution_instance(15, 17);
  const double rho = inst.f.strong_convexity();
  for (const auto& p : {separable_lift(make_firm(0.3, rho), 15), separable_lift(make_integer_lattice(4), 15)}) {
    const double a = 0.999 / inst.f.lipschitz();
    if (a * p.rho() >= 1.0) continue;
    EXPECT_TRUE(majorization_check(inst.f, p, a, 1000, 1).pass) << p.scalar().name();
    StopCriteria st;
    st.max_iters = 100;
    st.fp_tol = 0.0;
    st.stall_window = 0;
    st.record_iterates = true;
    const auto tr = solve_ista(inst.f, p, Vector::Zero(15), {StepKind::explicit_step, a, 1.0}, st);
    EXPECT_TRUE(surrogate_gap_check(inst.f, p, a, tr.iterates, 5, 2).pass) << p.scalar().name();
  }
}

TEST(TraceChecks, MajorizationFailsPastInverseSigma) {
  const auto inst = convolution_instance(10, 18);
  const auto p = separable_lift(make_zero(), 10);
  EXPECT_FALSE(majorization_check(inst.f, p, 1.5 / inst.f.lipschitz(), 1000, 1).pass);
}

TEST(DistanceRatio, RespectsContractionAndFloor) {
  std::vector<Vector> it;
  for (int k = 0; k < 20; ++k) it.push_back(vec({std::pow(0.5, k), 0.0}));
  const auto r = distance_ratio_check(it, vec({0.0, 0.0}), 0.5);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.worst, 0.5, 1e-15);
  EXPECT_FALSE(distance_ratio_check(it, vec({0.0, 0.0}), 0.4).pass);
  std::vector<Vector> tiny{vec({1e-9, 0}), vec({1e-9, 0})};
  EXPECT_EQ(distance_ratio_check(tiny, vec({0.0, 0.0}), 0.1).trials, 0);
}

TEST(PropertyReportInvariant, WitnessReproducesWorstRatio) {
  const auto inst = convolution_instance(10, 19);
  const double rho = inst.f.strong_convexity();
  const auto p = separable_lift(make_firm(0.3, rho), 10);
  const double alpha = max_step_fb(inst.f.lipschitz(), rho);
  std::vector<OperatorProbe> probes{threshold_probe(p, alpha), scaled_threshold_probe(p, alpha),
                                    forward_probe(inst.f, alpha),
                                    averaged_residual_probe(scaled_threshold_probe(p, alpha), 0.5),
                                    shifted_gradient_probe(inst.f, rho)};
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto r = empirical_lipschitz(probes[i], 500, 20 + i);
    expect_witness_reproduces(probes[i], r);
  }
}
