#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxista/error.hpp"
#include "proxista/linop.hpp"
#include "proxista/penalty.hpp"
#include "proxista/rng.hpp"
#include "proxista/solver.hpp"

namespace proxista {

/// Black-box map R^dim -> R^dim sampled on random pairs. Half of the pairs
/// are independent uniform points in [-radius, radius]^dim; the other half
/// are local perturbations of size radius * local_scale, which is where
/// slopes of piecewise-linear thresholds are resolved.
struct OperatorProbe {
  Index dim = 1;
  std::function<Vector(const Vector&)> map;
  double radius = 10.0;
  double local_scale = 1e-2;
};

/// Outcome of a sampled property check. Sampled checks can only falsify:
/// a pass means no violation was found in `trials` pairs drawn from `seed`.
struct PropertyReport {
  std::string property;
  int trials = 0;
  std::uint64_t seed = 0;
  double worst = 0.0;
  Vector witness_a;
  Vector witness_b;
  bool pass = false;
  double tolerance = 0.0;
  std::string detail;
};

namespace detail {

inline std::pair<Vector, Vector> sample_pair(SplitMix64& rng, const OperatorProbe& probe,
                                             int trial) {
  Vector a = rng.uniform_vector(probe.dim, -probe.radius, probe.radius);
  const double spread = (trial % 2 == 0) ? probe.radius : probe.radius * probe.local_scale;
  Vector b = (trial % 2 == 0) ? rng.uniform_vector(probe.dim, -spread, spread)
                              : Vector(a + rng.uniform_vector(probe.dim, -spread, spread));
  return {std::move(a), std::move(b)};
}

} // namespace detail

/// ||map(a) - map(b)|| / ||a - b|| for one pair.
inline double lipschitz_ratio(const OperatorProbe& probe, const Vector& a, const Vector& b) {
  return (probe.map(a) - probe.map(b)).norm() / (a - b).norm();
}

/// Largest sampled ratio ||map(x) - map(z)|| / ||x - z||; passes when it stays
/// within bound + tol. Pairs closer than 1e-12 are skipped.
inline PropertyReport empirical_lipschitz(const OperatorProbe& probe, int trials,
                                          std::uint64_t seed, double bound = 1.0,
                                          double tol = 1e-9) {
  if (trials < 1) throw InvalidArgument("empirical_lipschitz: trials must be >= 1");
  SplitMix64 rng(seed);
  PropertyReport rep;
  rep.property = "lipschitz";
  rep.trials = trials;
  rep.seed = seed;
  rep.tolerance = tol;
  rep.worst = -1.0;
  for (int t = 0; t < trials; ++t) {
    auto [a, b] = detail::sample_pair(rng, probe, t);
    if ((a - b).norm() < 1e-12) continue;
    const double r = lipschitz_ratio(probe, a, b);
    if (r > rep.worst) {
      rep.worst = r;
      rep.witness_a = std::move(a);
      rep.witness_b = std::move(b);
    }
  }
  rep.pass = rep.worst <= bound + tol;
  rep.detail = "bound " + std::to_string(bound);
  return rep;
}

/// The map (S - (1 - beta) I) / beta, non-expansive iff S is beta-averaged.
inline OperatorProbe averaged_residual_probe(const OperatorProbe& probe, double beta) {
  OperatorProbe out = probe;
  out.map = [m = probe.map, beta](const Vector& x) -> Vector {
    return (m(x) - (1.0 - beta) * x) / beta;
  };
  return out;
}

inline PropertyReport check_averaged(const OperatorProbe& probe, double beta, int trials,
                                     std::uint64_t seed, double tol = 1e-9) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("check_averaged: beta must lie in (0, 1)");
  PropertyReport rep = empirical_lipschitz(averaged_residual_probe(probe, beta), trials, seed,
                                           1.0, tol);
  rep.property = "averaged";
  rep.detail = "beta " + std::to_string(beta);
  return rep;
}

struct AffineAveragedness {
  double eig_min = 0.0;
  double eig_max = 0.0;
  bool averaged = false;
};

/// x -> M x + u (M symmetric) is beta-averaged for some beta in (0, 1) iff
/// the spectrum of M lies in (-1, 1]. The closed end gets 1e-12 of slack.
inline AffineAveragedness affine_averaged_interval(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("affine_averaged_interval: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument("affine_averaged_interval: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  AffineAveragedness out;
  out.eig_min = eig.eigenvalues().minCoeff();
  out.eig_max = eig.eigenvalues().maxCoeff();
  out.averaged = out.eig_min > -1.0 && out.eig_max <= 1.0 + 1e-12;
  return out;
}

struct MinimizerCertificate {
  bool pass = false;
  double residual = 0.0;
};

/// x minimizes f + P iff it is a fixed point of the ISTA map at any
/// alpha with alpha * rho < 1.
inline MinimizerCertificate certify_minimizer(const SmoothTerm& f, const Penalty& p,
                                              const Vector& x, double alpha, double tol) {
  const double r = fixed_point_residual(f, p, alpha, x);
  return {r <= tol, r};
}

struct RateEstimate {
  double rate = 0.0;
  std::size_t window_begin = 0; ///< first index used
  std::size_t window_end = 0;   ///< one past the last index used
  bool converged_flat = false;  ///< fewer than 10 usable entries
};

/// Geometric rate from the least-squares slope of log(distance) against the
/// iteration index, over the last `tail_fraction` of entries above 1e-13.
inline RateEstimate estimate_linear_rate(const std::vector<double>& distances,
                                         double tail_fraction = 0.5) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw InvalidArgument("estimate_linear_rate: tail fraction must lie in (0, 1]");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < distances.size(); ++i)
    if (distances[i] > 1e-13) usable.push_back(i);
  const auto take = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(usable.size())));
  RateEstimate out;
  if (take < 10) {
    out.converged_flat = true;
    return out;
  }
  const std::size_t first = usable.size() - take;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = first; j < usable.size(); ++j) {
    const double x = static_cast<double>(usable[j]);
    const double y = std::log(distances[usable[j]]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(take);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.rate = std::exp(slope);
  out.window_begin = usable[first];
  out.window_end = usable.back() + 1;
  return out;
}

struct CompositionCheck {
  std::optional<double> beta; ///< smallest grid beta that passed
  PropertyReport report;      ///< the passing report, or the beta = 0.95 attempt
};

/// Searches beta in {0.05, 0.10, ..., 0.95} for which outer ∘ inner passes
/// check_averaged.
inline CompositionCheck composition_averaged_check(const OperatorProbe& outer,
                                                   const OperatorProbe& inner, int trials,
                                                   std::uint64_t seed, double tol = 1e-9) {
  if (outer.dim != inner.dim)
    throw ShapeError("composition_averaged_check: probe dimensions differ");
  OperatorProbe comp = inner;
  comp.map = [o = outer.map, i = inner.map](const Vector& x) { return o(i(x)); };
  CompositionCheck out;
  for (int k = 1; k <= 19; ++k) {
    const double beta = 0.05 * k;
    PropertyReport rep = check_averaged(comp, beta, trials, seed, tol);
    rep.property = "composition-averaged";
    if (rep.pass) {
      out.beta = beta;
      out.report = std::move(rep);
      return out;
    }
    out.report = std::move(rep);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probes for the ISTA operator and its factors

/// T_alpha, componentwise.
inline OperatorProbe threshold_probe(const Penalty& p, double alpha, double radius = 10.0) {
  p.check_step(alpha);
  return {p.dimension(), [p, alpha](const Vector& x) { return p.prox(x, alpha); }, radius};
}

/// S_alpha(x) = T_alpha((1 - alpha rho) x).
inline OperatorProbe scaled_threshold_probe(const Penalty& p, double alpha,
                                            double radius = 10.0) {
  p.check_step(alpha);
  const double shrink = 1.0 - alpha * p.rho();
  return {p.dimension(),
          [p, alpha, shrink](const Vector& x) { return p.prox(shrink * x, alpha); }, radius};
}

/// U_alpha(x) = x - alpha grad f(x) (for quadratic f: alpha H^T y + (I - alpha H^T H) x).
inline OperatorProbe forward_probe(const SmoothTerm& f, double alpha, double radius = 10.0) {
  return {f.dimension(), [f, alpha](const Vector& x) -> Vector { return x - alpha * f.grad(x); },
          radius};
}

/// V_alpha = U_alpha / (1 - alpha rho).
inline OperatorProbe scaled_forward_probe(const SmoothTerm& f, double alpha, double rho,
                                          double radius = 10.0) {
  if (alpha * rho >= 1.0) throw StepTooLarge(alpha, rho);
  const double s = 1.0 / (1.0 - alpha * rho);
  return {f.dimension(),
          [f, alpha, s](const Vector& x) -> Vector { return s * (x - alpha * f.grad(x)); },
          radius};
}

/// Linear part of V_alpha for quadratic f: (I - alpha H^T H) / (1 - alpha rho).
inline Matrix scaled_forward_matrix(const LinearMap& op, double alpha, double rho) {
  if (alpha * rho >= 1.0) throw StepTooLarge(alpha, rho);
  const Index n = op.in_dim();
  return (Matrix::Identity(n, n) - alpha * op.gram()) / (1.0 - alpha * rho);
}

/// G = grad f - rho I.
inline OperatorProbe shifted_gradient_probe(const SmoothTerm& f, double rho,
                                            double radius = 1.0) {
  return {f.dimension(), [f, rho](const Vector& x) -> Vector { return f.grad(x) - rho * x; },
          radius};
}

// ---------------------------------------------------------------------------
// Inequalities for smooth terms and along ISTA traces. Each report's
// `worst` is the largest violation (positive means the inequality failed by
// that much), except where noted.

/// (1/sigma)||grad f(x) - grad f(z)||^2 - <grad f(x) - grad f(z), x - z> <= tol.
inline PropertyReport cocoercivity_check(const SmoothTerm& f, int trials, std::uint64_t seed,
                                         double radius = 1.0, double tol = 1e-9) {
  SplitMix64 rng(seed);
  PropertyReport rep{"cocoercivity", trials, seed, -infinity, {}, {}, false, tol, ""};
  const double sigma = f.lipschitz();
  for (int t = 0; t < trials; ++t) {
    Vector a = rng.uniform_vector(f.dimension(), -radius, radius);
    Vector b = rng.uniform_vector(f.dimension(), -radius, radius);
    const Vector dg = f.grad(a) - f.grad(b);
    const double v = dg.squaredNorm() / sigma - dg.dot(a - b);
    if (v > rep.worst) {
      rep.worst = v;
      rep.witness_a = std::move(a);
      rep.witness_b = std::move(b);
    }
  }
  rep.pass = rep.worst <= tol;
  return rep;
}

/// ||G(x) - G(z)|| <= (sigma - rho)||x - z|| for G = grad f - rho I; `worst` is the ratio.
inline PropertyReport shifted_gradient_check(const SmoothTerm& f, double rho, int trials,
                                             std::uint64_t seed, double radius = 1.0,
                                             double tol = 1e-9) {
  OperatorProbe probe = shifted_gradient_probe(f, rho, radius);
  probe.local_scale = 1.0;
  PropertyReport rep = empirical_lipschitz(probe, trials, seed, f.lipschitz() - rho, tol);
  rep.property = "shifted-gradient-lipschitz";
  return rep;
}

/// f(x) - f(z) - <grad f(z), x - z> - (sigma/2)||x - z||^2 <= tol.
inline PropertyReport descent_lemma_check(const SmoothTerm& f, int trials, std::uint64_t seed,
                                          double radius = 1.0, double tol = 1e-9) {
  SplitMix64 rng(seed);
  PropertyReport rep{"descent-lemma", trials, seed, -infinity, {}, {}, false, tol, ""};
  for (int t = 0; t < trials; ++t) {
    Vector a = rng.uniform_vector(f.dimension(), -radius, radius);
    Vector b = rng.uniform_vector(f.dimension(), -radius, radius);
    const Vector d = a - b;
    const double v =
        f.eval(a) - f.eval(b) - f.grad(b).dot(d) - 0.5 * f.lipschitz() * d.squaredNorm();
    if (v > rep.worst) {
      rep.worst = v;
      rep.witness_a = std::move(a);
      rep.witness_b = std::move(b);
    }
  }
  rep.pass = rep.worst <= tol;
  return rep;
}

/// Largest relative cost increase (c[k+1] - c[k]) / max(|c[k]|, 1e-300) along a trace.
inline PropertyReport descent_check(const SolveTrace& trace, double rel_tol = 1e-10) {
  PropertyReport rep{"monotone-descent", static_cast<int>(trace.size()), 0, -infinity,
                     {}, {}, false, rel_tol, ""};
  for (std::size_t k = 0; k + 1 < trace.cost.size(); ++k) {
    const double inc =
        (trace.cost[k + 1] - trace.cost[k]) / std::max(std::abs(trace.cost[k]), 1e-300);
    if (inc > rep.worst) {
      rep.worst = inc;
      rep.detail = "iteration " + std::to_string(k + 1);
      if (!trace.iterates.empty()) {
        rep.witness_a = trace.iterates[k];
        rep.witness_b = trace.iterates[k + 1];
      }
    }
  }
  if (trace.cost.size() < 2) rep.worst = 0.0;
  rep.pass = rep.worst <= rel_tol;
  return rep;
}

/// P(x+) - P(x) + <grad f(x), x+ - x> - (rho/2 - 1/alpha)||x - x+||^2 <= tol
/// for consecutive iterates (x, x+) of an ISTA run at step alpha.
inline PropertyReport iterate_inequality_check(const SmoothTerm& f, const Penalty& p,
                                               double alpha, const std::vector<Vector>& iterates,
                                               double tol = 1e-9) {
  PropertyReport rep{"ista-iterate-inequality", static_cast<int>(iterates.size()), 0,
                     -infinity, {}, {}, false, tol, ""};
  for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
    const Vector& x = iterates[k];
    const Vector& xn = iterates[k + 1];
    const Vector d = xn - x;
    const double v = p.eval(xn) - p.eval(x) + f.grad(x).dot(d) -
                     (0.5 * p.rho() - 1.0 / alpha) * d.squaredNorm();
    if (v > rep.worst) {
      rep.worst = v;
      rep.witness_a = x;
      rep.witness_b = xn;
    }
  }
  if (iterates.size() < 2) rep.worst = 0.0;
  rep.pass = rep.worst <= tol;
  return rep;
}

/// C(x) - M(x, xk) <= tol for random (x, xk), and |M(xk, xk) - C(xk)| <= tol.
inline PropertyReport majorization_check(const SmoothTerm& f, const Penalty& p, double alpha,
                                         int trials, std::uint64_t seed, double radius = 10.0,
                                         double tol = 1e-12) {
  SplitMix64 rng(seed);
  PropertyReport rep{"mm-majorization", trials, seed, -infinity, {}, {}, false, tol, ""};
  const double lo = std::max(p.scalar().domain_lo(), -radius);
  const double hi = std::min(p.scalar().domain_hi(), radius);
  for (int t = 0; t < trials; ++t) {
    Vector x = rng.uniform_vector(f.dimension(), lo, hi);
    Vector xk = rng.uniform_vector(f.dimension(), lo, hi);
    const double c = cost(f, p, x);
    const double v = c - mm_surrogate(f, p, alpha, x, xk).majorizer;
    const double touch = std::abs(mm_surrogate(f, p, alpha, xk, xk).majorizer - cost(f, p, xk));
    const double worst = std::max(v, touch);
    if (worst > rep.worst) {
      rep.worst = worst;
      rep.witness_a = std::move(x);
      rep.witness_b = std::move(xk);
    }
  }
  rep.pass = rep.worst <= tol;
  return rep;
}

/// Surrogate-gap inequality along consecutive iterates (xk, xk+1) of an MM run:
/// (1/2alpha - rho/2)||x - xk+1||^2 - [M(x, xk) - M(xk+1, xk)] <= tol for random x
/// within `radius` of xk+1 (clipped to the penalty's domain).
inline PropertyReport surrogate_gap_check(const SmoothTerm& f, const Penalty& p, double alpha,
                                          const std::vector<Vector>& iterates,
                                          int samples_per_step, std::uint64_t seed,
                                          double radius = 1.0, double tol = 1e-9) {
  SplitMix64 rng(seed);
  PropertyReport rep{"surrogate-gap", 0, seed, -infinity, {}, {}, false, tol, ""};
  const double lo = p.scalar().domain_lo(), hi = p.scalar().domain_hi();
  const double c = 0.5 / alpha - 0.5 * p.rho();
  for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
    const Vector& xk = iterates[k];
    const Vector& xn = iterates[k + 1];
    const double m_next = mm_surrogate(f, p, alpha, xn, xk).majorizer;
    for (int s = 0; s < samples_per_step; ++s) {
      Vector x = (xn + rng.uniform_vector(f.dimension(), -radius, radius)).cwiseMax(lo).cwiseMin(hi);
      const double v = c * (x - xn).squaredNorm() - (mm_surrogate(f, p, alpha, x, xk).majorizer - m_next);
      ++rep.trials;
      if (v > rep.worst) {
        rep.worst = v;
        rep.witness_a = std::move(x);
        rep.witness_b = xk;
      }
    }
  }
  if (rep.trials == 0) rep.worst = 0.0;
  rep.pass = rep.worst <= tol;
  return rep;
}

/// Per-iteration ratios ||x_{k+1} - x*|| / ||x_k - x*|| along recorded
/// iterates, restricted to steps where ||x_k - x*|| > floor. `worst` is the
/// largest ratio; passes when it stays within bound + tol.
inline PropertyReport distance_ratio_check(const std::vector<Vector>& iterates,
                                           const Vector& fixed_point, double bound,
                                           double tol = 1e-6, double floor = 1e-8) {
  PropertyReport rep{"contraction-ratio", 0, 0, 0.0, {}, {}, false, tol, ""};
  for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
    const double d0 = (iterates[k] - fixed_point).norm();
    if (d0 <= floor) continue;
    const double r = (iterates[k + 1] - fixed_point).norm() / d0;
    ++rep.trials;
    if (r > rep.worst) {
      rep.worst = r;
      rep.witness_a = iterates[k];
      rep.witness_b = iterates[k + 1];
    }
  }
  rep.pass = rep.worst <= bound + tol;
  rep.detail = "bound " + std::to_string(bound);
  return rep;
}

} // namespace proxista
