#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxista/error.hpp"
#include "proxista/linop.hpp"
#include "proxista/penalty.hpp"

namespace proxista {

/// f(x) = 1/2 ||y - H x||^2 together with the Gram spectrum of H.
struct QuadraticPayload {
  LinearMap op;
  Vector data;
  SpectralBounds bounds;
};

/// Differentiable data term with a sigma-Lipschitz gradient and strong
/// convexity modulus mu (f - (mu/2)||x||^2 convex).
class SmoothTerm {
public:
  using EvalFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  SmoothTerm(Index dim, EvalFn eval, GradFn grad, double lipschitz, double strong_convexity)
      : dim_(dim), eval_(std::move(eval)), grad_(std::move(grad)), lipschitz_(lipschitz),
        strong_convexity_(strong_convexity) {
    if (!(lipschitz > 0.0)) throw InvalidArgument("smooth term: Lipschitz constant must be > 0");
    if (!(strong_convexity >= 0.0))
      throw InvalidArgument("smooth term: strong convexity must be >= 0");
  }

  Index dimension() const noexcept { return dim_; }
  double eval(const Vector& x) const { return eval_(x); }
  Vector grad(const Vector& x) const { return grad_(x); }
  double lipschitz() const noexcept { return lipschitz_; }
  double strong_convexity() const noexcept { return strong_convexity_; }
  const std::optional<QuadraticPayload>& quadratic() const noexcept { return quadratic_; }

  static SmoothTerm from_quadratic(const LinearMap& op, const Vector& data,
                              const SpectralBounds& bounds) {
    if (data.size() != op.out_dim())
      throw ShapeError("quadratic data term: data length " + std::to_string(data.size()) +
                       " does not match operator output " + std::to_string(op.out_dim()));
    if (!(bounds.sigma_M > 0.0))
      throw InvalidArgument("quadratic data term: operator has sigma_M = 0");
    SmoothTerm f(
        op.in_dim(),
        [op, data](const Vector& x) { return 0.5 * (data - op.apply(x)).squaredNorm(); },
        [op, data](const Vector& x) -> Vector { return op.adjoint(op.apply(x) - data); },
        bounds.sigma_M, bounds.sigma_m);
    f.quadratic_ = QuadraticPayload{op, data, bounds};
    return f;
  }

private:
  Index dim_;
  EvalFn eval_;
  GradFn grad_;
  double lipschitz_;
  double strong_convexity_;
  std::optional<QuadraticPayload> quadratic_;
};

inline SmoothTerm make_quadratic(const LinearMap& op, const Vector& data,
                                 const SpectralBounds& bounds) {
  return SmoothTerm::from_quadratic(op, data, bounds);
}

inline SmoothTerm make_quadratic(const LinearMap& op, const Vector& data) {
  return SmoothTerm::from_quadratic(op, data, gram_spectral_bounds(op));
}

// ---------------------------------------------------------------------------
// Step sizes

/// Largest majorization-minimization step, 1/sigma_M.
inline double max_step_mm(const SpectralBounds& bounds) {
  if (!(bounds.sigma_M > 0.0)) throw InvalidArgument("max_step_mm: sigma_M must be > 0");
  return 1.0 / bounds.sigma_M;
}

/// Forward-backward bound 2/(sigma + rho). Convergence needs alpha strictly below it.
inline double max_step_fb(double sigma, double rho) {
  if (!(sigma + rho > 0.0)) throw InvalidArgument("max_step_fb: sigma + rho must be > 0");
  return 2.0 / (sigma + rho);
}

/// Lipschitz constant of x -> T_alpha(x - alpha grad f(x)) for quadratic f:
/// max(|1 - alpha sigma_M|, |1 - alpha sigma_m|) / (1 - alpha rho).
inline double contraction_rate(const SpectralBounds& bounds, double rho, double alpha) {
  if (alpha * rho >= 1.0) throw StepTooLarge(alpha, rho);
  return std::max(std::abs(1.0 - alpha * bounds.sigma_M), std::abs(1.0 - alpha * bounds.sigma_m)) /
         (1.0 - alpha * rho);
}

enum class StepKind { mm, fb, contraction, explicit_step };

inline const char* to_string(StepKind k) {
  switch (k) {
  case StepKind::mm: return "mm";
  case StepKind::fb: return "fb";
  case StepKind::contraction: return "contraction";
  case StepKind::explicit_step: return "explicit";
  }
  return "unknown";
}

struct StepPolicy {
  StepKind kind = StepKind::fb;
  double alpha = 0.0;
  double safety = 1.0;
};

/// Resolves a step policy against a data term and penalty weak-convexity rho.
///  - mm:          safety / sigma
///  - fb:          safety * 2 / (sigma + rho)
///  - contraction: safety * 2 / (sigma_M + sigma_m), the step minimizing
///                 contraction_rate; requires rho < mu
///  - explicit:    `alpha` as given
inline StepPolicy resolve_step(StepKind kind, const SmoothTerm& f, double rho,
                               double safety = 1.0, double alpha = 0.0) {
  if (!(safety > 0.0 && safety <= 1.0))
    throw InvalidArgument("step policy: safety must lie in (0, 1]");
  StepPolicy out{kind, alpha, safety};
  const double sigma = f.lipschitz();
  switch (kind) {
  case StepKind::mm: out.alpha = safety / sigma; break;
  case StepKind::fb: out.alpha = safety * max_step_fb(sigma, rho); break;
  case StepKind::contraction:
    if (!(rho < f.strong_convexity()))
      throw InvalidArgument("contraction step: needs rho < strong convexity of the data term");
    out.alpha = safety * 2.0 / (sigma + f.strong_convexity());
    break;
  case StepKind::explicit_step:
    if (!(alpha > 0.0)) throw InvalidArgument("explicit step: alpha must be > 0");
    break;
  }
  if (out.alpha * rho >= 1.0) throw StepTooLarge(out.alpha, rho);
  return out;
}

// ---------------------------------------------------------------------------
// Cost, single steps and residuals

/// D(x) = f(x) + P(x); +inf when x is outside the penalty's domain.
inline double cost(const SmoothTerm& f, const Penalty& p, const Vector& x) {
  const double pv = p.eval(x);
  if (std::isinf(pv)) return pv;
  return f.eval(x) + pv;
}

inline Vector ista_step(const SmoothTerm& f, const Penalty& p, const Vector& x, double alpha) {
  p.check_step(alpha);
  return p.prox(x - alpha * f.grad(x), alpha);
}

/// ||x - T_alpha(x - alpha grad f(x))||; zero exactly at minimizers.
inline double fixed_point_residual(const SmoothTerm& f, const Penalty& p, double alpha,
                                   const Vector& x) {
  return (x - ista_step(f, p, x, alpha)).norm();
}

struct SurrogateValue {
  double majorizer = 0.0; ///< M(x, xk) = C(x) + g(x, xk)
  double gap = 0.0;       ///< g(x, xk)
};

/// Quadratic MM surrogate g(x, xk) = 1/2 <x - xk, (I/alpha - H^T H)(x - xk)>.
inline SurrogateValue mm_surrogate(const SmoothTerm& f, const Penalty& p, double alpha,
                                   const Vector& x, const Vector& xk) {
  if (!f.quadratic()) throw InvalidArgument("mm_surrogate: needs a quadratic data term");
  const Vector d = x - xk;
  const double g = 0.5 * d.dot(d / alpha - f.quadratic()->op.gram_apply(d));
  return {cost(f, p, x) + g, g};
}

// ---------------------------------------------------------------------------
// Traces

enum class StopReason { max_iters, fp_residual, cost_stall };

inline const char* to_string(StopReason r) {
  switch (r) {
  case StopReason::max_iters: return "max-iters";
  case StopReason::fp_residual: return "fp-residual";
  case StopReason::cost_stall: return "cost-stall";
  }
  return "unknown";
}

struct StopCriteria {
  int max_iters = 10000;
  double fp_tol = 1e-10;
  /// Stop once |dC| <= stall_rel_tol * |C| for stall_window consecutive
  /// iterations. A non-positive window disables the test.
  double stall_rel_tol = 1e-14;
  int stall_window = 50;
  std::optional<Vector> reference;
  bool record_iterates = false;
};

/// Entry k describes iterate x^k; entry 0 is the starting point.
struct SolveTrace {
  std::vector<double> cost;
  std::vector<double> fp_residual;
  std::vector<double> dist_to_ref; ///< empty when no reference was given
  std::vector<double> elapsed_s;
  std::vector<Vector> iterates;    ///< filled only with record_iterates
  Vector final_iterate;
  StopReason stop = StopReason::max_iters;
  bool has_reference = false;

  std::size_t size() const noexcept { return cost.size(); }
  int iterations() const noexcept { return cost.empty() ? 0 : static_cast<int>(cost.size()) - 1; }
};

/// A run left the finite region (or blew past its divergence threshold).
/// Carries every iterate recorded before the failure.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, SolveTrace prefix)
      : Error(what), trace_(std::move(prefix)) {}
  const SolveTrace& trace() const noexcept { return trace_; }

private:
  SolveTrace trace_;
};

namespace detail {

class TraceRecorder {
public:
  TraceRecorder(const SmoothTerm& f, const Penalty& p, const StopCriteria& stop)
      : f_(f), p_(p), stop_(stop), start_(std::chrono::steady_clock::now()) {
    trace_.has_reference = stop.reference.has_value();
  }

  /// Records x with its fixed-point residual; returns a stop reason once one applies.
  std::optional<StopReason> record(const Vector& x, double fp) {
    const double c = cost(f_, p_, x);
    trace_.cost.push_back(c);
    trace_.fp_residual.push_back(fp);
    if (stop_.reference) trace_.dist_to_ref.push_back((x - *stop_.reference).norm());
    trace_.elapsed_s.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
    if (stop_.record_iterates) trace_.iterates.push_back(x);
    trace_.final_iterate = x;

    if (trace_.cost.size() >= 2 && stop_.stall_window > 0) {
      const double prev = trace_.cost[trace_.cost.size() - 2];
      if (std::abs(c - prev) <= stop_.stall_rel_tol * std::abs(prev)) ++stall_;
      else stall_ = 0;
    }
    if (fp <= stop_.fp_tol) return StopReason::fp_residual;
    if (stop_.stall_window > 0 && stall_ >= stop_.stall_window) return StopReason::cost_stall;
    if (trace_.iterations() >= stop_.max_iters) return StopReason::max_iters;
    return std::nullopt;
  }

  SolveTrace& trace() noexcept { return trace_; }

  SolveTrace finish(StopReason reason) {
    trace_.stop = reason;
    return std::move(trace_);
  }

private:
  const SmoothTerm& f_;
  const Penalty& p_;
  const StopCriteria& stop_;
  std::chrono::steady_clock::time_point start_;
  SolveTrace trace_;
  int stall_ = 0;
};

inline void check_start(const SmoothTerm& f, const Penalty& p, const Vector& x0,
                        const char* who) {
  if (x0.size() != f.dimension() || p.dimension() != f.dimension())
    throw ShapeError(std::string(who) + ": dimensions of x0, data term and penalty disagree");
  if (!std::isfinite(cost(f, p, x0)))
    throw InvalidArgument(std::string(who) + ": starting point has non-finite cost");
}

// Threshold for accelerated solvers: 1e12 times the initial cost, or 1e12
// outright when the start already has zero cost.
inline double divergence_threshold(double initial_cost) {
  return 1e12 * (initial_cost > 0.0 ? initial_cost : 1.0);
}

} // namespace detail

/// ISTA / forward-backward iteration x <- T_alpha(x - alpha grad f(x)).
inline SolveTrace solve_ista(const SmoothTerm& f, const Penalty& p, const Vector& x0,
                             const StepPolicy& policy, const StopCriteria& stop = {}) {
  detail::check_start(f, p, x0, "solve_ista");
  const double alpha = policy.alpha;
  p.check_step(alpha);
  detail::TraceRecorder rec(f, p, stop);
  Vector x = x0;
  Vector next = ista_step(f, p, x, alpha);
  auto reason = rec.record(x, (x - next).norm());
  while (!reason) {
    x = std::move(next);
    next = ista_step(f, p, x, alpha);
    reason = rec.record(x, (x - next).norm());
    if (!std::isfinite(rec.trace().cost.back())) {
      std::string what = "solve_ista: cost became non-finite at iteration " +
                         std::to_string(rec.trace().iterations());
      throw DivergenceError(what, rec.finish(StopReason::max_iters));
    }
  }
  return rec.finish(*reason);
}

/// t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2, starting from t_1 = 1.
inline double fista_next_t(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

/// Constant-step FISTA. Convergence is not guaranteed for weakly convex
/// penalties; a run is declared divergent once its cost is non-finite or
/// exceeds 1e12 times the initial cost.
inline SolveTrace solve_fista(const SmoothTerm& f, const Penalty& p, const Vector& x0,
                              double alpha, const StopCriteria& stop = {}) {
  detail::check_start(f, p, x0, "solve_fista");
  p.check_step(alpha);
  detail::TraceRecorder rec(f, p, stop);
  const double limit = detail::divergence_threshold(cost(f, p, x0));
  Vector x = x0, x_prev = x0, y = x0;
  double t = 1.0;
  auto reason = rec.record(x, fixed_point_residual(f, p, alpha, x));
  while (!reason) {
    x_prev = x;
    x = ista_step(f, p, y, alpha);
    const double t_next = fista_next_t(t);
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    reason = rec.record(x, fixed_point_residual(f, p, alpha, x));
    const double c = rec.trace().cost.back();
    if (!std::isfinite(c) || c > limit) {
      std::string what =
          "solve_fista: diverged at iteration " + std::to_string(rec.trace().iterations());
      throw DivergenceError(what, rec.finish(StopReason::max_iters));
    }
  }
  return rec.finish(*reason);
}

/// Two-step IST parameters for a Gram spectrum normalized to [kappa, 1].
///   rho_hat = (1 - sqrt kappa) / (1 + sqrt kappa)
///   alpha   = rho_hat^2 + 1
///   beta    = 2 alpha / (kappa + 1)
/// kappa = sigma_m / sigma_M, replaced by kappa_floor (1e-4, the TwIST
/// reference default) when the operator is singular.
struct TwistParams {
  double kappa = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double step = 0.0; ///< inner IST step, 1/sigma_M
  bool monotone = true;

  static constexpr double kappa_floor = 1e-4;

  static TwistParams from_bounds(const SpectralBounds& b, bool monotone = true) {
    TwistParams out;
    out.kappa = std::max(b.sigma_m / b.sigma_M, kappa_floor);
    const double sq = std::sqrt(out.kappa);
    const double rho_hat = (1.0 - sq) / (1.0 + sq);
    out.alpha = rho_hat * rho_hat + 1.0;
    out.beta = 2.0 * out.alpha / (out.kappa + 1.0);
    out.step = 1.0 / b.sigma_M;
    out.monotone = monotone;
    return out;
  }
};

/// TwIST: x_{t+1} = (1 - a) x_{t-1} + (a - b) x_t + b Gamma(x_t), with
/// Gamma the IST step at 1/sigma_M. The first iteration is a plain IST step.
/// With `monotone`, a two-step candidate that raises the cost (or leaves the
/// penalty's domain) is replaced by the plain IST step.
inline SolveTrace solve_twist(const SmoothTerm& f, const Penalty& p, const Vector& x0,
                              const TwistParams& params, const StopCriteria& stop = {}) {
  if (!f.quadratic()) throw InvalidArgument("solve_twist: needs a quadratic data term");
  detail::check_start(f, p, x0, "solve_twist");
  const double step = params.step;
  p.check_step(step);
  detail::TraceRecorder rec(f, p, stop);
  const double limit = detail::divergence_threshold(cost(f, p, x0));

  Vector x_prev = x0;
  Vector gamma = ista_step(f, p, x0, step);
  auto reason = rec.record(x0, (x0 - gamma).norm());
  if (reason) return rec.finish(*reason);
  Vector x = gamma;
  gamma = ista_step(f, p, x, step);
  reason = rec.record(x, (x - gamma).norm());
  while (!reason) {
    Vector cand = (1.0 - params.alpha) * x_prev + (params.alpha - params.beta) * x +
                  params.beta * gamma;
    if (params.monotone && !(cost(f, p, cand) <= rec.trace().cost.back())) cand = gamma;
    x_prev = std::move(x);
    x = std::move(cand);
    gamma = ista_step(f, p, x, step);
    reason = rec.record(x, (x - gamma).norm());
    const double c = rec.trace().cost.back();
    if (!std::isfinite(c) || c > limit) {
      std::string what =
          "solve_twist: diverged at iteration " + std::to_string(rec.trace().iterations());
      throw DivergenceError(what, rec.finish(StopReason::max_iters));
    }
  }
  return rec.finish(*reason);
}

} // namespace proxista
