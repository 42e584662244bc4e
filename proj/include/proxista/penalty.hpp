#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "proxista/error.hpp"
#include "proxista/linop.hpp"
#include "proxista/rng.hpp"

namespace proxista {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// A scalar, rho-weakly convex penalty with a closed-form threshold.
///
/// Values live in [0, +inf]; +inf marks points outside the effective domain.
/// prox(z, alpha) is the unique minimizer of (1/2 alpha)(x - z)^2 + P(x),
/// which exists whenever alpha * rho < 1. Calling prox outside that range
/// throws StepTooLarge rather than clamping.
class ScalarPenalty {
public:
  struct Model {
    virtual ~Model() = default;
    virtual double eval(double s) const = 0;
    virtual double rho() const = 0;
    // Only called with alpha > 0 and alpha * rho < 1.
    virtual double prox(double z, double alpha) const = 0;
    // Points where the threshold or the penalty changes formula.
    virtual std::vector<double> breakpoints(double alpha) const = 0;
    virtual double domain_lo() const { return -infinity; }
    virtual double domain_hi() const { return infinity; }
    virtual std::string name() const = 0;
  };

  explicit ScalarPenalty(std::shared_ptr<const Model> model) : model_(std::move(model)) {}

  double eval(double s) const { return model_->eval(s); }
  double rho() const { return model_->rho(); }
  bool has_closed_form_prox() const noexcept { return true; }

  double prox(double z, double alpha) const {
    check_step(alpha);
    return model_->prox(z, alpha);
  }

  void check_step(double alpha) const {
    if (!(alpha > 0.0)) throw InvalidArgument("prox: step must be positive");
    if (alpha * rho() >= 1.0) throw StepTooLarge(alpha, rho());
  }

  std::vector<double> breakpoints(double alpha) const { return model_->breakpoints(alpha); }
  double domain_lo() const { return model_->domain_lo(); }
  double domain_hi() const { return model_->domain_hi(); }
  std::string name() const { return model_->name(); }

  /// The threshold objective (1/2 alpha)(x - z)^2 + P(x).
  double prox_objective(double x, double z, double alpha) const {
    const double p = eval(x);
    if (std::isinf(p)) return infinity;
    return 0.5 / alpha * (x - z) * (x - z) + p;
  }

private:
  std::shared_ptr<const Model> model_;
};

namespace detail {

struct ZeroPenalty final : ScalarPenalty::Model {
  double eval(double) const override { return 0.0; }
  double rho() const override { return 0.0; }
  double prox(double z, double) const override { return z; }
  std::vector<double> breakpoints(double) const override { return {}; }
  std::string name() const override { return "zero"; }
};

struct L1Penalty final : ScalarPenalty::Model {
  double lambda;
  explicit L1Penalty(double l) : lambda(l) {}
  double eval(double s) const override { return lambda * std::abs(s); }
  double rho() const override { return 0.0; }
  double prox(double z, double alpha) const override {
    const double t = alpha * lambda;
    if (std::abs(z) <= t) return 0.0;
    return std::copysign(std::abs(z) - t, z);
  }
  std::vector<double> breakpoints(double alpha) const override {
    return {-alpha * lambda, 0.0, alpha * lambda};
  }
  std::string name() const override { return "l1"; }
};

// Minimax-concave penalty: tau|s| - rho s^2/2 inside |s| < tau/rho, flat
// at tau^2/(2 rho) outside. Its threshold is the firm threshold.
struct FirmPenalty final : ScalarPenalty::Model {
  double tau;
  double r;
  FirmPenalty(double t, double rr) : tau(t), r(rr) {}
  double eval(double s) const override {
    const double a = std::abs(s);
    if (a < tau / r) return tau * a - 0.5 * r * s * s;
    return 0.5 * tau * tau / r;
  }
  double rho() const override { return r; }
  double prox(double z, double alpha) const override {
    const double a = std::abs(z);
    if (a <= alpha * tau) return 0.0;
    if (a < tau / r) return std::copysign((a - alpha * tau) / (1.0 - alpha * r), z);
    return z;
  }
  std::vector<double> breakpoints(double alpha) const override {
    return {-tau / r, -alpha * tau, 0.0, alpha * tau, tau / r};
  }
  std::string name() const override { return "firm"; }
};

// (s - floor s)(ceil s - s) on [0, K], +inf elsewhere; 2-weakly convex.
struct IntegerLatticePenalty final : ScalarPenalty::Model {
  int k;
  explicit IntegerLatticePenalty(int kk) : k(kk) {}
  double eval(double s) const override {
    if (s < 0.0 || s > static_cast<double>(k)) return infinity;
    return (s - std::floor(s)) * (std::ceil(s) - s);
  }
  double rho() const override { return 2.0; }
  double prox(double z, double alpha) const override {
    const double top = static_cast<double>(k);
    const double s = std::clamp(z, 0.0, top);
    const double lo = std::floor(s);
    if (s - lo <= alpha) return lo;
    const double hi = lo + 1.0;
    if (s >= hi - alpha) return hi;
    return lo + (s - lo - alpha) / (1.0 - 2.0 * alpha);
  }
  std::vector<double> breakpoints(double alpha) const override {
    std::vector<double> out;
    for (int n = 0; n <= k; ++n) {
      out.push_back(n);
      if (n > 0) out.push_back(n - alpha);
      if (n < k) out.push_back(n + alpha);
    }
    return out;
  }
  double domain_lo() const override { return 0.0; }
  double domain_hi() const override { return k; }
  std::string name() const override { return "integer-lattice"; }
};

struct ScaledPenalty final : ScalarPenalty::Model {
  ScalarPenalty inner;
  double t;
  ScaledPenalty(ScalarPenalty p, double tt) : inner(std::move(p)), t(tt) {}
  double eval(double s) const override {
    const double v = inner.eval(s);
    return std::isinf(v) ? v : t * v;
  }
  double rho() const override { return t * inner.rho(); }
  // prox of t P at step alpha is prox of P at step t alpha.
  double prox(double z, double alpha) const override { return inner.prox(z, t * alpha); }
  std::vector<double> breakpoints(double alpha) const override {
    return inner.breakpoints(t * alpha);
  }
  double domain_lo() const override { return inner.domain_lo(); }
  double domain_hi() const override { return inner.domain_hi(); }
  std::string name() const override { return "scaled(" + inner.name() + ")"; }
};

} // namespace detail

inline ScalarPenalty make_zero() {
  return ScalarPenalty(std::make_shared<detail::ZeroPenalty>());
}

inline ScalarPenalty make_l1(double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("make_l1: weight must be >= 0");
  return ScalarPenalty(std::make_shared<detail::L1Penalty>(lambda));
}

/// Firm (minimax-concave) penalty with threshold tau and weak-convexity rho.
inline ScalarPenalty make_firm(double tau, double rho) {
  if (!(tau > 0.0)) throw InvalidArgument("make_firm: tau must be > 0");
  if (!(rho > 0.0)) throw InvalidArgument("make_firm: rho must be > 0");
  return ScalarPenalty(std::make_shared<detail::FirmPenalty>(tau, rho));
}

/// Penalty favouring integers in [0, K]; infinite outside that range.
inline ScalarPenalty make_integer_lattice(int k) {
  if (k < 1) throw InvalidArgument("make_integer_lattice: K must be >= 1");
  return ScalarPenalty(std::make_shared<detail::IntegerLatticePenalty>(k));
}

inline ScalarPenalty scale_penalty(const ScalarPenalty& p, double t) {
  if (!(t > 0.0)) throw InvalidArgument("scale_penalty: scale must be > 0");
  return ScalarPenalty(std::make_shared<detail::ScaledPenalty>(p, t));
}

/// A scalar penalty applied to each of n components and summed.
class Penalty {
public:
  Penalty(ScalarPenalty scalar, Index n) : scalar_(std::move(scalar)), n_(n) {
    if (n < 1) throw InvalidArgument("separable penalty: dimension must be >= 1");
  }

  Index dimension() const noexcept { return n_; }
  double rho() const { return scalar_.rho(); }
  const ScalarPenalty& scalar() const noexcept { return scalar_; }

  double eval(const Vector& x) const {
    check_dim(x);
    double sum = 0.0;
    for (Index i = 0; i < n_; ++i) {
      const double v = scalar_.eval(x[i]);
      if (std::isinf(v)) return infinity;
      sum += v;
    }
    return sum;
  }

  Vector prox(const Vector& z, double alpha) const {
    check_dim(z);
    scalar_.check_step(alpha);
    Vector out(n_);
    for (Index i = 0; i < n_; ++i) out[i] = scalar_.prox(z[i], alpha);
    return out;
  }

  void check_step(double alpha) const { scalar_.check_step(alpha); }

private:
  void check_dim(const Vector& x) const {
    if (x.size() != n_)
      throw ShapeError("penalty: expected a point of dimension " + std::to_string(n_) +
                       ", got " + std::to_string(x.size()));
  }

  ScalarPenalty scalar_;
  Index n_;
};

inline Penalty separable_lift(const ScalarPenalty& p, Index n) { return Penalty(p, n); }

inline double eval_penalty(const ScalarPenalty& p, double s) { return p.eval(s); }
inline double eval_penalty(const Penalty& p, const Vector& x) { return p.eval(x); }

struct ScalarProxResult {
  double minimizer = 0.0;
  double objective_value = 0.0;
};

/// Bracket [lo, hi] that contains the threshold minimizer for input z:
/// spans z, the origin and every breakpoint, padded by one on each side.
inline std::pair<double, double> default_oracle_bracket(const ScalarPenalty& p, double z,
                                                        double alpha) {
  double lo = std::min(z, 0.0), hi = std::max(z, 0.0);
  for (double b : p.breakpoints(alpha)) {
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  return {lo - 1.0, hi + 1.0};
}

/// Brute-force minimizer of (1/2 alpha)(x - z)^2 + P(x) over the grid
/// lo, lo + step, ..., hi, augmented with each breakpoint inside [lo, hi].
/// Independent of the closed-form thresholds; used to check them.
inline ScalarProxResult prox_oracle_grid(const ScalarPenalty& p, double z, double alpha,
                                         double lo, double hi, double step) {
  if (!(alpha > 0.0)) throw InvalidArgument("prox_oracle_grid: step size alpha must be > 0");
  if (alpha * p.rho() >= 1.0) throw StepTooLarge(alpha, p.rho());
  if (!(lo < hi) || !(step > 0.0)) throw InvalidArgument("prox_oracle_grid: empty grid");

  ScalarProxResult best{0.0, infinity};
  auto consider = [&](double x) {
    const double v = p.prox_objective(x, z, alpha);
    if (v < best.objective_value) best = {x, v};
  };
  const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step));
  for (std::int64_t i = 0; i <= count; ++i) consider(lo + static_cast<double>(i) * step);
  consider(hi);
  for (double b : p.breakpoints(alpha)) {
    if (b < lo || b > hi) continue;
    consider(b);
    const double i = std::round((b - lo) / step);
    consider(lo + i * step);
  }
  if (std::isinf(best.objective_value))
    throw InvalidArgument("prox_oracle_grid: objective infinite on the whole grid");
  return best;
}

inline ScalarProxResult prox_oracle_grid(const ScalarPenalty& p, double z, double alpha,
                                         double step = 1e-4) {
  const auto [lo, hi] = default_oracle_bracket(p, z, alpha);
  return prox_oracle_grid(p, z, alpha, lo, hi, step);
}

struct ConvexityCertificate {
  bool pass = true;
  double worst_violation = 0.0;
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0;
};

/// Samples (a, b, theta) in the effective domain (clipped to [-radius, radius])
/// and checks midpoint-style convexity of P + (rho_claim/2) s^2 with slack 1e-9.
inline ConvexityCertificate weak_convexity_certificate(const ScalarPenalty& p, double rho_claim,
                                                       int samples, std::uint64_t seed,
                                                       double radius = 10.0) {
  if (samples < 1) throw InvalidArgument("weak_convexity_certificate: samples must be >= 1");
  const double lo = std::max(p.domain_lo(), -radius);
  const double hi = std::min(p.domain_hi(), radius);
  auto h = [&](double s) { return p.eval(s) + 0.5 * rho_claim * s * s; };
  SplitMix64 rng(seed);
  ConvexityCertificate cert;
  for (int i = 0; i < samples; ++i) {
    const double a = rng.uniform(lo, hi);
    const double b = rng.uniform(lo, hi);
    const double theta = rng.uniform();
    const double gap = h(theta * a + (1.0 - theta) * b) - (theta * h(a) + (1.0 - theta) * h(b));
    if (gap > cert.worst_violation) cert = {cert.pass, gap, a, b, theta};
  }
  cert.pass = cert.worst_violation <= 1e-9;
  return cert;
}

/// P(x) - P(xh) + (rho/2)(x - xh)^2 + (1/alpha)(xh - z)(x - xh) with
/// xh = prox(z, alpha). Non-negative for rho-weakly convex P.
inline double subgradient_inequality_check(const ScalarPenalty& p, double z, double alpha,
                                           double x) {
  const double xh = p.prox(z, alpha);
  const double px = p.eval(x);
  if (std::isinf(px)) return infinity;
  return px - p.eval(xh) + 0.5 * p.rho() * (x - xh) * (x - xh) + (xh - z) * (x - xh) / alpha;
}

} // namespace proxista
