#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "proxista/error.hpp"
#include "proxista/rng.hpp"

namespace proxista {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LinearMapKind { dense, convolution, block_synthesis, composition };

inline const char* to_string(LinearMapKind kind) {
  switch (kind) {
  case LinearMapKind::dense: return "dense";
  case LinearMapKind::convolution: return "convolution";
  case LinearMapKind::block_synthesis: return "block-synthesis";
  case LinearMapKind::composition: return "composition";
  }
  return "unknown";
}

/// Immutable linear operator R^in_dim -> R^out_dim with its adjoint.
/// Copies share the underlying representation; apply/adjoint are pure.
class LinearMap {
public:
  struct Model {
    virtual ~Model() = default;
    virtual void apply(const Vector& x, Vector& out) const = 0;
    virtual void adjoint(const Vector& r, Vector& out) const = 0;
  };

  LinearMap(Index in_dim, Index out_dim, LinearMapKind kind,
            std::shared_ptr<const Model> model)
      : in_dim_(in_dim), out_dim_(out_dim), kind_(kind),
        model_(std::move(model)) {}

  Index in_dim() const noexcept { return in_dim_; }
  Index out_dim() const noexcept { return out_dim_; }
  LinearMapKind kind() const noexcept { return kind_; }

  Vector apply(const Vector& x) const {
    if (x.size() != in_dim_)
      throw ShapeError("apply: expected input of length " +
                       std::to_string(in_dim_) + ", got " +
                       std::to_string(x.size()));
    Vector out(out_dim_);
    model_->apply(x, out);
    return out;
  }

  Vector adjoint(const Vector& r) const {
    if (r.size() != out_dim_)
      throw ShapeError("adjoint: expected input of length " +
                       std::to_string(out_dim_) + ", got " +
                       std::to_string(r.size()));
    Vector out(in_dim_);
    model_->adjoint(r, out);
    return out;
  }

  /// H^T H x.
  Vector gram_apply(const Vector& x) const { return adjoint(apply(x)); }

  /// Dense matrix obtained by applying the map to the standard basis.
  Matrix to_dense() const {
    Matrix m(out_dim_, in_dim_);
    Vector e = Vector::Zero(in_dim_);
    for (Index j = 0; j < in_dim_; ++j) {
      e[j] = 1.0;
      m.col(j) = apply(e);
      e[j] = 0.0;
    }
    return m;
  }

  /// Dense H^T H, assembled column by column through the operator.
  Matrix gram() const {
    Matrix g(in_dim_, in_dim_);
    Vector e = Vector::Zero(in_dim_);
    for (Index j = 0; j < in_dim_; ++j) {
      e[j] = 1.0;
      g.col(j) = gram_apply(e);
      e[j] = 0.0;
    }
    // Symmetrize away rounding asymmetry before eigendecomposition.
    return 0.5 * (g + g.transpose());
  }

private:
  Index in_dim_;
  Index out_dim_;
  LinearMapKind kind_;
  std::shared_ptr<const Model> model_;
};

namespace detail {

struct DenseModel final : LinearMap::Model {
  Matrix a;
  explicit DenseModel(Matrix m) : a(std::move(m)) {}
  void apply(const Vector& x, Vector& out) const override { out.noalias() = a * x; }
  void adjoint(const Vector& r, Vector& out) const override {
    out.noalias() = a.transpose() * r;
  }
};

// Full linear convolution: out(i) = sum_j h(j) x(i - j), length n + L - 1.
struct ConvolutionModel final : LinearMap::Model {
  Vector h;
  explicit ConvolutionModel(Vector filter) : h(std::move(filter)) {}
  void apply(const Vector& x, Vector& out) const override {
    out.setZero();
    for (Index i = 0; i < x.size(); ++i)
      for (Index j = 0; j < h.size(); ++j) out[i + j] += h[j] * x[i];
  }
  // Correlation with the filter.
  void adjoint(const Vector& r, Vector& out) const override {
    for (Index i = 0; i < out.size(); ++i) {
      double acc = 0.0;
      for (Index j = 0; j < h.size(); ++j) acc += h[j] * r[i + j];
      out[i] = acc;
    }
  }
};

struct BlockSynthesisModel final : LinearMap::Model {
  Index block;
  explicit BlockSynthesisModel(Index b) : block(b) {}
  void apply(const Vector& c, Vector& out) const override {
    for (Index k = 0; k < c.size(); ++k)
      out.segment(k * block, block).setConstant(c[k]);
  }
  void adjoint(const Vector& r, Vector& out) const override {
    for (Index k = 0; k < out.size(); ++k) out[k] = r.segment(k * block, block).sum();
  }
};

struct CompositionModel final : LinearMap::Model {
  LinearMap outer;
  LinearMap inner;
  CompositionModel(LinearMap o, LinearMap i) : outer(std::move(o)), inner(std::move(i)) {}
  void apply(const Vector& x, Vector& out) const override {
    out = outer.apply(inner.apply(x));
  }
  void adjoint(const Vector& r, Vector& out) const override {
    out = inner.adjoint(outer.adjoint(r));
  }
};

} // namespace detail

/// Dense map from row-major entries.
inline LinearMap make_dense(const std::vector<double>& entries, Index rows, Index cols) {
  if (rows < 1 || cols < 1)
    throw ShapeError("make_dense: rows and cols must be positive");
  if (static_cast<Index>(entries.size()) != rows * cols)
    throw ShapeError("make_dense: expected " + std::to_string(rows * cols) +
                     " entries for a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " matrix, got " +
                     std::to_string(entries.size()));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = entries[static_cast<std::size_t>(i * cols + j)];
  return LinearMap(cols, rows, LinearMapKind::dense,
                   std::make_shared<detail::DenseModel>(std::move(m)));
}

inline LinearMap make_dense(Matrix m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw ShapeError("make_dense: empty matrix");
  const Index rows = m.rows(), cols = m.cols();
  return LinearMap(cols, rows, LinearMapKind::dense,
                   std::make_shared<detail::DenseModel>(std::move(m)));
}

inline LinearMap make_identity(Index n) { return make_dense(Matrix::Identity(n, n)); }

inline LinearMap make_diagonal(const Vector& d) {
  return make_dense(Matrix(d.asDiagonal()));
}

/// Full linear convolution of a length-n signal with `filter`
/// (output length n + filter.size() - 1).
inline LinearMap make_convolution(const std::vector<double>& filter, Index signal_len) {
  if (filter.empty()) throw InvalidArgument("make_convolution: empty filter");
  if (signal_len < 1) throw InvalidArgument("make_convolution: signal length must be >= 1");
  Vector h = Eigen::Map<const Vector>(filter.data(), static_cast<Index>(filter.size()));
  const Index out = signal_len + h.size() - 1;
  return LinearMap(signal_len, out, LinearMapKind::convolution,
                   std::make_shared<detail::ConvolutionModel>(std::move(h)));
}

/// Replicates each of `num_coeffs` coefficients over a block of `block_len`
/// consecutive samples.
inline LinearMap make_block_synthesis(Index block_len, Index num_coeffs) {
  if (block_len < 1) throw InvalidArgument("make_block_synthesis: block length must be >= 1");
  if (num_coeffs < 1) throw InvalidArgument("make_block_synthesis: coefficient count must be >= 1");
  return LinearMap(num_coeffs, block_len * num_coeffs, LinearMapKind::block_synthesis,
                   std::make_shared<detail::BlockSynthesisModel>(block_len));
}

/// outer ∘ inner.
inline LinearMap compose(const LinearMap& outer, const LinearMap& inner) {
  if (inner.out_dim() != outer.in_dim())
    throw ShapeError("compose: inner output length " + std::to_string(inner.out_dim()) +
                     " does not match outer input length " +
                     std::to_string(outer.in_dim()));
  return LinearMap(inner.in_dim(), outer.out_dim(), LinearMapKind::composition,
                   std::make_shared<detail::CompositionModel>(outer, inner));
}

enum class SpectralMethod { exact_eig, power_iteration };

inline const char* to_string(SpectralMethod m) {
  return m == SpectralMethod::exact_eig ? "exact-eig" : "power-iteration";
}

/// Extreme eigenvalues of H^T H.
struct SpectralBounds {
  double sigma_m = 0.0;
  double sigma_M = 0.0;
  SpectralMethod method = SpectralMethod::exact_eig;
  double tolerance = 0.0;
};

namespace detail {

// Dominant eigenvalue of a symmetric positive semidefinite operator by power
// iteration with Rayleigh quotients. Stops once the relative change drops
// below tol; returns {estimate, converged}.
template <typename Op>
std::pair<double, bool> dominant_eigenvalue(Op&& op, Index n, double tol,
                                            int max_iters, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector v = rng.uniform_vector(n, -1.0, 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = op(v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return {0.0, true};
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= tol * std::max(std::abs(next), 1e-300)) {
      return {next, true};
    }
    lambda = next;
  }
  return {lambda, false};
}

} // namespace detail

/// Least and greatest eigenvalues of H^T H.
///
/// exact_eig assembles the Gram matrix through the operator and runs a
/// symmetric eigensolver; it is authoritative at desk scale. power_iteration
/// estimates sigma_M directly and sigma_m from the dominant eigenvalue of
/// sigma_M I - H^T H, each until the relative change falls below `tol`.
/// A negative sigma_m from rounding is reported as 0.
inline SpectralBounds gram_spectral_bounds(const LinearMap& map, double tol = 1e-12,
                                           SpectralMethod method = SpectralMethod::exact_eig,
                                           int max_iters = 200000,
                                           std::uint64_t seed = 0x5eedULL) {
  SpectralBounds out;
  out.method = method;
  out.tolerance = tol;
  if (method == SpectralMethod::exact_eig) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(map.gram(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
      throw ConvergenceError("gram_spectral_bounds: eigensolver failed", 0.0, 0.0);
    out.sigma_m = std::max(eig.eigenvalues().minCoeff(), 0.0);
    out.sigma_M = eig.eigenvalues().maxCoeff();
    return out;
  }

  const Index n = map.in_dim();
  auto [top, top_ok] = detail::dominant_eigenvalue(
      [&](const Vector& v) { return map.gram_apply(v); }, n, tol, max_iters, seed);
  if (!top_ok)
    throw ConvergenceError("gram_spectral_bounds: power iteration for sigma_M did not converge",
                           0.0, top);
  auto [gap, gap_ok] = detail::dominant_eigenvalue(
      [&](const Vector& v) -> Vector { return top * v - map.gram_apply(v); }, n, tol,
      max_iters, seed + 1);
  const double low = std::max(top - gap, 0.0);
  if (!gap_ok)
    throw ConvergenceError(
        "gram_spectral_bounds: shifted power iteration for sigma_m did not converge", low, top);
  out.sigma_m = low;
  out.sigma_M = top;
  return out;
}

/// max over random (x, r) of |<Hx, r> - <x, H^T r>| / (1 + |<Hx, r>|).
inline double adjoint_consistency_check(const LinearMap& map, int trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("adjoint_consistency_check: trials must be >= 1");
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vector x = rng.uniform_vector(map.in_dim(), -1.0, 1.0);
    const Vector r = rng.uniform_vector(map.out_dim(), -1.0, 1.0);
    const double lhs = map.apply(x).dot(r);
    const double rhs = x.dot(map.adjoint(r));
    worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
  }
  return worst;
}

} // namespace proxista
