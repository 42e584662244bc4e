#pragma once

// Independent reference computations for the test suite. Nothing here calls
// into the library's algorithms; only its Vector/Matrix aliases are shared.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// y[i] = sum_j h[j] x[i - j], full length.
inline Vector convolve(const std::vector<double>& h, const Vector& x) {
  const auto n = static_cast<long>(x.size()), m = static_cast<long>(h.size());
  Vector y = Vector::Zero(n + m - 1);
  for (long i = 0; i < n + m - 1; ++i)
    for (long j = 0; j < m; ++j)
      if (i - j >= 0 && i - j < n) y[i] += h[static_cast<std::size_t>(j)] * x[i - j];
  return y;
}

/// T(i, j) = h[i - j]: the full-convolution matrix written out entry by entry.
inline Matrix toeplitz(const std::vector<double>& h, long n) {
  const auto m = static_cast<long>(h.size());
  Matrix t = Matrix::Zero(n + m - 1, n);
  for (long i = 0; i < n + m - 1; ++i)
    for (long j = 0; j < n; ++j)
      if (i - j >= 0 && i - j < m) t(i, j) = h[static_cast<std::size_t>(i - j)];
  return t;
}

/// G(i, k) = 1 when sample i belongs to block k.
inline Matrix block_matrix(long block, long coeffs) {
  Matrix g = Matrix::Zero(block * coeffs, coeffs);
  for (long k = 0; k < coeffs; ++k)
    for (long b = 0; b < block; ++b) g(block * k + b, k) = 1.0;
  return g;
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns sorted eigenvalues.
inline std::vector<double> jacobi_eigenvalues(Matrix a, int sweeps = 100) {
  const long n = a.rows();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
        for (long k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (long k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

struct Min1D {
  double x;
  double value;
};

/// Brute-force minimizer of phi over [lo, hi]: dense grid of `n` points plus
/// the caller's candidate points, then golden-section polish around the best.
inline Min1D minimize_1d(const std::function<double(double)>& phi, double lo, double hi,
                         const std::vector<double>& candidates = {}, int n = 200001) {
  Min1D best{lo, std::numeric_limits<double>::infinity()};
  auto take = [&](double x) {
    if (x < lo || x > hi) return;
    const double v = phi(x);
    if (v < best.value) best = {x, v};
  };
  for (int i = 0; i < n; ++i) take(lo + (hi - lo) * i / (n - 1));
  for (double c : candidates) take(c);
  const double h = (hi - lo) / (n - 1);
  double a = std::max(lo, best.x - h), b = std::min(hi, best.x + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (phi(c) <= phi(d)) b = d;
    else a = c;
  }
  take(0.5 * (a + b));
  return best;
}

/// Closed-form firm threshold written independently from its minimization
/// problem: deadzone, ramp and identity pieces.
inline double firm_threshold(double z, double alpha, double tau, double rho) {
  const double az = std::abs(z), s = z < 0 ? -1.0 : 1.0;
  if (az <= alpha * tau) return 0.0;
  if (az < tau / rho) return s * (az - alpha * tau) / (1.0 - alpha * rho);
  return z;
}

inline double firm_value(double s, double tau, double rho) {
  const double a = std::abs(s);
  return a < tau / rho ? tau * a - 0.5 * rho * s * s : 0.5 * tau * tau / rho;
}

inline double lattice_value(double s, int k) {
  if (s < 0.0 || s > k) return std::numeric_limits<double>::infinity();
  return (s - std::floor(s)) * (std::ceil(s) - s);
}

} // namespace oracle
