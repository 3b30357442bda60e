#pragma once

// Reference computations for the test suites. Each one follows a route that
// does not go through the library code it is used to check.

#include <pivotband/model.hpp>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using pivotband::Index;
using pivotband::Matrix;
using pivotband::Vector;

/// Standard normal CDF via erfc.
inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse normal CDF by bisection on erfc, to ~1e-15 absolute.
inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// (1/n) sum (y_i - c)^2
inline double second_moment_about(const Vector& y, double c) {
  return (y.array() - c).square().mean();
}

/// Poisson pivot in its closed form sqrt(n)(ybar - theta)/sqrt(m2(theta)).
inline double poisson_pivot(const Vector& y, double theta) {
  const double n = static_cast<double>(y.size());
  return std::sqrt(n) * (y.mean() - theta) / std::sqrt(second_moment_about(y, theta));
}

/// Endpoints ybar -+ z s / sqrt(n - z^2), valid for n > z^2.
inline std::pair<double, double> poisson_pivot_interval(const Vector& y, double z) {
  const double n = static_cast<double>(y.size());
  const double s = std::sqrt(second_moment_about(y, y.mean()));
  const double half = z * s / std::sqrt(n - z * z);
  return {y.mean() - half, y.mean() + half};
}

struct QuadraticRoots {
  double lower;
  double upper;
  /// Positive leading coefficient: the acceptance set is [lower, upper].
  /// Otherwise it is the complement of (lower, upper).
  bool bounded;
};

/// Roots of n (abar - theta bbar)^2 = z^2 (1/n) sum (a_i - theta b_i)^2 with
/// a = x y and b = x^2, sorted ascending. Solved in long double.
inline QuadraticRoots origin_pivot_interval(const Vector& x, const Vector& y, double z) {
  using ld = long double;
  const ld n = static_cast<ld>(x.size());
  ld abar = 0, bbar = 0, maa = 0, mab = 0, mbb = 0;
  for (Index i = 0; i < x.size(); ++i) {
    const ld a = static_cast<ld>(x[i]) * y[i];
    const ld b = static_cast<ld>(x[i]) * x[i];
    abar += a / n;
    bbar += b / n;
    maa += a * a / n;
    mab += a * b / n;
    mbb += b * b / n;
  }
  const ld z2 = static_cast<ld>(z) * z;
  const ld qa = n * bbar * bbar - z2 * mbb;
  const ld qb = -2 * (n * abar * bbar - z2 * mab);
  const ld qc = n * abar * abar - z2 * maa;
  const ld disc = std::sqrt(qb * qb - 4 * qa * qc);
  // Stable form of the quadratic formula.
  const ld q = -0.5L * (qb + (qb >= 0 ? disc : -disc));
  ld r1 = q / qa, r2 = qc / q;
  if (r1 > r2) std::swap(r1, r2);
  return {static_cast<double>(r1), static_cast<double>(r2), qa > 0};
}

/// Leverage for y = t0 + t1 x: 1/n + (x_i - xbar)^2 / Sxx.
inline Vector slr_leverage(const Vector& x) {
  const double n = static_cast<double>(x.size());
  const double xbar = x.mean();
  const double sxx = (x.array() - xbar).square().sum();
  return (1.0 / n + (x.array() - xbar).square() / sxx).matrix();
}

/// Central finite-difference gradient of f at theta.
template <typename F>
Vector gradient(F&& f, const Vector& theta, double h = 1e-5) {
  Vector g(theta.size());
  for (Index k = 0; k < theta.size(); ++k) {
    Vector up = theta, dn = theta;
    const double step = h * std::max(1.0, std::abs(theta[k]));
    up[k] += step;
    dn[k] -= step;
    g[k] = (f(up) - f(dn)) / (2.0 * step);
  }
  return g;
}

/// Central finite-difference Jacobian of a vector-valued f.
template <typename F>
Matrix jacobian(F&& f, const Vector& theta, double h = 1e-5) {
  const Vector f0 = f(theta);
  Matrix J(f0.size(), theta.size());
  for (Index k = 0; k < theta.size(); ++k) {
    Vector up = theta, dn = theta;
    const double step = h * std::max(1.0, std::abs(theta[k]));
    up[k] += step;
    dn[k] -= step;
    J.col(k) = (f(up) - f(dn)) / (2.0 * step);
  }
  return J;
}

/// Random regression dataset with a design of p columns (first column ones
/// when intercept is set) and heteroscedastic noise.
inline std::pair<Matrix, Vector> random_regression(std::mt19937_64& rng, Index n, Index p, bool intercept) {
  std::normal_distribution<double> normal;
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = (intercept && j == 0) ? 1.0 : normal(rng);
  Vector beta = Vector::LinSpaced(p, 0.5, 1.5);
  Vector y = X * beta;
  for (Index i = 0; i < n; ++i) y[i] += std::sqrt(1.0 + std::abs(X(i, p - 1))) * normal(rng);
  return {X, y};
}

inline Vector random_counts(std::mt19937_64& rng, Index n, double mean) {
  std::poisson_distribution<int> pois(mean);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = pois(rng);
  return y;
}

}  // namespace oracle
