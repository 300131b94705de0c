/**
 * @file char_roots.hpp
 * @brief Characteristic roots of the Stokes-Coriolis operator per horizontal frequency.
 *
 * For a frequency xi the decaying exponents solve -l^2 - (l^2 - |xi|^2)^3 = 0.
 * With Y = l^2 - |xi|^2 this is the cubic Y^3 + Y + |xi|^2 = 0 and l^2 = -Y^3.
 */
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace ekbl {

template <typename Real>
using Vec3c = Eigen::Matrix<std::complex<Real>, 3, 1>;

template <typename Real>
struct ResolventRoots {
  Real real_root{0};
  std::complex<Real> upper;  // Im > 0
  std::complex<Real> lower;  // conj(upper)
};

/// Roots lambda (real, Im>0, Im<0), slopes omega_i = -lambda_i / Y_i, and Y_i.
template <typename Real>
struct CharRoots {
  Real xi_sq{0};
  Vec3c<Real> lambda = Vec3c<Real>::Zero();
  Vec3c<Real> omega = Vec3c<Real>::Zero();
  Vec3c<Real> resolvent = Vec3c<Real>::Zero();

  Real xi_norm() const { return std::sqrt(xi_sq); }
};

enum class Regime { low, high };

/// Roots of Y^3 + Y + s = 0, s >= 0.  The discriminant -4 - 27 s^2 is always
/// negative, so there is one real root; it is taken from the hyperbolic form of
/// Cardano's formula and polished by Newton.
template <typename Real>
ResolventRoots<Real> solve_cubic_resolvent(Real xi_sq) {
  using std::asinh;
  using std::sinh;
  using std::sqrt;
  if (!std::isfinite(static_cast<double>(xi_sq)) || xi_sq < Real(0))
    throw std::domain_error("solve_cubic_resolvent: xi_sq must be finite and >= 0");
  ResolventRoots<Real> r;
  if (xi_sq == Real(0)) {
    r.real_root = Real(0);
    r.upper = {Real(0), Real(1)};
    r.lower = {Real(0), Real(-1)};
    return r;
  }
  const Real sqrt3 = sqrt(Real(3));
  Real y = -Real(2) / sqrt3 * sinh(asinh(Real(3) * sqrt3 * xi_sq / Real(2)) / Real(3));
  for (int it = 0; it < 2; ++it) {
    const Real f = (y * y + Real(1)) * y + xi_sq;
    const Real df = Real(3) * y * y + Real(1);
    y -= f / df;
  }
  r.real_root = y;
  // Y^3 + Y + s = (Y - y)(Y^2 + y Y + y^2 + 1)
  const Real im = sqrt(Real(3) * y * y + Real(4)) / Real(2);
  r.upper = {-y / Real(2), im};
  r.lower = std::conj(r.upper);
  return r;
}

/// Truncated expansions: low regime l = (|xi|^3, e^{i pi/4}, e^{-i pi/4});
/// high regime l_i = |xi| - c_i |xi|^{-1/3}, c = (1/2, j^2/2, j/2), j = e^{2 i pi/3}.
template <typename Real>
CharRoots<Real> asymptotic_roots(Real xi1, Real xi2, Regime regime) {
  using C = std::complex<Real>;
  const Real pi = std::numbers::pi_v<Real>;
  CharRoots<Real> out;
  out.xi_sq = xi1 * xi1 + xi2 * xi2;
  const Real k = std::sqrt(out.xi_sq);
  if (regime == Regime::low) {
    const C e = std::polar(Real(1), pi / Real(4));
    out.lambda << C(k * k * k), e, std::conj(e);
    out.resolvent << C(-out.xi_sq), C(0, 1), C(0, -1);
    out.omega(0) = C(k);
    out.omega(1) = -out.lambda(1) / out.resolvent(1);
    out.omega(2) = std::conj(out.omega(1));
    return out;
  }
  if (k == Real(0)) throw std::domain_error("asymptotic_roots: high regime needs xi != 0");
  const C j = std::polar(Real(1), Real(2) * pi / Real(3));
  const Real tail = std::pow(k, Real(-1) / Real(3));
  out.lambda(0) = C(k - tail / Real(2));
  out.lambda(1) = C(k) - j * j / Real(2) * tail;
  out.lambda(2) = std::conj(out.lambda(1));
  for (int i = 0; i < 3; ++i) {
    out.resolvent(i) = out.lambda(i) * out.lambda(i) - out.xi_sq;
    out.omega(i) = -out.lambda(i) / out.resolvent(i);
  }
  return out;
}

template <typename Real>
CharRoots<Real> char_roots(Real xi1, Real xi2) {
  using C = std::complex<Real>;
  if (!std::isfinite(static_cast<double>(xi1)) || !std::isfinite(static_cast<double>(xi2)))
    throw std::domain_error("char_roots: non-finite frequency");
  const Real xi_sq = xi1 * xi1 + xi2 * xi2;
  if (std::sqrt(xi_sq) < Real(1e-8)) return asymptotic_roots(xi1, xi2, Regime::low);

  const ResolventRoots<Real> y = solve_cubic_resolvent(xi_sq);
  CharRoots<Real> out;
  out.xi_sq = xi_sq;
  out.resolvent << C(y.real_root), y.upper, y.lower;

  const Real yr = y.real_root;
  out.lambda(0) = C(std::sqrt(-yr * yr * yr));
  C l2 = std::sqrt(-y.upper * y.upper * y.upper);
  if (l2.real() < Real(0)) l2 = -l2;
  if (!(l2.imag() > Real(0))) throw std::logic_error("char_roots: Im lambda_2 must be positive");
  out.lambda(1) = l2;
  out.lambda(2) = std::conj(l2);

  out.omega(0) = -out.lambda(0) / out.resolvent(0);
  out.omega(1) = -out.lambda(1) / out.resolvent(1);
  out.omega(2) = std::conj(out.omega(1));
  return out;
}

/// Residual of -l^2 - (l^2 - s)^3 for each root.
template <typename Real>
Eigen::Matrix<Real, 3, 1> sextic_residual(const CharRoots<Real>& r) {
  Eigen::Matrix<Real, 3, 1> res;
  for (int i = 0; i < 3; ++i) {
    const auto l2 = r.lambda(i) * r.lambda(i);
    const auto y = l2 - r.xi_sq;
    res(i) = std::abs(-l2 - y * y * y);
  }
  return res;
}

}  // namespace ekbl
