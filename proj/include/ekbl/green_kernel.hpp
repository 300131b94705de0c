/**
 * @file green_kernel.hpp
 * @brief Per-mode fundamental solution of the Orr-Sommerfeld system in z.
 *
 * Unknowns are V = (v3, w) with w the vertical vorticity.  For z > 0 the two
 * columns of G are sums of e^{-l_i z} times V_i^- = (1, -W_i); for z < 0 they
 * mirror through V_i^+ = (1, W_i).
 */
#pragma once

#include "ekbl/char_roots.hpp"

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace ekbl {

template <typename Real>
using Mat3c = Eigen::Matrix<std::complex<Real>, 3, 3>;
template <typename Real>
using Mat2c = Eigen::Matrix<std::complex<Real>, 2, 2>;

template <typename Real>
struct InteriorCoeffs {
  Vec3c<Real> A = Vec3c<Real>::Zero();
  Vec3c<Real> B = Vec3c<Real>::Zero();
  std::complex<Real> D1{0};
  std::complex<Real> D2{0};
};

template <typename Real>
struct BoundaryCoeffs {
  Vec3c<Real> C = Vec3c<Real>::Zero();
  std::complex<Real> D3{0};
};

enum class Side { above, below, average };

template <typename Real>
struct GreenEval {
  Mat2c<Real> entries = Mat2c<Real>::Zero();
  int deriv_order = 0;
  Real z = 0;
  Eigen::Matrix<bool, 2, 2> jumps = Eigen::Matrix<bool, 2, 2>::Constant(false);
};

namespace detail {

/// Column-equilibrated partial-pivoting solve.  Column scaling keeps the
/// B-system usable as |xi| -> 0, where its first column shrinks like |xi|.
template <typename Real>
Vec3c<Real> scaled_solve(const Mat3c<Real>& m, const Vec3c<Real>& rhs) {
  Eigen::Matrix<Real, 3, 1> scale;
  for (int c = 0; c < 3; ++c) {
    const Real s = m.col(c).cwiseAbs().maxCoeff();
    if (!(s > Real(0))) throw std::logic_error("green_kernel: singular coefficient system");
    scale(c) = Real(1) / s;
  }
  const Mat3c<Real> ms = m * scale.template cast<std::complex<Real>>().asDiagonal();
  Eigen::PartialPivLU<Mat3c<Real>> lu(ms);
  Vec3c<Real> y = lu.solve(rhs);
  return y.cwiseProduct(scale.template cast<std::complex<Real>>());
}

}  // namespace detail

template <typename Real>
Mat3c<Real> interior_matrix_a(const CharRoots<Real>& r) {
  Mat3c<Real> m;
  for (int i = 0; i < 3; ++i) {
    m(0, i) = 1;
    m(1, i) = r.lambda(i) * r.lambda(i);
    m(2, i) = r.lambda(i) * r.omega(i);
  }
  return m;
}

template <typename Real>
Mat3c<Real> interior_matrix_b(const CharRoots<Real>& r) {
  Mat3c<Real> m;
  for (int i = 0; i < 3; ++i) {
    m(0, i) = r.omega(i);
    m(1, i) = r.lambda(i);
    m(2, i) = r.lambda(i) * r.lambda(i) * r.lambda(i);
  }
  return m;
}

/// A solves sum A = 0, sum l^2 A = 0, sum l W A = 1/2;
/// B solves sum W B = 0, sum l B = 0, sum l^3 B = -1/2.
template <typename Real>
InteriorCoeffs<Real> interior_coeffs(const CharRoots<Real>& r) {
  using C = std::complex<Real>;
  if (!(r.xi_sq > Real(0))) throw std::domain_error("interior_coeffs: xi = 0 is handled by the zero-mode solver");
  InteriorCoeffs<Real> out;
  const Mat3c<Real> ma = interior_matrix_a(r);
  const Mat3c<Real> mb = interior_matrix_b(r);
  out.A = detail::scaled_solve(ma, Vec3c<Real>(C(0), C(0), C(Real(0.5))));
  out.B = detail::scaled_solve(mb, Vec3c<Real>(C(0), C(0), C(Real(-0.5))));
  // sign conventions: D1 = |xi|^2 D with D = det(W-row / ones / l^2 system); D2 = -l1 l2 l3 D
  out.D1 = -ma.determinant();
  out.D2 = mb.determinant();
  return out;
}

/// C solves the rows (1,1,1), (l_i), (W_i) against (u3(0), -dz u3(0), -w(0)).
template <typename Real>
BoundaryCoeffs<Real> boundary_coeffs(const CharRoots<Real>& r, const Vec3c<Real>& rhs) {
  Mat3c<Real> m;
  for (int i = 0; i < 3; ++i) {
    m(0, i) = 1;
    m(1, i) = r.lambda(i);
    m(2, i) = r.omega(i);
  }
  BoundaryCoeffs<Real> out;
  const auto& l = r.lambda;
  const auto& w = r.omega;
  out.D3 = (l(1) - l(0)) * (w(2) - w(0)) - (l(2) - l(0)) * (w(1) - w(0));
  if (rhs.isZero(0)) return out;
  out.C = detail::scaled_solve(m, rhs);
  return out;
}

/// Per-root 2x2 amplitude blocks: G(z) = sum_i e^{-l_i|z|} * (z>0 ? plus[i] : minus[i]).
template <typename Real>
struct GreenBlocks {
  std::array<Mat2c<Real>, 3> plus;
  std::array<Mat2c<Real>, 3> minus;
};

template <typename Real>
GreenBlocks<Real> green_blocks(const CharRoots<Real>& r, const InteriorCoeffs<Real>& c) {
  GreenBlocks<Real> g;
  for (int i = 0; i < 3; ++i) {
    const auto a = c.A(i), b = c.B(i), w = r.omega(i);
    g.plus[i] << a, b, -a * w, -b * w;
    g.minus[i] << -a, b, -a * w, b * w;
  }
  return g;
}

/// Jump [d^n G] at z = 0 (value above minus value below).
template <typename Real>
Mat2c<Real> green_jump(const CharRoots<Real>& r, const GreenBlocks<Real>& g, int n) {
  Mat2c<Real> j = Mat2c<Real>::Zero();
  for (int i = 0; i < 3; ++i) {
    const auto l = r.lambda(i);
    j += std::pow(-l, n) * g.plus[i] - std::pow(l, n) * g.minus[i];
  }
  return j;
}

template <typename Real>
GreenEval<Real> green_eval(const CharRoots<Real>& r, const InteriorCoeffs<Real>& c, Real z, int deriv_order,
                           Side side = Side::average) {
  if (deriv_order < 0 || deriv_order > 3) throw std::invalid_argument("green_eval: deriv_order must be in 0..3");
  const GreenBlocks<Real> g = green_blocks(r, c);
  auto above = [&](Real zz) {
    Mat2c<Real> m = Mat2c<Real>::Zero();
    for (int i = 0; i < 3; ++i) m += std::pow(-r.lambda(i), deriv_order) * std::exp(-r.lambda(i) * zz) * g.plus[i];
    return m;
  };
  auto below = [&](Real zz) {
    Mat2c<Real> m = Mat2c<Real>::Zero();
    for (int i = 0; i < 3; ++i) m += std::pow(r.lambda(i), deriv_order) * std::exp(r.lambda(i) * zz) * g.minus[i];
    return m;
  };
  GreenEval<Real> out;
  out.deriv_order = deriv_order;
  out.z = z;
  if (z > 0 || (z == 0 && side == Side::above)) {
    out.entries = above(z);
  } else if (z < 0 || side == Side::below) {
    out.entries = below(z);
  } else {
    const Mat2c<Real> up = above(Real(0)), dn = below(Real(0));
    out.entries = (up + dn) / Real(2);
    const Real tol = Real(1e-9) * std::max(Real(1), up.cwiseAbs().maxCoeff());
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) out.jumps(a, b) = std::abs(up(a, b) - dn(a, b)) > tol;
  }
  return out;
}

/// Amplitudes h_i with V_h(z) = sum_i h_i e^{-l_i z} V_i^- for
/// V_h = G(z)(S1(0) + dS2(0)) + dz G(z) S2(0), z > 0.
template <typename Real>
Vec3c<Real> homogeneous_correction(const InteriorCoeffs<Real>& c, const CharRoots<Real>& r,
                                   const Eigen::Matrix<std::complex<Real>, 2, 1>& s1_0,
                                   const Eigen::Matrix<std::complex<Real>, 2, 1>& ds2_0,
                                   const Eigen::Matrix<std::complex<Real>, 2, 1>& s2_0) {
  Vec3c<Real> h;
  const auto a = s1_0 + ds2_0;
  for (int i = 0; i < 3; ++i) {
    const auto l = r.lambda(i);
    h(i) = c.A(i) * (a(0) - l * s2_0(0)) + c.B(i) * (a(1) - l * s2_0(1));
  }
  return h;
}

}  // namespace ekbl
