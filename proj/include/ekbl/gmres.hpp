/**
 * @file gmres.hpp
 * @brief Restarted right-preconditioned GMRES for matrix-free operators.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace ekbl {

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

/// Solves A x = b with A applied through `apply(v, out)` and the right
/// preconditioner through `precond(v, out)` (out ~ M^{-1} v).  x holds the
/// initial guess on entry.
template <typename Scalar, typename Apply, typename Precond>
GmresResult gmres(Apply&& apply, Precond&& precond, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, double rtol, int restart, int max_iter) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  GmresResult res;
  const Real bnorm = b.norm();
  if (bnorm == Real(0)) {
    x.setZero(b.size());
    res.converged = true;
    return res;
  }
  if (x.size() != b.size()) x.setZero(b.size());
  Vec tmp(b.size()), w(b.size());
  while (res.iterations < max_iter) {
    apply(x, tmp);
    Vec r = b - tmp;
    Real beta = r.norm();
    res.relative_residual = double(beta / bnorm);
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    const int m = std::min(restart, max_iter - res.iterations);
    std::vector<Vec> V(m + 1), Z(m);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m + 1, m);
    std::vector<Scalar> cs(m), sn(m);
    Vec g = Vec::Zero(m + 1);
    g(0) = beta;
    V[0] = r / beta;
    int k = 0;
    for (; k < m; ++k) {
      precond(V[k], Z[k]);
      apply(Z[k], w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = V[i].dot(w);
        w -= H(i, k) * V[i];
      }
      // one reorthogonalization pass keeps the basis clean at tight tolerances
      for (int i = 0; i <= k; ++i) {
        const Scalar c = V[i].dot(w);
        H(i, k) += c;
        w -= c * V[i];
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) > 0) V[k + 1] = w / H(k + 1, k);
      else V[k + 1] = Vec::Zero(b.size());
      for (int i = 0; i < k; ++i) {
        const Scalar t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -Eigen::numext::conj(sn[i]) * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const Scalar a = H(k, k), bb = H(k + 1, k);
      const Real rr = std::hypot(std::abs(a), std::abs(bb));
      if (std::abs(a) == Real(0)) {
        cs[k] = 0;
        sn[k] = 1;
      } else {
        cs[k] = std::abs(a) / rr;
        sn[k] = (a / std::abs(a)) * Eigen::numext::conj(bb) / rr;
      }
      H(k, k) = cs[k] * a + sn[k] * bb;
      H(k + 1, k) = 0;
      g(k + 1) = -Eigen::numext::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      ++res.iterations;
      res.relative_residual = double(std::abs(g(k + 1)) / bnorm);
      if (res.relative_residual <= rtol || std::abs(H(k, k)) == Real(0)) {
        ++k;
        break;
      }
    }
    // back substitution on the k x k triangle
    Vec y = Vec::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      Scalar acc = g(i);
      for (int j = i + 1; j < k; ++j) acc -= H(i, j) * y(j);
      y(i) = acc / H(i, i);
    }
    for (int i = 0; i < k; ++i) x += y(i) * Z[i];
    if (res.relative_residual <= rtol) {
      apply(x, tmp);
      res.relative_residual = double((b - tmp).norm() / bnorm);
      res.converged = res.relative_residual <= 10 * rtol;
      if (res.converged) return res;
    }
  }
  return res;
}

}  // namespace ekbl
