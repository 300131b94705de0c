/**
 * @file vertical_quadrature.hpp
 * @brief Exact integration of interpolated samples against e^{-l |z - z'|}.
 *
 * For one exponent l and sampled s(z') this produces, at every node z_j,
 *   below(z_j) = int_0^{z_j} e^{-l (z_j - z')} s(z') dz'
 *   above(z_j) = int_{z_j}^{Z} e^{-l (z' - z_j)} s(z') dz'
 * with s replaced by its piecewise Lagrange interpolant.  Both are built by
 * one-pass recursions in which every exponential factor is decaying.
 */
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace ekbl {

enum class Interp { linear = 1, cubic = 3 };

class VerticalQuadrature {
 public:
  VerticalQuadrature(const Eigen::VectorXd& z, Interp order = Interp::cubic);

  int n_nodes() const { return static_cast<int>(z_.size()); }
  int width() const { return width_; }
  Interp order() const { return order_; }

  /// Columns of `samples` are independent channels on the nodes.
  void sweep(std::complex<double> lambda, const Eigen::MatrixXcd& samples, Eigen::MatrixXcd& below,
             Eigen::MatrixXcd& above) const;

  /// d^order s / dz^order at node j from the interpolant of the interval starting at j
  /// (the last node uses the final interval).
  std::complex<double> node_derivative(const Eigen::MatrixXcd& samples, int channel, int j, int order) const;
  template <typename Vec>
  std::complex<double> node_derivative_vec(const Vec& samples, int j, int order) const {
    if (order == 0) return samples(j);
    const int first = deriv_first_[order - 1][j];
    const Eigen::Vector4d& w = deriv_w_[order - 1][j];
    std::complex<double> acc = 0;
    for (int n = 0; n < width_; ++n) acc += w(n) * samples(first + n);
    return acc;
  }
  /// All node derivatives of one order for every column of `samples`.
  Eigen::MatrixXcd derivative_matrix(const Eigen::MatrixXcd& samples, int order) const;

  /// Interpolant value at arbitrary z in [0, Z].
  std::complex<double> interpolate(const Eigen::VectorXcd& samples, double zq) const;

  /// I_m(mu) = int_0^1 t^m e^{-mu t} dt, m = 0..3.
  static Eigen::Vector4cd moments(std::complex<double> mu);

 private:
  Eigen::Vector4d derivative_weights(int j, int order, int& first) const;

  Eigen::VectorXd z_;
  Eigen::VectorXd h_;
  Interp order_;
  int width_;
  std::vector<int> first_;
  std::vector<Eigen::Matrix4d> coef_t_;  // (stencil node, power of t), t = (z - z_j)/h_j
  std::vector<Eigen::Matrix4d> coef_s_;  // same in s = 1 - t
  std::vector<int> deriv_first_[3];
  std::vector<Eigen::Vector4d> deriv_w_[3];
};

}  // namespace ekbl
