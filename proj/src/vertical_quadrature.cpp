#include "ekbl/vertical_quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ekbl {

namespace {

Eigen::Matrix4d lagrange_monomials(const Eigen::Vector4d& nodes, int width) {
  // row n: monomial coefficients of the n-th Lagrange basis polynomial
  Eigen::MatrixXd v(width, width);
  for (int r = 0; r < width; ++r)
    for (int m = 0; m < width; ++m) v(r, m) = std::pow(nodes(r), m);
  const Eigen::MatrixXd c = v.transpose().inverse();
  Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
  out.topLeftCorner(width, width) = c;
  return out;
}

}  // namespace

VerticalQuadrature::VerticalQuadrature(const Eigen::VectorXd& z, Interp order)
    : z_(z), order_(order), width_(order == Interp::cubic ? 4 : 2) {
  const int n = static_cast<int>(z.size());
  if (n < width_) throw std::invalid_argument("VerticalQuadrature: too few nodes");
  h_ = z.tail(n - 1) - z.head(n - 1);
  first_.resize(n - 1);
  coef_t_.resize(n - 1);
  coef_s_.resize(n - 1);
  for (int j = 0; j < n - 1; ++j) {
    int f = order == Interp::cubic ? j - 1 : j;
    f = std::clamp(f, 0, n - width_);
    first_[j] = f;
    Eigen::Vector4d t = Eigen::Vector4d::Zero(), s = Eigen::Vector4d::Zero();
    for (int k = 0; k < width_; ++k) {
      t(k) = (z(f + k) - z(j)) / h_(j);
      s(k) = 1.0 - t(k);
    }
    coef_t_[j] = lagrange_monomials(t, width_);
    coef_s_[j] = lagrange_monomials(s, width_);
  }
  for (int o = 1; o <= 3; ++o) {
    deriv_first_[o - 1].resize(n);
    deriv_w_[o - 1].resize(n);
    for (int j = 0; j < n; ++j) deriv_w_[o - 1][j] = derivative_weights(j, o, deriv_first_[o - 1][j]);
  }
}

Eigen::Vector4cd VerticalQuadrature::moments(std::complex<double> mu) {
  Eigen::Vector4cd out;
  const std::complex<double> e = std::exp(-mu);
  if (std::abs(mu) < 2.0) {
    // series for I_3, then the downward recursion I_{m-1} = (mu I_m + e^{-mu}) / m, stable here
    std::complex<double> term = 1.0, acc = 0.0;
    for (int k = 0; k < 40; ++k) {
      acc += term / double(k + 4);
      term *= -mu / double(k + 1);
      if (std::abs(term) < 1e-19) break;
    }
    out(3) = acc;
    for (int m = 3; m > 0; --m) out(m - 1) = (mu * out(m) + e) / double(m);
    return out;
  }
  out(0) = (1.0 - e) / mu;
  for (int m = 1; m < 4; ++m) out(m) = (double(m) * out(m - 1) - e) / mu;
  return out;
}

void VerticalQuadrature::sweep(std::complex<double> lambda, const Eigen::MatrixXcd& samples, Eigen::MatrixXcd& below,
                               Eigen::MatrixXcd& above) const {
  const int n = n_nodes();
  const int nc = static_cast<int>(samples.cols());
  below.setZero(n, nc);
  above.setZero(n, nc);
  std::vector<Eigen::Vector4cd> wa(n - 1), wb(n - 1);
  std::vector<std::complex<double>> decay(n - 1);
  for (int j = 0; j < n - 1; ++j) {
    const std::complex<double> mu = lambda * h_(j);
    const Eigen::Vector4cd mom = moments(mu);
    decay[j] = std::exp(-mu);
    wa[j] = h_(j) * (coef_t_[j].cast<std::complex<double>>() * mom);
    wb[j] = h_(j) * (coef_s_[j].cast<std::complex<double>>() * mom);
  }
  for (int c = 0; c < nc; ++c) {
    for (int j = 0; j < n - 1; ++j) {
      std::complex<double> acc = decay[j] * below(j, c);
      for (int k = 0; k < width_; ++k) acc += wb[j](k) * samples(first_[j] + k, c);
      below(j + 1, c) = acc;
    }
    for (int j = n - 2; j >= 0; --j) {
      std::complex<double> acc = decay[j] * above(j + 1, c);
      for (int k = 0; k < width_; ++k) acc += wa[j](k) * samples(first_[j] + k, c);
      above(j, c) = acc;
    }
  }
}

Eigen::Vector4d VerticalQuadrature::derivative_weights(int j, int order, int& first) const {
  const int n = n_nodes();
  int iv = j;
  double t = 0.0;
  if (j >= n - 1) {
    iv = n - 2;
    t = 1.0;
  }
  first = first_[iv];
  Eigen::Vector4d w = Eigen::Vector4d::Zero();
  for (int k = 0; k < width_; ++k) {
    double acc = 0;
    for (int m = order; m < 4; ++m) {
      double fall = 1;
      for (int q = 0; q < order; ++q) fall *= double(m - q);
      acc += coef_t_[iv](k, m) * fall * std::pow(t, m - order);
    }
    w(k) = acc / std::pow(h_(iv), order);
  }
  return w;
}

std::complex<double> VerticalQuadrature::node_derivative(const Eigen::MatrixXcd& samples, int channel, int j,
                                                         int order) const {
  return node_derivative_vec(samples.col(channel), j, order);
}

Eigen::MatrixXcd VerticalQuadrature::derivative_matrix(const Eigen::MatrixXcd& samples, int order) const {
  if (order == 0) return samples;
  Eigen::MatrixXcd out(samples.rows(), samples.cols());
  for (Eigen::Index c = 0; c < samples.cols(); ++c)
    for (int j = 0; j < n_nodes(); ++j) out(j, c) = node_derivative_vec(samples.col(c), j, order);
  return out;
}

std::complex<double> VerticalQuadrature::interpolate(const Eigen::VectorXcd& samples, double zq) const {
  const int n = n_nodes();
  if (zq <= z_(0)) return samples(0);
  if (zq >= z_(n - 1)) return samples(n - 1);
  const int iv = static_cast<int>(std::upper_bound(z_.data(), z_.data() + n, zq) - z_.data()) - 1;
  const double t = (zq - z_(iv)) / h_(iv);
  std::complex<double> acc = 0;
  for (int k = 0; k < width_; ++k) {
    double l = 0;
    for (int m = 0; m < 4; ++m) l += coef_t_[iv](k, m) * std::pow(t, m);
    acc += l * samples(first_[iv] + k);
  }
  return acc;
}

}  // namespace ekbl
