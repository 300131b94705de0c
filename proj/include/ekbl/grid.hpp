/**
 * @file grid.hpp
 * @brief Horizontal Fourier lattice, graded vertical grid and spectral fields.
 *
 * Spectral coefficients are Fourier amplitudes: f(y) = sum_k f_k exp(i xi_k . y)
 * with xi_k = 2 pi k / L.  Mode index m = i1 + n * i2 with i1, i2 in FFT order.
 */
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace ekbl {

using cd = std::complex<double>;

struct SpectralGrid {
  double period = 2.0 * 3.14159265358979323846;
  int n_modes = 64;
  Eigen::VectorXd z;  // z(0) = 0 < ... < z(J) = Z_max
  double stretching = 1.0;

  /// Geometric grid with n_z nodes on [0, z_max].  ratio <= 0 selects 1 + 3 / n_z.
  static SpectralGrid graded(double period, int n_modes, int n_z, double z_max = 50.0, double ratio = 0.0);
  static SpectralGrid with_nodes(double period, int n_modes, Eigen::VectorXd nodes);

  int n_z() const { return static_cast<int>(z.size()); }
  int n_total() const { return n_modes * n_modes; }
  double z_max() const { return z(z.size() - 1); }
  /// Integer wavenumber for FFT-ordered index i.
  int wavenumber(int i) const { return i < n_modes / 2 ? i : i - n_modes; }
  double xi1(int m) const;
  double xi2(int m) const;
  int mode_of(int k1, int k2) const;
  /// Index of the mode -xi.
  int conjugate_mode(int m) const;
  bool is_nyquist(int m) const;
  void validate() const;
};

enum class FieldRole { velocity, vorticity, pressure, source };

struct SpectralField {
  Eigen::MatrixXcd coeffs;  // [mode x z-node]
  FieldRole role = FieldRole::velocity;

  SpectralField() = default;
  SpectralField(const SpectralGrid& g, FieldRole r) : coeffs(Eigen::MatrixXcd::Zero(g.n_total(), g.n_z())), role(r) {}
  /// max over entries of |c(-xi) - conj(c(xi))|
  double hermitian_defect(const SpectralGrid& g) const;
};

struct FlowField {
  SpectralField v[3];
  SpectralField dz_v[3];
  SpectralField p;
  SpectralField omega;

  FlowField() = default;
  explicit FlowField(const SpectralGrid& g);
  FlowField& operator+=(const FlowField& o);
  FlowField& operator*=(double a);
};

/// Nine components F_ij, index 3*i + j (0-based).
struct SourceTensor {
  SpectralField comp[9];
  SourceTensor() = default;
  explicit SourceTensor(const SpectralGrid& g);
  SpectralField& operator()(int i, int j) { return comp[3 * i + j]; }
  const SpectralField& operator()(int i, int j) const { return comp[3 * i + j]; }
  bool is_zero() const;
};

/// Physical sample (n x n, rows along y1) <-> Fourier amplitudes (n x n).
Eigen::MatrixXcd to_spectral(const Eigen::MatrixXd& physical);
Eigen::MatrixXcd to_spectral(const Eigen::MatrixXcd& physical);
Eigen::MatrixXcd to_physical_complex(const Eigen::MatrixXcd& spectral);
Eigen::MatrixXd to_physical(const Eigen::MatrixXcd& spectral);

/// Column z of a field as an n x n spectral matrix, and back.
Eigen::MatrixXcd slice(const SpectralField& f, const SpectralGrid& g, int j);
void set_slice(SpectralField& f, const SpectralGrid& g, int j, const Eigen::MatrixXcd& s);

/// Zero every mode with |k1| or |k2| above n/3.
void dealias(Eigen::MatrixXcd& spectral);

/// sup_z (1+z)^alpha max_y |field|, one z-slice transformed at a time.
double weighted_sup_norm(const SpectralField& f, const SpectralGrid& g, double alpha);
/// Same with the Euclidean norm of the three velocity components.
double weighted_sup_norm(const FlowField& f, const SpectralGrid& g, double alpha);
/// max_y |v(., z_j)| per node.
Eigen::VectorXd sup_profile(const FlowField& f, const SpectralGrid& g);

/// Worker count used by parallel loops; 0 means hardware concurrency.
void set_workers(int n);
int workers();
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace ekbl
