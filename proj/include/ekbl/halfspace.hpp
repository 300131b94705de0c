/**
 * @file halfspace.hpp
 * @brief Linear Stokes-Coriolis solver on the half-space z > 0, per Fourier mode.
 *
 *   e x v + grad p - Lap v = div F,  div v = 0,  v(z=0) = v0.
 *
 * Non-zero modes go through the (v3, w) reformulation: the source is split as
 * S0 + dz S1 + dz^2 S2, convolved with the Green matrix, and the boundary values
 * are fixed with the three decaying exponentials.  The zero mode is the
 * complexified Ekman equation with source.
 */
#pragma once

#include "ekbl/green_kernel.hpp"
#include "ekbl/grid.hpp"
#include "ekbl/vertical_quadrature.hpp"

#include <array>
#include <memory>
#include <vector>

namespace ekbl {

struct BoundaryData {
  Eigen::VectorXcd v0[3];
  Eigen::VectorXcd nu[2];

  static BoundaryData zeros(const SpectralGrid& g);
  /// Horizontally uniform tangential data (a1, a2, 0).
  static BoundaryData uniform(const SpectralGrid& g, double a1, double a2);
  /// Spectral trace; potentials nu are derived from v3 (mean of v3 must vanish).
  static BoundaryData from_trace(const SpectralGrid& g, const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2,
                                 const Eigen::VectorXcd& v3);
  /// max_m |v0_3 - i xi . nu|
  double compatibility_defect(const SpectralGrid& g) const;
};

/// nu_j = -i xi_j v3 / |xi|^2, nu(0) = 0.  Throws COMPAT_VIOLATED if |v3(0)| > tol.
std::array<Eigen::VectorXcd, 2> compatibility_potentials(const SpectralGrid& g, const Eigen::VectorXcd& v3_trace,
                                                          double tol = 1e-12);

/// Channels in the order (S0_3, S0_w, S1_3, S1_w, S2_w); S2_3 is identically zero.
constexpr int kChannels = 5;
constexpr std::array<int, kChannels> kChannelOrder = {0, 0, 1, 1, 2};  // power of dz
constexpr std::array<int, kChannels> kChannelColumn = {0, 1, 0, 1, 1};

struct SourceDecomposition {
  std::array<Eigen::MatrixXcd, kChannels> channel;  // [mode x z]
};

SourceDecomposition decompose_source(const SourceTensor& F, const SpectralGrid& g);
/// Channels of one mode, [z x channel].
Eigen::MatrixXcd mode_channels(const SourceTensor& F, const SpectralGrid& g, int m);
Eigen::MatrixXcd mode_channels(double xi1, double xi2, const std::array<Eigen::VectorXcd, 9>& f_profile);

/// Integral representation of (v3, w) for one mode: convolution of the Green
/// matrix with the decomposed source plus decaying homogeneous amplitudes.
class ModeRepresentation {
 public:
  ModeRepresentation(const CharRoots<double>& roots, const InteriorCoeffs<double>& coeffs,
                     const VerticalQuadrature& quad, const Eigen::VectorXd& z, Eigen::MatrixXcd channels);

  /// d^m/dz^m of row (0: v3, 1: w) at node j.  Without local terms only the
  /// convolution of d^{k+m} G and the homogeneous part are returned.
  cd eval(int row, int m, int j, bool with_local = true) const;
  cd local_terms(int row, int m, int j) const;
  /// eval() at every node at once.
  Eigen::VectorXcd eval_all(int row, int m, bool with_local = true) const;
  /// jump_source() at every node.
  Eigen::VectorXcd jump_source_all(int row, int m) const;
  /// Jump contribution sum_c [d^{k_c+m} G]_{row, col_c} s_c(z_j).
  cd jump_source(int row, int m, int j) const;

  void set_homogeneous(const Vec3c<double>& h) { homog_ = h; }
  const Vec3c<double>& homogeneous() const { return homog_; }
  const CharRoots<double>& roots() const { return roots_; }
  const Eigen::MatrixXcd& channels() const { return channels_; }

 private:
  static constexpr int kMaxPow = 9;
  CharRoots<double> roots_;
  GreenBlocks<double> blocks_;
  const VerticalQuadrature* quad_;
  const Eigen::VectorXd* z_;
  Eigen::MatrixXcd channels_;
  std::array<Eigen::MatrixXcd, 2> dchannels_;  // first and second node derivatives
  bool active_ = false;
  std::array<Eigen::MatrixXcd, 3> below_, above_;
  std::array<std::array<cd, kMaxPow>, 3> pow_plus_{}, pow_minus_{};
  std::array<Mat2c<double>, kMaxPow> jump_;
  std::array<Eigen::VectorXcd, 3> decay_;  // e^{-l_i z_j}
  Vec3c<double> homog_ = Vec3c<double>::Zero();
};

struct HalfspaceDiagnostics {
  double momentum_residual = 0;    // relative, non-zero modes
  double divergence_residual = 0;  // absolute
  double boundary_error = 0;       // max |v(0) - v0| over spectral amplitudes
};

/// Zero-mode solution: horizontal profiles and pressure.
struct ZeroModeProfile {
  Eigen::VectorXcd v1, v2, dv1, dv2, p;
};

ZeroModeProfile zero_mode_solve(const std::array<Eigen::VectorXcd, 9>& f_zero, cd v0_1, cd v0_2, cd v0_3,
                                const VerticalQuadrature& quad, const Eigen::VectorXd& z);

class HalfspaceSolver {
 public:
  explicit HalfspaceSolver(SpectralGrid grid, Interp order = Interp::cubic);

  const SpectralGrid& grid() const { return grid_; }
  const VerticalQuadrature& quadrature() const { return quad_; }
  const CharRoots<double>& roots(int m) const { return roots_[m]; }
  const InteriorCoeffs<double>& coeffs(int m) const { return coeffs_[m]; }

  /// F may be null (no source).
  FlowField solve(const BoundaryData& v0, const SourceTensor* F, HalfspaceDiagnostics* diag = nullptr) const;

  /// Particular solution only: (v3, w) of the integral representation, no boundary correction.
  std::pair<SpectralField, SpectralField> convolve_green(const SourceDecomposition& S) const;

  /// Generalized stress trace (dz v - (p + |v|^2/2) e3) at z = 0, physical-space product
  /// evaluated on the grid and returned as spectral arrays.
  std::array<Eigen::VectorXcd, 3> stress_trace_bottom(const FlowField& f) const;

 private:
  SpectralGrid grid_;
  VerticalQuadrature quad_;
  std::vector<CharRoots<double>> roots_;
  std::vector<InteriorCoeffs<double>> coeffs_;
};

/// Linear Dirichlet-to-Neumann matrix of one mode: boundary velocity (v1, v2, v3)
/// -> (dz v1, dz v2, dz v3 - p) at z = 0 for the source-free problem.  At xi = 0
/// the vertical column is zero (the mean of v3 is excluded by compatibility).
Eigen::Matrix3cd dirichlet_to_neumann(double xi1, double xi2);

/// v1, v2 from dz v3 and w for xi != 0.
std::pair<cd, cd> recover_horizontal(double xi1, double xi2, cd dz_v3, cd w);
/// Field version; throws on the zero mode when it carries data.
std::pair<SpectralField, SpectralField> recover_horizontal(const SpectralField& dz_v3, const SpectralField& w,
                                                           const SpectralGrid& g);

/// Pressure from the horizontal divergence of the horizontal momentum equations:
/// p = F33 + (-w + d3 v3 - |xi|^2 dz v3) / |xi|^2, d3 v3 excluding source-local terms.
cd recover_pressure(double xi1, double xi2, cd f33, cd w, cd dz_v3, cd d3_v3_nonlocal);

}  // namespace ekbl
