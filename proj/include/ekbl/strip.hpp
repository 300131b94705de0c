/**
 * @file strip.hpp
 * @brief Steady Navier-Stokes-Coriolis flow in the bumped strip gamma(y_h) < y3 < M.
 *
 *   u . grad u + e x u + grad p - Lap u = 0,  div u = 0,
 *   u = phi on y3 = gamma,  (dz u - (p + |u|^2/2) e3) = psi on y3 = M.
 *
 * Terrain-following coordinate y3 = gamma + sigma (M - gamma).  Horizontal
 * directions are Fourier collocated, sigma uses Chebyshev-Gauss-Lobatto nodes
 * for velocity and interior Chebyshev-Gauss nodes for pressure (P_N - P_{N-2}).
 * The collocation system is solved by Newton with exact Jacobian-vector
 * products and GMRES, preconditioned by the per-mode flat-strip linear operator.
 */
#pragma once

#include "ekbl/grid.hpp"

#include "json.hpp"

#include <array>
#include <string>
#include <vector>

namespace ekbl {

/// Samples on the horizontal lattice, index i1 + n * i2, y_k = i_k L / n.
using PlaneTrace = std::array<Eigen::VectorXd, 3>;

struct RoughnessProfile {
  Eigen::VectorXd gamma;  // n^2 samples
  int n = 0;
  double period = 0;
  double lipschitz_bound = 0;
  double sup_gamma = 0;

  static RoughnessProfile from_samples(Eigen::VectorXd gamma, int n, double period);
  static RoughnessProfile flat(int n, double period);
  /// amplitude * sin(k1 . 2 pi y1 / L) * sin(k2 . 2 pi y2 / L); k2 = 0 drops the second factor.
  static RoughnessProfile sinusoidal(int n, double period, double amplitude, int k1 = 1, int k2 = 1);
  /// Two incommensurate-looking frequencies: cos(k y1) + cos(q y1 + q y2) with q = round(sqrt(2) k_scale),
  /// the periodic stand-in for a quasi-periodic bump.
  static RoughnessProfile quasi_periodic(int n, double period, double amplitude, int k_scale = 2);
  /// Random Fourier coefficients for |k| <= kmax, fixed seed, rescaled to sup |gamma| = amplitude.
  static RoughnessProfile filtered_noise(int n, double period, double amplitude, unsigned seed, int kmax = 3);
  /// CSV with header y1,y2,gamma and n^2 rows on the lattice (any row order).
  static RoughnessProfile from_csv(const std::string& path, int n, double period);

  std::array<Eigen::VectorXd, 2> gradient() const;
};

struct StripGrid {
  int n = 0;           // horizontal points per direction
  double period = 0;
  double top = 1;      // M
  int levels = 0;      // CGL levels, N + 1
  Eigen::VectorXd sigma;   // CGL nodes in [0, 1], sigma(0) = 0
  Eigen::VectorXd gauss;   // N - 1 interior pressure nodes
  Eigen::MatrixXd diff;    // d/dsigma on CGL nodes
  Eigen::MatrixXd to_gauss;    // CGL -> Gauss interpolation
  Eigen::MatrixXd from_gauss;  // Gauss -> CGL (pressure polynomial evaluation)
  RoughnessProfile gamma;
  Eigen::VectorXd depth;  // M - gamma
  std::array<Eigen::VectorXd, 2> dgamma;

  static StripGrid make(RoughnessProfile gamma, double top, int levels);
  int n_points() const { return n * n; }
  int n_gauss() const { return levels - 2; }
  double y3(int point, int level) const { return gamma.gamma(point) + sigma(level) * depth(point); }
};

struct StripField {
  std::array<Eigen::MatrixXd, 3> u;  // [point x CGL level]
  Eigen::MatrixXd p;                 // [point x Gauss level]

  static StripField zeros(const StripGrid& g);
};

struct StripOptions {
  double tol = 1e-11;       // max-norm of the collocation residual
  int max_newton = 25;
  int gmres_restart = 80;
  int gmres_max = 800;
  double forcing = 1e-6;    // relative GMRES tolerance per Newton step
  double smallness = 0.05;  // advisory bound on |phi|, |psi|
};

struct StripResiduals {
  double momentum = 0;
  double divergence = 0;
  double bottom = 0;
  double top = 0;
  double max() const;
};

struct StripReport {
  int newton_iterations = 0;
  int gmres_iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  StripResiduals residuals;
  bool small_data = true;  // phi, psi within the advisory bound

  nlohmann::json to_json() const;
};

class StripSolver {
 public:
  StripSolver(RoughnessProfile gamma, double top, int levels, StripOptions opt = {});

  const StripGrid& grid() const { return grid_; }
  const StripOptions& options() const { return opt_; }

  /// v_h = phi_h, v_3 = phi_3 - div_h phi_h (y3 - gamma); throws INVALID_INPUT on non-tangent phi.
  StripField lift_boundary(const PlaneTrace& phi) const;
  /// max |phi . n| with n ~ (-grad gamma, 1)
  double tangency_defect(const PlaneTrace& phi) const;

  StripField solve(const PlaneTrace& phi, const PlaneTrace& psi, StripReport* report = nullptr,
                   const StripField* guess = nullptr) const;

  PlaneTrace stress_trace_top(const StripField& f) const;
  PlaneTrace velocity_trace_top(const StripField& f) const;
  StripResiduals residuals(const StripField& f, const PlaneTrace& phi, const PlaneTrace& psi) const;

  /// Velocity at sigma (Chebyshev interpolation) for one lattice point.
  double sample(const StripField& f, int comp, int point, double sigma) const;
  double sample_pressure(const StripField& f, int point, double sigma) const;

  /// Flat linearization (depth = mean depth) for one horizontal mode:
  /// top velocity produced by top stress psi_hat with zero bottom data.
  Eigen::Vector3cd flat_response(int mode, const Eigen::Vector3cd& psi_hat) const;

  // vector packing used by the Newton-Krylov loop
  Eigen::VectorXd pack(const StripField& f) const;
  StripField unpack(const Eigen::VectorXd& x) const;
  Eigen::VectorXd residual_vector(const StripField& f, const PlaneTrace& phi, const PlaneTrace& psi) const;
  Eigen::VectorXd jacobian_apply(const StripField& base, const StripField& dir) const;
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& out) const;

 private:
  struct Gradient;
  Gradient gradient(const std::array<Eigen::MatrixXd, 3>& w) const;
  void horizontal_derivatives(const Eigen::MatrixXd& x, Eigen::MatrixXd& d1, Eigen::MatrixXd& d2) const;
  StripField linear_part(const StripField& f, const Gradient& gr) const;
  void add_quadratic(StripField& out, const std::array<Eigen::MatrixXd, 3>& a, const Gradient& gb,
                     const std::array<Eigen::MatrixXd, 3>& b) const;
  void build_preconditioner();

  StripGrid grid_;
  StripOptions opt_;
  double mean_depth_ = 1;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> flat_lu_;
  std::array<Eigen::MatrixXd, 2> metric_cgl_, metric_gauss_;  // dgamma (1 - sigma) / depth
  Eigen::VectorXd inv_depth_;
};

}  // namespace ekbl
