/**
 * @file transmission.hpp
 * @brief Gluing the bumped strip to the upper half-space through the stress trace at y3 = M.
 *
 * For a top stress psi the strip is solved with bottom data phi, its top velocity
 * is handed to the nonlinear half-space solver, and the residual is
 *
 *   F(psi, phi) = Sigma(v+, p+) e3 |_{y3 = M} - psi,   Sigma(v, p) = grad v - (p + |v|^2 / 2) Id.
 *
 * F = 0 is solved by Jacobian-free Newton-Krylov.  Traces live on the strip
 * lattice (n x n); the half-space uses a finer Fourier grid and receives the
 * trace by zero padding.
 */
#pragma once

#include "ekbl/halfspace.hpp"
#include "ekbl/nonlinear.hpp"
#include "ekbl/strip.hpp"

#include "json.hpp"

#include <memory>
#include <vector>

namespace ekbl {

struct TransmissionGrids {
  int strip_points = 32;      // n per horizontal direction
  int strip_levels = 24;      // CGL levels
  double top = 0;             // interface height M; <= sup gamma selects sup gamma + 1
  int halfspace_modes = 64;   // must be >= strip_points
  int halfspace_nz = 128;
  double halfspace_zmax = 50;
};

struct TransmissionOptions {
  double tol = 1e-9;          // max-norm of F at convergence
  int max_newton = 12;
  int gmres_restart = 40;
  int gmres_max = 120;
  double probe = 1e-6;        // finite-difference probe scale
  bool dn_preconditioner = true;
  double strip_tol = 1e-11;
  double picard_tol = 1e-13;
  double compat_tol = 1e-6;   // relative bound on the mean of v3 at the interface
};

/// Everything produced by one evaluation of F, reused as warm start.
struct InterfaceState {
  StripField lower;
  FlowField upper;
  PlaneTrace residual;         // F(psi, phi) on the strip lattice
  PlaneTrace psi;
  StripReport strip_report;
  ConvergenceReport picard_report;
  double compat_defect = 0;    // |mean v3| removed before the half-space solve
  bool valid = false;
};

struct NewtonStep {
  double residual = 0;         // max-norm of F before the step
  int gmres_iterations = 0;
  double gmres_residual = 0;
  double step_length = 0;
};

struct FullFlow {
  StripField lower;
  FlowField upper;
  double top = 0;
  PlaneTrace psi;
  double velocity_jump = 0;    // max |v-(M) - v+(M)| on the lattice
  double stress_jump = 0;      // generalized stress
  double newtonian_stress_jump = 0;  // dz v - p e3
  double weighted_norm = 0;    // sup (1 + y3)^{1/3} |v| over both subdomains
  double phi_norm = 0;
  std::vector<NewtonStep> newton_history;
  double final_residual = 0;
  int function_evaluations = 0;
  StripReport strip_report;
  ConvergenceReport picard_report;
  double compat_defect = 0;

  nlohmann::json to_json() const;
};

class Transmission {
 public:
  Transmission(RoughnessProfile gamma, double period, TransmissionGrids grids, TransmissionOptions opt = {});

  const StripSolver& strip() const { return *strip_; }
  const HalfspaceSolver& halfspace() const { return *upper_; }
  const TransmissionGrids& grids() const { return grids_; }
  const TransmissionOptions& options() const { return opt_; }
  double top() const { return grids_.top; }

  /// F(psi, phi) on the strip lattice.  `warm` (optional) seeds both inner solves.
  PlaneTrace eval(const PlaneTrace& phi, const PlaneTrace& psi, InterfaceState* state = nullptr,
                  const InterfaceState* warm = nullptr) const;

  /// Newton-Krylov from psi = 0.  Throws NEWTON_STAGNATION with the residual history.
  FullFlow solve(const PlaneTrace& phi) const;

  /// Flat linearization J0 = DN+ N- - I of one strip mode (used as preconditioner).
  Eigen::Matrix3cd flat_jacobian(int mode) const;

  // lattice trace <-> half-space modes
  Eigen::VectorXcd pad_trace(const Eigen::VectorXd& physical) const;
  Eigen::VectorXd truncate_trace(const Eigen::VectorXcd& modes) const;

 private:
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& out) const;
  FullFlow assemble(const InterfaceState& st, const PlaneTrace& phi) const;

  TransmissionGrids grids_;
  TransmissionOptions opt_;
  double period_;
  std::unique_ptr<StripSolver> strip_;
  std::unique_ptr<HalfspaceSolver> upper_;
  std::vector<Eigen::Matrix3cd> jacobian_inverse_;
};

/// Convenience wrappers with a fresh Transmission each call.
PlaneTrace eval_transmission(const PlaneTrace& phi, const PlaneTrace& psi, const RoughnessProfile& gamma,
                             const TransmissionGrids& grids);
FullFlow solve_transmission(const PlaneTrace& phi, const RoughnessProfile& gamma, const TransmissionGrids& grids,
                            double tol = 1e-9, int max_newton = 12);

/// Bottom data (a1, a2) made tangent to gamma: phi3 = a . grad gamma.
PlaneTrace tangent_bottom_data(const RoughnessProfile& gamma, double a1, double a2);

struct DecayProfile {
  Eigen::VectorXd height;  // y3 = M + z
  Eigen::VectorXd sup;     // max_y |v(., y3)|
};
/// Sup-norm profile of the upper field.
DecayProfile decay_profile(const FullFlow& full, const SpectralGrid& upper_grid);

}  // namespace ekbl
