/**
 * @file nonlinear.hpp
 * @brief Picard iteration for the steady Navier-Stokes-Coriolis half-space problem
 *
 *   e x u + grad p - Lap u + u . grad u = 0,  div u = 0,  u(z=0) = v0,
 *
 * written as u = T(u), T(u) = linear solve with source tensor F = -u (x) u.
 */
#pragma once

#include "ekbl/halfspace.hpp"

#include "json.hpp"

#include <utility>
#include <vector>

namespace ekbl {

struct ConvergenceReport {
  int iterates = 0;
  std::vector<double> residuals;  // weighted norm of u^{n+1} - u^n
  std::vector<double> ratios;     // successive residual ratios
  bool converged = false;
  double norm = 0;                // (1+z)^{1/3}-weighted sup norm of the solution
  double fixed_point_defect = 0;  // |T(u) - u| / max(1, |u|) at the returned u

  nlohmann::json to_json() const;
};

struct PicardOptions {
  double tol = 1e-8;
  int max_iter = 50;
  int divergence_window = 3;  // consecutive ratios >= 1 before giving up
  const FlowField* initial = nullptr;  // warm start; u = 0 when null
  bool fixed_point_check = true;       // one extra map application to fill fixed_point_defect
};

/// Weighted sup norm used throughout the nonlinear layer (alpha = 1/3).
double flow_norm(const FlowField& u, const SpectralGrid& g);
/// max_y |v0(y)| of the boundary trace.
double boundary_norm(const BoundaryData& v0, const SpectralGrid& g);

/// F = -u (x) u formed per z-slice in physical space, 2/3-rule dealiased.
SourceTensor convective_source(const FlowField& u, const SpectralGrid& g);

FlowField picard_step(const HalfspaceSolver& solver, const FlowField& u, const BoundaryData& v0,
                      HalfspaceDiagnostics* diag = nullptr);

/// Iterates from u = 0.  Throws SMALLNESS_VIOLATED when the iteration expands.
std::pair<FlowField, ConvergenceReport> solve_nsc_halfspace(const HalfspaceSolver& solver, const BoundaryData& v0,
                                                            const PicardOptions& opt = {});

/// Roots of C0 R^2 - R + C0 delta0 = 0.  Throws SMALLNESS_VIOLATED when 4 delta0 C0^2 > 1.
std::pair<double, double> contraction_radius(double c0, double delta0);

struct ContractionConstant {
  double c0 = 0;
  double linear = 0;     // max |T_v0(0)| / |v0|
  double quadratic = 0;  // max |T_0(u)| / |u|^2
  std::vector<double> samples_linear, samples_quadratic;

  /// Largest |v0| for which the ball argument closes with the split bound
  /// |T(u)| <= linear |v0| + quadratic |u|^2, i.e. 1 / (4 linear quadratic).
  double admissible_delta() const { return 1.0 / (4.0 * linear * quadratic); }
  /// Same with the single constant c0: 1 / (4 c0^2).
  double admissible_delta_single() const { return 1.0 / (4.0 * c0 * c0); }
};

/// Empirical C0 from `samples` random small inputs (deterministic seed).
ContractionConstant estimate_c0(const HalfspaceSolver& solver, int samples = 10, unsigned seed = 7,
                                double amplitude = 1e-2);

/// Random real boundary trace with zero-mean vertical part, low modes only, max_y |v0| = amplitude.
BoundaryData random_boundary(const SpectralGrid& g, double amplitude, unsigned seed, int max_wavenumber = 2);

/// Random real source tensor on |k| <= max_wavenumber with profile (1+z)^{-2/3},
/// scaled so that sup (1+z)^{2/3} |F(y, z)| = amplitude (Frobenius norm in y).
SourceTensor random_source(const SpectralGrid& g, double amplitude, unsigned seed, int max_wavenumber = 2);

}  // namespace ekbl
