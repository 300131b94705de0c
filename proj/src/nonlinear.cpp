#include "ekbl/nonlinear.hpp"

#include "ekbl/errors.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace ekbl {

nlohmann::json ConvergenceReport::to_json() const {
  return nlohmann::json{{"iterates", iterates},   {"residuals", residuals}, {"ratios", ratios},
                        {"converged", converged}, {"norm", norm},           {"fixed_point_defect", fixed_point_defect}};
}

double flow_norm(const FlowField& u, const SpectralGrid& g) { return weighted_sup_norm(u, g, 1.0 / 3.0); }

double boundary_norm(const BoundaryData& v0, const SpectralGrid& g) {
  Eigen::MatrixXd mag2 = Eigen::MatrixXd::Zero(g.n_modes, g.n_modes);
  for (const auto& c : v0.v0) {
    Eigen::MatrixXcd s(g.n_modes, g.n_modes);
    for (int m = 0; m < g.n_total(); ++m) s(m % g.n_modes, m / g.n_modes) = c(m);
    mag2 += to_physical(s).cwiseAbs2();
  }
  return std::sqrt(mag2.maxCoeff());
}

SourceTensor convective_source(const FlowField& u, const SpectralGrid& g) {
  SourceTensor F(g);
  parallel_for(0, g.n_z(), [&](int j) {
    std::array<Eigen::MatrixXd, 3> phys;
    bool any = false;
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXcd s = slice(u.v[i], g, j);
      any = any || !s.isZero(0);
      dealias(s);
      phys[i] = to_physical(s);
    }
    if (!any) return;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        Eigen::MatrixXcd prod = to_spectral(Eigen::MatrixXd(-phys[a].cwiseProduct(phys[b])));
        dealias(prod);
        set_slice(F(a, b), g, j, prod);
        if (b != a) set_slice(F(b, a), g, j, prod);
      }
  });
  return F;
}

FlowField picard_step(const HalfspaceSolver& solver, const FlowField& u, const BoundaryData& v0,
                      HalfspaceDiagnostics* diag) {
  const SourceTensor F = convective_source(u, solver.grid());
  return solver.solve(v0, &F, diag);
}

namespace {

double difference_norm(const FlowField& a, const FlowField& b, const SpectralGrid& g) {
  FlowField d = b;
  d *= -1.0;
  d += a;
  return flow_norm(d, g);
}

}  // namespace

std::pair<FlowField, ConvergenceReport> solve_nsc_halfspace(const HalfspaceSolver& solver, const BoundaryData& v0,
                                                            const PicardOptions& opt) {
  const SpectralGrid& g = solver.grid();
  ConvergenceReport rep;
  FlowField u = opt.initial ? *opt.initial : FlowField(g);
  int expanding = 0;
  for (int n = 0; n < opt.max_iter; ++n) {
    FlowField next = picard_step(solver, u, v0);
    const double diff = difference_norm(next, u, g);
    const double nn = flow_norm(next, g);
    rep.iterates = n + 1;
    if (!rep.residuals.empty() && rep.residuals.back() > 0) rep.ratios.push_back(diff / rep.residuals.back());
    rep.residuals.push_back(diff);
    if (!std::isfinite(diff) || !std::isfinite(nn) || nn > 1e8) {
      throw SolverError(ErrorCode::smallness_violated,
                        "Picard iterates blew up; boundary data too large for the small-data fixed point");
    }
    expanding = !rep.ratios.empty() && rep.ratios.back() >= 1.0 ? expanding + 1 : 0;
    if (expanding >= opt.divergence_window) {
      std::ostringstream os;
      os << "Picard map not contracting: " << expanding << " consecutive ratios >= 1 (last "
         << rep.ratios.back() << "); data violates the smallness hypothesis";
      throw SolverError(ErrorCode::smallness_violated, os.str());
    }
    u = std::move(next);
    if (diff <= opt.tol * std::max(1.0, nn)) {
      rep.converged = true;
      break;
    }
  }
  rep.norm = flow_norm(u, g);
  if (!opt.fixed_point_check) return {std::move(u), rep};
  const FlowField check = picard_step(solver, u, v0);
  rep.fixed_point_defect = difference_norm(check, u, g) / std::max(1.0, rep.norm);
  return {std::move(u), rep};
}

std::pair<double, double> contraction_radius(double c0, double delta0) {
  if (!(c0 > 0) || delta0 < 0) throw std::invalid_argument("contraction_radius: need C0 > 0 and delta0 >= 0");
  const double disc = 1.0 - 4.0 * delta0 * c0 * c0;
  if (disc < 0) {
    std::ostringstream os;
    os << "no admissible radius: 4 delta0 C0^2 = " << 4.0 * delta0 * c0 * c0 << " > 1";
    throw SolverError(ErrorCode::smallness_violated, os.str());
  }
  const double root = std::sqrt(disc);
  // R_- via the product of roots avoids cancellation when delta0 is tiny
  const double r_plus = (1.0 + root) / (2.0 * c0);
  const double r_minus = delta0 / r_plus;
  return {r_minus, r_plus};
}

BoundaryData random_boundary(const SpectralGrid& g, double amplitude, unsigned seed, int max_wavenumber) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BoundaryData b = BoundaryData::zeros(g);
  const int kmax = std::min(max_wavenumber, g.n_modes / 2 - 1);
  for (int c = 0; c < 3; ++c)
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      for (int k1 = -kmax; k1 <= kmax; ++k1) {
        const int m = g.mode_of(k1, k2), mc = g.mode_of(-k1, -k2);
        if (m > mc) continue;
        if (m == mc) {
          b.v0[c](m) = c == 2 ? 0.0 : u(rng);
        } else {
          const cd a(u(rng), u(rng));
          b.v0[c](m) = a;
          b.v0[c](mc) = std::conj(a);
        }
      }
  const double n = boundary_norm(b, g);
  for (auto& c : b.v0) c *= amplitude / n;
  auto nu = compatibility_potentials(g, b.v0[2]);
  b.nu[0] = nu[0];
  b.nu[1] = nu[1];
  return b;
}

SourceTensor random_source(const SpectralGrid& g, double amplitude, unsigned seed, int max_wavenumber) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int kmax = std::min(max_wavenumber, g.n_modes / 2 - 1);
  std::array<Eigen::VectorXcd, 9> shape;
  Eigen::MatrixXd mag2 = Eigen::MatrixXd::Zero(g.n_modes, g.n_modes);
  for (int c = 0; c < 9; ++c) {
    shape[c] = Eigen::VectorXcd::Zero(g.n_total());
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      for (int k1 = -kmax; k1 <= kmax; ++k1) {
        const int m = g.mode_of(k1, k2), mc = g.mode_of(-k1, -k2);
        if (m > mc) continue;
        if (m == mc) {
          shape[c](m) = u(rng);
        } else {
          const cd a(u(rng), u(rng));
          shape[c](m) = a;
          shape[c](mc) = std::conj(a);
        }
      }
    Eigen::MatrixXcd s(g.n_modes, g.n_modes);
    for (int m = 0; m < g.n_total(); ++m) s(m % g.n_modes, m / g.n_modes) = shape[c](m);
    mag2 += to_physical(s).cwiseAbs2();
  }
  const double scale = amplitude / std::sqrt(mag2.maxCoeff());
  SourceTensor F(g);
  for (int c = 0; c < 9; ++c)
    for (int j = 0; j < g.n_z(); ++j) F.comp[c].coeffs.col(j) = shape[c] * (scale * std::pow(1.0 + g.z(j), -2.0 / 3.0));
  return F;
}

ContractionConstant estimate_c0(const HalfspaceSolver& solver, int samples, unsigned seed, double amplitude) {
  const SpectralGrid& g = solver.grid();
  ContractionConstant out;
  const BoundaryData zero = BoundaryData::zeros(g);
  for (int s = 0; s < samples; ++s) {
    const BoundaryData v0 = random_boundary(g, amplitude, seed + 17u * s);
    const FlowField lin = solver.solve(v0, nullptr);
    out.samples_linear.push_back(flow_norm(lin, g) / boundary_norm(v0, g));
    const FlowField quad = picard_step(solver, lin, zero);
    const double nu = flow_norm(lin, g);
    out.samples_quadratic.push_back(flow_norm(quad, g) / (nu * nu));
  }
  for (double r : out.samples_linear) out.linear = std::max(out.linear, r);
  for (double r : out.samples_quadratic) out.quadratic = std::max(out.quadratic, r);
  out.c0 = std::max(out.linear, out.quadratic);
  return out;
}

}  // namespace ekbl
