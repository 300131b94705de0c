#include "ekbl/transmission.hpp"

#include "ekbl/errors.hpp"
#include "ekbl/gmres.hpp"

#include <cmath>
#include <sstream>

namespace ekbl {

namespace {

double max_abs(const PlaneTrace& t) {
  double m = 0;
  for (const auto& c : t)
    if (c.size()) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

Eigen::VectorXd flatten(const PlaneTrace& t) {
  const Eigen::Index np = t[0].size();
  Eigen::VectorXd x(3 * np);
  for (int i = 0; i < 3; ++i) x.segment(i * np, np) = t[i];
  return x;
}

PlaneTrace unflatten(const Eigen::VectorXd& x) {
  const Eigen::Index np = x.size() / 3;
  return {x.segment(0, np), x.segment(np, np), x.segment(2 * np, np)};
}

Eigen::VectorXcd lattice_spectral(const Eigen::VectorXd& v, int n) {
  const Eigen::MatrixXcd s = to_spectral(Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n)));
  return Eigen::Map<const Eigen::VectorXcd>(s.data(), n * n);
}

Eigen::VectorXd lattice_physical(const Eigen::VectorXcd& c, int n) {
  const Eigen::MatrixXd p = to_physical(Eigen::MatrixXcd(Eigen::Map<const Eigen::MatrixXcd>(c.data(), n, n)));
  return Eigen::Map<const Eigen::VectorXd>(p.data(), n * n);
}

// same convention as the strip: Nyquist derivative dropped
double lattice_xi(int i, int n, double period) {
  const int k = i < n / 2 ? i : i - n;
  if (k == -n / 2) return 0.0;
  return 2.0 * M_PI / period * k;
}

// small-grid index -> list of (big-grid index, weight); the Nyquist entry is split in two
struct Target {
  int index[2];
  int count;
};

Target targets(int i, int n, int nb) {
  const int k = i < n / 2 ? i : i - n;
  auto big = [nb](int kk) { return kk < 0 ? kk + nb : kk; };
  if (k == -n / 2 && nb > n) return {{big(k), big(-k)}, 2};
  return {{big(k), 0}, 1};
}

}  // namespace

nlohmann::json FullFlow::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& s : newton_history)
    hist.push_back({{"residual", s.residual},
                    {"gmres_iterations", s.gmres_iterations},
                    {"gmres_residual", s.gmres_residual},
                    {"step_length", s.step_length}});
  return nlohmann::json{{"newton_history", hist},
                        {"final_residual", final_residual},
                        {"function_evaluations", function_evaluations},
                        {"jump_norms",
                         {{"velocity", velocity_jump}, {"stress", stress_jump}, {"newtonian_stress", newtonian_stress_jump}}},
                        {"weighted_norms",
                         {{"v_weighted_sup", weighted_norm},
                          {"phi_sup", phi_norm},
                          {"ratio", phi_norm > 0 ? weighted_norm / phi_norm : 0.0}}},
                        {"interface_height", top},
                        {"compat_defect", compat_defect},
                        {"strip", strip_report.to_json()},
                        {"picard", picard_report.to_json()}};
}

Transmission::Transmission(RoughnessProfile gamma, double period, TransmissionGrids grids, TransmissionOptions opt)
    : grids_(grids), opt_(opt), period_(period) {
  if (gamma.n != grids_.strip_points)
    throw SolverError(ErrorCode::invalid_input, "roughness profile does not match the strip lattice");
  if (grids_.halfspace_modes < grids_.strip_points || grids_.halfspace_modes % 2 || grids_.strip_points % 2)
    throw SolverError(ErrorCode::invalid_input, "half-space modes must be even and >= strip points");
  if (grids_.top <= gamma.sup_gamma) grids_.top = gamma.sup_gamma + 1.0;
  StripOptions so;
  so.tol = opt_.strip_tol;
  strip_ = std::make_unique<StripSolver>(std::move(gamma), grids_.top, grids_.strip_levels, so);
  upper_ = std::make_unique<HalfspaceSolver>(
      SpectralGrid::graded(period_, grids_.halfspace_modes, grids_.halfspace_nz, grids_.halfspace_zmax));
  const int np = grids_.strip_points * grids_.strip_points;
  jacobian_inverse_.resize(np);
  for (int m = 0; m < np; ++m) jacobian_inverse_[m] = flat_jacobian(m).inverse();
}

Eigen::Matrix3cd Transmission::flat_jacobian(int mode) const {
  const int n = grids_.strip_points;
  const double x1 = lattice_xi(mode % n, n, period_), x2 = lattice_xi(mode / n, n, period_);
  Eigen::Matrix3cd response;
  for (int c = 0; c < 3; ++c) response.col(c) = strip_->flat_response(mode, Eigen::Vector3cd::Unit(c));
  return dirichlet_to_neumann(x1, x2) * response - Eigen::Matrix3cd::Identity();
}

Eigen::VectorXcd Transmission::pad_trace(const Eigen::VectorXd& physical) const {
  const int n = grids_.strip_points, nb = grids_.halfspace_modes;
  const Eigen::VectorXcd s = lattice_spectral(physical, n);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(nb * nb);
  for (int i2 = 0; i2 < n; ++i2) {
    const Target t2 = targets(i2, n, nb);
    for (int i1 = 0; i1 < n; ++i1) {
      const Target t1 = targets(i1, n, nb);
      const cd c = s(i1 + n * i2) / double(t1.count * t2.count);
      for (int a = 0; a < t1.count; ++a)
        for (int b = 0; b < t2.count; ++b) out(t1.index[a] + nb * t2.index[b]) += c;
    }
  }
  return out;
}

Eigen::VectorXd Transmission::truncate_trace(const Eigen::VectorXcd& modes) const {
  const int n = grids_.strip_points, nb = grids_.halfspace_modes;
  Eigen::VectorXcd s = Eigen::VectorXcd::Zero(n * n);
  for (int i2 = 0; i2 < n; ++i2) {
    const Target t2 = targets(i2, n, nb);
    for (int i1 = 0; i1 < n; ++i1) {
      const Target t1 = targets(i1, n, nb);
      cd acc = 0;
      for (int a = 0; a < t1.count; ++a)
        for (int b = 0; b < t2.count; ++b) acc += modes(t1.index[a] + nb * t2.index[b]);
      s(i1 + n * i2) = acc;
    }
  }
  return lattice_physical(s, n);
}

PlaneTrace Transmission::eval(const PlaneTrace& phi, const PlaneTrace& psi, InterfaceState* state,
                              const InterfaceState* warm) const {
  InterfaceState st;
  const bool use_warm = warm && warm->valid;
  st.psi = psi;
  st.lower = strip_->solve(phi, psi, &st.strip_report, use_warm ? &warm->lower : nullptr);
  const PlaneTrace top_v = strip_->velocity_trace_top(st.lower);

  // the mean of v3 on the interface vanishes up to discretization error; remove it
  const double mean3 = top_v[2].mean();
  const double scale = std::max(1e-300, max_abs(top_v));
  st.compat_defect = std::abs(mean3);
  if (st.compat_defect > opt_.compat_tol * scale) {
    std::ostringstream os;
    os << "interface trace has mean vertical velocity " << mean3 << " (relative " << st.compat_defect / scale
       << "); the half-space needs a zero-mean v3";
    throw SolverError(ErrorCode::compat_violated, os.str());
  }
  Eigen::VectorXcd v3 = pad_trace(top_v[2]);
  v3(0) = 0.0;
  const SpectralGrid& ug = upper_->grid();
  const BoundaryData v0 = BoundaryData::from_trace(ug, pad_trace(top_v[0]), pad_trace(top_v[1]), v3);

  PicardOptions po;
  po.tol = opt_.picard_tol;
  po.fixed_point_check = false;
  if (use_warm) po.initial = &warm->upper;
  auto [upper, prep] = solve_nsc_halfspace(*upper_, v0, po);
  st.upper = std::move(upper);
  st.picard_report = prep;

  // Newtonian part from the half-space, kinetic term on the lattice where both traces coincide
  Eigen::VectorXcd normal = st.upper.dz_v[2].coeffs.col(0) - st.upper.p.coeffs.col(0);
  PlaneTrace res{truncate_trace(st.upper.dz_v[0].coeffs.col(0)), truncate_trace(st.upper.dz_v[1].coeffs.col(0)),
                 truncate_trace(normal)};
  Eigen::VectorXd ke = Eigen::VectorXd::Zero(top_v[0].size());
  for (int i = 0; i < 3; ++i) ke += 0.5 * top_v[i].cwiseAbs2();
  res[2] -= ke;
  for (int i = 0; i < 3; ++i) res[i] -= psi[i];
  st.residual = res;
  st.valid = true;
  if (state) *state = std::move(st);
  return res;
}

void Transmission::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& out) const {
  if (!opt_.dn_preconditioner) {
    out = r;
    return;
  }
  const int n = grids_.strip_points, np = n * n;
  const PlaneTrace t = unflatten(r);
  std::array<Eigen::VectorXcd, 3> s;
  for (int i = 0; i < 3; ++i) s[i] = lattice_spectral(t[i], n);
  for (int m = 0; m < np; ++m) {
    const Eigen::Vector3cd x = jacobian_inverse_[m] * Eigen::Vector3cd(s[0](m), s[1](m), s[2](m));
    for (int i = 0; i < 3; ++i) s[i](m) = x(i);
  }
  out = flatten({lattice_physical(s[0], n), lattice_physical(s[1], n), lattice_physical(s[2], n)});
}

FullFlow Transmission::solve(const PlaneTrace& phi) const {
  const int np = grids_.strip_points * grids_.strip_points;
  PlaneTrace psi{Eigen::VectorXd::Zero(np), Eigen::VectorXd::Zero(np), Eigen::VectorXd::Zero(np)};
  InterfaceState st;
  int evals = 1;
  eval(phi, psi, &st);
  std::vector<NewtonStep> history;
  double rn = max_abs(st.residual);
  for (int it = 0;; ++it) {
    if (rn <= opt_.tol) break;
    if (it >= opt_.max_newton) {
      std::ostringstream os;
      os << "transmission Newton did not reach " << opt_.tol << " in " << opt_.max_newton
         << " steps; residual history:";
      for (const auto& h : history) os << ' ' << h.residual;
      os << ' ' << rn;
      throw SolverError(ErrorCode::newton_stagnation, os.str());
    }
    NewtonStep step;
    step.residual = rn;
    const Eigen::VectorXd x = flatten(st.psi);
    const Eigen::VectorXd f0 = flatten(st.residual);
    // directional derivative by a one-sided probe, warm-started from the base state
    auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
      const double vn = v.cwiseAbs().maxCoeff();
      if (vn == 0) {
        out.setZero(v.size());
        return;
      }
      const double h = opt_.probe * (1.0 + x.cwiseAbs().maxCoeff()) / vn;
      const PlaneTrace fp = eval(phi, unflatten(x + h * v), nullptr, &st);
      ++evals;
      out = (flatten(fp) - f0) / h;
    };
    auto prec = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { precondition(v, out); };
    const double forcing = 1e-3;
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(x.size());
    const Eigen::VectorXd rhs = -f0;
    const GmresResult gr = gmres<double>(apply, prec, rhs, dx, forcing, opt_.gmres_restart, opt_.gmres_max);
    step.gmres_iterations = gr.iterations;
    step.gmres_residual = gr.relative_residual;

    const double r2 = f0.norm();
    double t = 1.0;
    InterfaceState trial;
    for (;;) {
      eval(phi, unflatten(x + t * dx), &trial, &st);
      ++evals;
      if (flatten(trial.residual).norm() <= (1.0 - 1e-4 * t) * r2) break;
      t *= 0.5;
      if (t < 1.0 / 64) {
        std::ostringstream os;
        os << "transmission Newton stagnated: no decrease along the Krylov direction (GMRES rel. residual "
           << gr.relative_residual << "); residual history:";
        for (const auto& h : history) os << ' ' << h.residual;
        os << ' ' << rn;
        throw SolverError(ErrorCode::newton_stagnation, os.str());
      }
    }
    step.step_length = t;
    history.push_back(step);
    st = std::move(trial);
    rn = max_abs(st.residual);
  }
  FullFlow full = assemble(st, phi);
  full.newton_history = std::move(history);
  full.final_residual = rn;
  full.function_evaluations = evals;
  return full;
}

FullFlow Transmission::assemble(const InterfaceState& st, const PlaneTrace& phi) const {
  FullFlow full;
  full.lower = st.lower;
  full.upper = st.upper;
  full.top = grids_.top;
  full.psi = st.psi;
  full.strip_report = st.strip_report;
  full.picard_report = st.picard_report;
  full.compat_defect = st.compat_defect;
  full.phi_norm = max_abs(phi);

  // two-sided traces on the lattice
  const PlaneTrace v_lo = strip_->velocity_trace_top(st.lower);
  const PlaneTrace sig_lo = strip_->stress_trace_top(st.lower);
  PlaneTrace v_up, sig_up;
  for (int i = 0; i < 3; ++i) v_up[i] = truncate_trace(st.upper.v[i].coeffs.col(0));
  for (int i = 0; i < 3; ++i) sig_up[i] = truncate_trace(st.upper.dz_v[i].coeffs.col(0));
  sig_up[2] -= truncate_trace(st.upper.p.coeffs.col(0));
  PlaneTrace newton_lo = sig_lo;
  Eigen::VectorXd ke_lo = Eigen::VectorXd::Zero(v_lo[0].size()), ke_up = ke_lo;
  for (int i = 0; i < 3; ++i) {
    ke_lo += 0.5 * v_lo[i].cwiseAbs2();
    ke_up += 0.5 * v_up[i].cwiseAbs2();
  }
  newton_lo[2] += ke_lo;  // back to dz v - p e3
  PlaneTrace newton_up = sig_up;
  sig_up[2] -= ke_up;
  for (int i = 0; i < 3; ++i) {
    full.velocity_jump = std::max(full.velocity_jump, (v_lo[i] - v_up[i]).cwiseAbs().maxCoeff());
    full.stress_jump = std::max(full.stress_jump, (sig_lo[i] - sig_up[i]).cwiseAbs().maxCoeff());
    full.newtonian_stress_jump =
        std::max(full.newtonian_stress_jump, (newton_lo[i] - newton_up[i]).cwiseAbs().maxCoeff());
  }

  // weighted sup norm (1 + y3)^{1/3} |v| over both pieces
  const StripGrid& sg = strip_->grid();
  for (int k = 0; k < sg.levels; ++k)
    for (int pt = 0; pt < sg.n_points(); ++pt) {
      double mag2 = 0;
      for (int i = 0; i < 3; ++i) mag2 += st.lower.u[i](pt, k) * st.lower.u[i](pt, k);
      const double y3 = sg.y3(pt, k);
      full.weighted_norm = std::max(full.weighted_norm, std::cbrt(1.0 + std::max(0.0, y3)) * std::sqrt(mag2));
    }
  const SpectralGrid& ug = upper_->grid();
  const Eigen::VectorXd prof = sup_profile(st.upper, ug);
  for (int j = 0; j < ug.n_z(); ++j)
    full.weighted_norm = std::max(full.weighted_norm, std::cbrt(1.0 + grids_.top + ug.z(j)) * prof(j));
  return full;
}

PlaneTrace eval_transmission(const PlaneTrace& phi, const PlaneTrace& psi, const RoughnessProfile& gamma,
                             const TransmissionGrids& grids) {
  Transmission t(gamma, gamma.period, grids);
  return t.eval(phi, psi);
}

FullFlow solve_transmission(const PlaneTrace& phi, const RoughnessProfile& gamma, const TransmissionGrids& grids,
                            double tol, int max_newton) {
  TransmissionOptions opt;
  opt.tol = tol;
  opt.max_newton = max_newton;
  Transmission t(gamma, gamma.period, grids, opt);
  return t.solve(phi);
}

PlaneTrace tangent_bottom_data(const RoughnessProfile& gamma, double a1, double a2) {
  const Eigen::Index np = gamma.gamma.size();
  const auto grad = gamma.gradient();
  return {Eigen::VectorXd::Constant(np, a1), Eigen::VectorXd::Constant(np, a2), a1 * grad[0] + a2 * grad[1]};
}

DecayProfile decay_profile(const FullFlow& full, const SpectralGrid& upper_grid) {
  DecayProfile d;
  d.height = upper_grid.z.array() + full.top;
  d.sup = sup_profile(full.upper, upper_grid);
  return d;
}

}  // namespace ekbl
