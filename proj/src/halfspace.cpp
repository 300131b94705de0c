#include "ekbl/halfspace.hpp"

#include "ekbl/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ekbl {

// ---------------------------------------------------------------- boundary data

BoundaryData BoundaryData::zeros(const SpectralGrid& g) {
  BoundaryData b;
  for (auto& v : b.v0) v = Eigen::VectorXcd::Zero(g.n_total());
  for (auto& v : b.nu) v = Eigen::VectorXcd::Zero(g.n_total());
  return b;
}

BoundaryData BoundaryData::uniform(const SpectralGrid& g, double a1, double a2) {
  BoundaryData b = zeros(g);
  b.v0[0](0) = a1;
  b.v0[1](0) = a2;
  return b;
}

BoundaryData BoundaryData::from_trace(const SpectralGrid& g, const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2,
                                      const Eigen::VectorXcd& v3) {
  BoundaryData b;
  b.v0[0] = v1;
  b.v0[1] = v2;
  b.v0[2] = v3;
  auto nu = compatibility_potentials(g, v3, 1e-12 * std::max(1.0, v3.cwiseAbs().maxCoeff()));
  b.nu[0] = nu[0];
  b.nu[1] = nu[1];
  return b;
}

double BoundaryData::compatibility_defect(const SpectralGrid& g) const {
  double d = 0;
  for (int m = 0; m < g.n_total(); ++m) {
    const cd div = cd(0, g.xi1(m)) * nu[0](m) + cd(0, g.xi2(m)) * nu[1](m);
    d = std::max(d, std::abs(v0[2](m) - div));
  }
  return d;
}

std::array<Eigen::VectorXcd, 2> compatibility_potentials(const SpectralGrid& g, const Eigen::VectorXcd& v3,
                                                          double tol) {
  if (std::abs(v3(0)) > tol) {
    std::ostringstream os;
    os << "vertical trace has non-zero horizontal mean " << std::abs(v3(0))
       << "; the compatibility hypothesis v0_3 = div_h nu_h fails";
    throw SolverError(ErrorCode::compat_violated, os.str());
  }
  std::array<Eigen::VectorXcd, 2> nu{Eigen::VectorXcd::Zero(g.n_total()), Eigen::VectorXcd::Zero(g.n_total())};
  for (int m = 1; m < g.n_total(); ++m) {
    const double x1 = g.xi1(m), x2 = g.xi2(m), s = x1 * x1 + x2 * x2;
    nu[0](m) = cd(0, -x1) * v3(m) / s;
    nu[1](m) = cd(0, -x2) * v3(m) / s;
  }
  return nu;
}

// ---------------------------------------------------------------- source split

Eigen::MatrixXcd mode_channels(double xi1, double xi2, const std::array<Eigen::VectorXcd, 9>& f) {
  const cd d1(0, xi1), d2(0, xi2);
  const cd lap = d1 * d1 + d2 * d2;
  const Eigen::Index nz = f[0].size();
  Eigen::MatrixXcd ch(nz, kChannels);
  auto F = [&](int i, int j) -> const Eigen::VectorXcd& { return f[3 * i + j]; };
  ch.col(0) = d2 * (d1 * F(0, 0) + d2 * F(0, 1)) - d1 * (d1 * F(1, 0) + d2 * F(1, 1));
  ch.col(1) = -lap * (d1 * F(2, 0) + d2 * F(2, 1));
  ch.col(2) = d2 * F(0, 2) - d1 * F(1, 2);
  ch.col(3) = d1 * (d1 * F(0, 0) + d2 * F(0, 1)) + d2 * (d1 * F(1, 0) + d2 * F(1, 1)) - lap * F(2, 2);
  ch.col(4) = d1 * F(0, 2) + d2 * F(1, 2);
  return ch;
}

namespace {

std::array<Eigen::VectorXcd, 9> mode_profile(const SourceTensor& F, int m) {
  std::array<Eigen::VectorXcd, 9> f;
  for (int c = 0; c < 9; ++c) f[c] = F.comp[c].coeffs.row(m).transpose();
  return f;
}

}  // namespace

Eigen::MatrixXcd mode_channels(const SourceTensor& F, const SpectralGrid& g, int m) {
  return mode_channels(g.xi1(m), g.xi2(m), mode_profile(F, m));
}

SourceDecomposition decompose_source(const SourceTensor& F, const SpectralGrid& g) {
  for (const auto& c : F.comp)
    if (c.coeffs.rows() != g.n_total() || c.coeffs.cols() != g.n_z())
      throw std::invalid_argument("decompose_source: source tensor does not match the grid");
  SourceDecomposition S;
  for (auto& c : S.channel) c = Eigen::MatrixXcd::Zero(g.n_total(), g.n_z());
  for (int m = 0; m < g.n_total(); ++m) {
    const Eigen::MatrixXcd ch = mode_channels(F, g, m);
    for (int c = 0; c < kChannels; ++c) S.channel[c].row(m) = ch.col(c).transpose();
  }
  return S;
}

// ---------------------------------------------------------------- per-mode representation

ModeRepresentation::ModeRepresentation(const CharRoots<double>& roots, const InteriorCoeffs<double>& coeffs,
                                       const VerticalQuadrature& quad, const Eigen::VectorXd& z,
                                       Eigen::MatrixXcd channels)
    : roots_(roots), blocks_(green_blocks(roots, coeffs)), quad_(&quad), z_(&z), channels_(std::move(channels)) {
  active_ = !channels_.isZero(0);
  for (int i = 0; i < 3; ++i) {
    const cd l = roots_.lambda(i);
    cd pp = 1, pm = 1;
    for (int n = 0; n < kMaxPow; ++n) {
      pow_plus_[i][n] = pp;
      pow_minus_[i][n] = pm;
      pp *= -l;
      pm *= l;
    }
    if (active_) quad.sweep(l, channels_, below_[i], above_[i]);
  }
  for (int i = 0; i < 3; ++i) decay_[i] = (-roots_.lambda(i) * z.cast<cd>()).array().exp();
  if (active_)
    for (int t = 0; t < 2; ++t) dchannels_[t] = quad.derivative_matrix(channels_, t + 1);
  for (int n = 0; n < kMaxPow; ++n) {
    jump_[n].setZero();
    for (int i = 0; i < 3; ++i) jump_[n] += pow_plus_[i][n] * blocks_.plus[i] - pow_minus_[i][n] * blocks_.minus[i];
  }
}

cd ModeRepresentation::local_terms(int row, int m, int j) const {
  if (!active_) return 0;
  cd acc = 0;
  for (int c = 0; c < kChannels; ++c) {
    const int k = kChannelOrder[c], col = kChannelColumn[c];
    for (int t = 0; t < m; ++t) {
      const cd jmp = jump_[k + m - 1 - t](row, col);
      if (std::abs(jmp) < 1e-300) continue;
      const cd ds = t == 0 ? channels_(j, c) : t <= 2 ? dchannels_[t - 1](j, c) : quad_->node_derivative(channels_, c, j, t);
      acc += jmp * ds;
    }
  }
  return acc;
}

cd ModeRepresentation::jump_source(int row, int m, int j) const {
  if (!active_) return 0;
  cd acc = 0;
  for (int c = 0; c < kChannels; ++c) acc += jump_[kChannelOrder[c] + m](row, kChannelColumn[c]) * channels_(j, c);
  return acc;
}

Eigen::VectorXcd ModeRepresentation::eval_all(int row, int m, bool with_local) const {
  const Eigen::Index nz = z_->size();
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(nz);
  if (active_) {
    for (int i = 0; i < 3; ++i) {
      Eigen::Matrix<cd, kChannels, 1> wp, wm;
      for (int c = 0; c < kChannels; ++c) {
        const int k = kChannelOrder[c], col = kChannelColumn[c];
        wp(c) = pow_plus_[i][k + m] * blocks_.plus[i](row, col);
        wm(c) = pow_minus_[i][k + m] * blocks_.minus[i](row, col);
      }
      acc.noalias() += below_[i] * wp;
      acc.noalias() += above_[i] * wm;
    }
    if (with_local && m > 0) {
      for (int c = 0; c < kChannels; ++c) {
        const int k = kChannelOrder[c], col = kChannelColumn[c];
        for (int t = 0; t < m; ++t) {
          const cd jmp = jump_[k + m - 1 - t](row, col);
          if (std::abs(jmp) < 1e-300) continue;
          if (t == 0) acc += jmp * channels_.col(c);
          else if (t <= 2) acc += jmp * dchannels_[t - 1].col(c);
          else acc += jmp * quad_->derivative_matrix(channels_.col(c), t);
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (homog_(i) == cd(0)) continue;
    const cd amp = row == 0 ? homog_(i) : -roots_.omega(i) * homog_(i);
    acc += (pow_plus_[i][m] * amp) * decay_[i];
  }
  return acc;
}

Eigen::VectorXcd ModeRepresentation::jump_source_all(int row, int m) const {
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(z_->size());
  if (!active_) return acc;
  for (int c = 0; c < kChannels; ++c) acc += jump_[kChannelOrder[c] + m](row, kChannelColumn[c]) * channels_.col(c);
  return acc;
}

cd ModeRepresentation::eval(int row, int m, int j, bool with_local) const {
  cd acc = 0;
  if (active_) {
    for (int i = 0; i < 3; ++i) {
      const auto& gp = blocks_.plus[i];
      const auto& gm = blocks_.minus[i];
      for (int c = 0; c < kChannels; ++c) {
        const int k = kChannelOrder[c], col = kChannelColumn[c];
        acc += pow_plus_[i][k + m] * gp(row, col) * below_[i](j, c) + pow_minus_[i][k + m] * gm(row, col) * above_[i](j, c);
      }
    }
    if (with_local && m > 0) acc += local_terms(row, m, j);
  }
  for (int i = 0; i < 3; ++i) {
    if (homog_(i) == cd(0)) continue;
    const cd amp = row == 0 ? homog_(i) : -roots_.omega(i) * homog_(i);
    acc += pow_plus_[i][m] * decay_[i](j) * amp;
  }
  return acc;
}

// ---------------------------------------------------------------- zero mode

namespace {

struct ScalarEkman {
  Eigen::VectorXcd u, du;
};

// -u'' + k^2 u = g', u(0) = u0, decay; k^2 = +-i.
ScalarEkman scalar_ekman(cd k, cd u0, const Eigen::VectorXcd& g, const VerticalQuadrature& quad,
                         const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  ScalarEkman out{Eigen::VectorXcd(n), Eigen::VectorXcd(n)};
  Eigen::MatrixXcd below, above;
  const bool src = !g.isZero(0);
  if (src) quad.sweep(k, Eigen::MatrixXcd(g), below, above);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cd e = std::exp(-k * z(j));
    out.u(j) = u0 * e;
    out.du(j) = -k * u0 * e;
    if (src) {
      const cd B = below(j, 0), A = above(j, 0), A0 = above(0, 0);
      out.u(j) -= 0.5 * (B - A + e * A0);
      out.du(j) -= 0.5 * (2.0 * g(j) - k * B - k * A - k * e * A0);
    }
  }
  return out;
}

}  // namespace

ZeroModeProfile zero_mode_solve(const std::array<Eigen::VectorXcd, 9>& f, cd v0_1, cd v0_2, cd v0_3,
                                const VerticalQuadrature& quad, const Eigen::VectorXd& z) {
  if (std::abs(v0_3) > 1e-12 * std::max({1.0, std::abs(v0_1), std::abs(v0_2)}))
    throw SolverError(ErrorCode::compat_violated,
                      "zero mode: vertical boundary data has non-zero mean (compatibility v0_3 = div_h nu_h)");
  const cd I(0, 1);
  const cd k = std::polar(1.0, std::numbers::pi / 4);
  const cd kc = std::conj(k);
  const Eigen::VectorXcd g = f[2] + I * f[5];   // F13 + i F23
  const Eigen::VectorXcd gc = f[2] - I * f[5];
  const ScalarEkman u = scalar_ekman(k, v0_1 + I * v0_2, g, quad, z);
  const ScalarEkman w = scalar_ekman(kc, v0_1 - I * v0_2, gc, quad, z);
  ZeroModeProfile out;
  out.v1 = (u.u + w.u) / 2.0;
  out.v2 = (u.u - w.u) / (2.0 * I);
  out.dv1 = (u.du + w.du) / 2.0;
  out.dv2 = (u.du - w.du) / (2.0 * I);
  out.p = f[8].array() - f[8](f[8].size() - 1);
  return out;
}

// ---------------------------------------------------------------- recovery

std::pair<cd, cd> recover_horizontal(double xi1, double xi2, cd dz_v3, cd w) {
  const double s = xi1 * xi1 + xi2 * xi2;
  if (s == 0) throw std::domain_error("recover_horizontal: the zero mode is handled by zero_mode_solve");
  const cd d1(0, xi1), d2(0, xi2);
  return {(-d1 * dz_v3 - d2 * w) / (-s), (-d2 * dz_v3 + d1 * w) / (-s)};
}

std::pair<SpectralField, SpectralField> recover_horizontal(const SpectralField& dz_v3, const SpectralField& w,
                                                           const SpectralGrid& g) {
  SpectralField v1(g, FieldRole::velocity), v2(g, FieldRole::velocity);
  if (!dz_v3.coeffs.row(0).isZero(0) || !w.coeffs.row(0).isZero(0))
    throw std::domain_error("recover_horizontal: zero mode carries data; use zero_mode_solve");
  for (int m = 1; m < g.n_total(); ++m)
    for (int j = 0; j < g.n_z(); ++j) {
      auto [a, b] = recover_horizontal(g.xi1(m), g.xi2(m), dz_v3.coeffs(m, j), w.coeffs(m, j));
      v1.coeffs(m, j) = a;
      v2.coeffs(m, j) = b;
    }
  return {v1, v2};
}

cd recover_pressure(double xi1, double xi2, cd f33, cd w, cd dz_v3, cd d3_v3_nonlocal) {
  const double s = xi1 * xi1 + xi2 * xi2;
  return f33 + (-w + d3_v3_nonlocal - s * dz_v3) / s;
}

Eigen::Matrix3cd dirichlet_to_neumann(double xi1, double xi2) {
  Eigen::Matrix3cd dn = Eigen::Matrix3cd::Zero();
  const double s = xi1 * xi1 + xi2 * xi2;
  if (s == 0) {
    // Ekman: dz (v1 + i v2) = -e^{i pi/4} (v1 + i v2)
    const double k = std::sqrt(0.5);
    dn(0, 0) = -k;
    dn(0, 1) = k;
    dn(1, 0) = -k;
    dn(1, 1) = -k;
    return dn;
  }
  const CharRoots<double> r = char_roots(xi1, xi2);
  const cd d1(0, xi1), d2(0, xi2);
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3cd v = Eigen::Vector3cd::Zero();
    v(c) = 1.0;
    const cd td = -(d1 * v(0) + d2 * v(1));
    const cd tw = d1 * v(1) - d2 * v(0);
    const Vec3c<double> C = boundary_coeffs(r, Vec3c<double>(v(2), -td, -tw)).C;
    cd dv3 = 0, d2v3 = 0, d3v3 = 0, w = 0, dw = 0;
    for (int i = 0; i < 3; ++i) {
      const cd l = r.lambda(i);
      dv3 += -l * C(i);
      d2v3 += l * l * C(i);
      d3v3 += -l * l * l * C(i);
      w += -r.omega(i) * C(i);
      dw += l * r.omega(i) * C(i);
    }
    auto [dv1, dv2] = recover_horizontal(xi1, xi2, d2v3, dw);
    const cd p = recover_pressure(xi1, xi2, 0.0, w, dv3, d3v3);
    dn(0, c) = dv1;
    dn(1, c) = dv2;
    dn(2, c) = dv3 - p;
  }
  return dn;
}

// ---------------------------------------------------------------- solver

HalfspaceSolver::HalfspaceSolver(SpectralGrid grid, Interp order)
    : grid_(std::move(grid)), quad_(grid_.z, order), roots_(grid_.n_total()), coeffs_(grid_.n_total()) {
  grid_.validate();
  for (int m = 0; m < grid_.n_total(); ++m) {
    roots_[m] = char_roots(grid_.xi1(m), grid_.xi2(m));
    if (m != 0) coeffs_[m] = interior_coeffs(roots_[m]);
  }
}

std::pair<SpectralField, SpectralField> HalfspaceSolver::convolve_green(const SourceDecomposition& S) const {
  SpectralField v3(grid_, FieldRole::velocity), w(grid_, FieldRole::vorticity);
  const int nz = grid_.n_z();
  parallel_for(1, grid_.n_total(), [&](int m) {
    Eigen::MatrixXcd ch(nz, kChannels);
    for (int c = 0; c < kChannels; ++c) ch.col(c) = S.channel[c].row(m).transpose();
    if (ch.isZero(0)) return;
    ModeRepresentation rep(roots_[m], coeffs_[m], quad_, grid_.z, std::move(ch));
    v3.coeffs.row(m) = rep.eval_all(0, 0).transpose();
    w.coeffs.row(m) = rep.eval_all(1, 0).transpose();
  });
  return {v3, w};
}

FlowField HalfspaceSolver::solve(const BoundaryData& v0, const SourceTensor* F, HalfspaceDiagnostics* diag) const {
  const SpectralGrid& g = grid_;
  const int nz = g.n_z(), nt = g.n_total();
  for (const auto& v : v0.v0)
    if (v.size() != nt) throw std::invalid_argument("solve_linear_halfspace: boundary data does not match the grid");
  if (std::abs(v0.v0[2](0)) > 1e-12 * std::max(1.0, v0.v0[2].cwiseAbs().maxCoeff()))
    throw SolverError(ErrorCode::compat_violated,
                      "boundary data: mean of v0_3 must vanish (hypothesis v0_3 = div_h nu_h)");
  const bool has_src = F && !F->is_zero();
  FlowField out(g);

  std::vector<double> res_mom(nt, 0.0), res_scale(nt, 0.0), res_div(nt, 0.0), bnd(nt, 0.0);

  // zero mode
  {
    std::array<Eigen::VectorXcd, 9> f;
    for (int c = 0; c < 9; ++c) f[c] = has_src ? Eigen::VectorXcd(F->comp[c].coeffs.row(0).transpose()) : Eigen::VectorXcd::Zero(nz);
    const ZeroModeProfile z0 = zero_mode_solve(f, v0.v0[0](0), v0.v0[1](0), 0.0, quad_, g.z);
    out.v[0].coeffs.row(0) = z0.v1.transpose();
    out.v[1].coeffs.row(0) = z0.v2.transpose();
    out.dz_v[0].coeffs.row(0) = z0.dv1.transpose();
    out.dz_v[1].coeffs.row(0) = z0.dv2.transpose();
    out.p.coeffs.row(0) = z0.p.transpose();
  }

  parallel_for(1, nt, [&](int m) {
    if (g.is_nyquist(m)) return;
    const double x1 = g.xi1(m), x2 = g.xi2(m), s = x1 * x1 + x2 * x2;
    const cd d1(0, x1), d2(0, x2);
    std::array<Eigen::VectorXcd, 9> f;
    Eigen::MatrixXcd ch = Eigen::MatrixXcd::Zero(nz, kChannels);
    if (has_src) {
      f = mode_profile(*F, m);
      ch = mode_channels(x1, x2, f);
    }
    const cd t3 = v0.v0[2](m);
    const cd td = -(d1 * v0.v0[0](m) + d2 * v0.v0[1](m));
    const cd tw = d1 * v0.v0[1](m) - d2 * v0.v0[0](m);
    if (ch.isZero(0) && t3 == cd(0) && td == cd(0) && tw == cd(0)) return;

    ModeRepresentation rep(roots_[m], coeffs_[m], quad_, g.z, std::move(ch));
    const Vec3c<double> rhs(t3 - rep.eval(0, 0, 0), -(td - rep.eval(0, 1, 0)), -(tw - rep.eval(1, 0, 0)));
    rep.set_homogeneous(boundary_coeffs(roots_[m], rhs).C);

    {
      const Eigen::VectorXcd v3 = rep.eval_all(0, 0), dv3 = rep.eval_all(0, 1), d2v3 = rep.eval_all(0, 2);
      const Eigen::VectorXcd w = rep.eval_all(1, 0), dw = rep.eval_all(1, 1);
      const Eigen::VectorXcd d3nl = rep.eval_all(0, 3, false);
      // same algebra as recover_horizontal / recover_pressure, column-wise
      const cd inv = 1.0 / (-s);
      out.v[0].coeffs.row(m) = ((-d1 * dv3 - d2 * w) * inv).transpose();
      out.v[1].coeffs.row(m) = ((-d2 * dv3 + d1 * w) * inv).transpose();
      out.v[2].coeffs.row(m) = v3.transpose();
      out.dz_v[0].coeffs.row(m) = ((-d1 * d2v3 - d2 * dw) * inv).transpose();
      out.dz_v[1].coeffs.row(m) = ((-d2 * d2v3 + d1 * dw) * inv).transpose();
      out.dz_v[2].coeffs.row(m) = dv3.transpose();
      out.omega.coeffs.row(m) = w.transpose();
      Eigen::VectorXcd p = (-w + d3nl - s * dv3) / s;
      if (has_src) p += f[8];
      out.p.coeffs.row(m) = p.transpose();
    }
    for (int j = 0; diag && j < nz; ++j) {
      const cd v3 = out.v[2].coeffs(m, j), dv3 = out.dz_v[2].coeffs(m, j), d2v3 = rep.eval(0, 2, j);
      const cd dw = rep.eval(1, 1, j);
      const cd v1 = out.v[0].coeffs(m, j), v2 = out.v[1].coeffs(m, j), p = out.p.coeffs(m, j);
      {
        // momentum residual with analytic z-derivatives (convolution + jump terms)
        const cd d3v3 = rep.eval(0, 3, j), d2w = rep.eval(1, 2, j);
        const cd d4nl = rep.eval(0, 4, j, false) + rep.jump_source(0, 3, j);
        auto [d2v1, d2v2] = recover_horizontal(x1, x2, d3v3, d2w);
        cd df33 = 0, df13 = 0, df23 = 0, f11 = 0, f12 = 0, f21 = 0, f22 = 0, f31 = 0, f32 = 0;
        if (has_src) {
          df13 = quad_.node_derivative_vec(f[2], j, 1);
          df23 = quad_.node_derivative_vec(f[5], j, 1);
          df33 = quad_.node_derivative_vec(f[8], j, 1);
          f11 = f[0](j); f12 = f[1](j); f21 = f[3](j); f22 = f[4](j); f31 = f[6](j); f32 = f[7](j);
        }
        const cd dp = df33 + (-dw + d4nl - s * d2v3) / s;
        const cd g1 = d1 * f11 + d2 * f12 + df13;
        const cd g2 = d1 * f21 + d2 * f22 + df23;
        const cd g3 = d1 * f31 + d2 * f32 + df33;
        const cd r1 = -v2 + d1 * p - (d2v1 - s * v1) - g1;
        const cd r2 = v1 + d2 * p - (d2v2 - s * v2) - g2;
        const cd r3 = dp - (d2v3 - s * v3) - g3;
        const double scale = std::max({std::abs(v1), std::abs(v2), std::abs(d1 * p), std::abs(d2v1), std::abs(s * v1),
                                       std::abs(g1), std::abs(g2), std::abs(g3), std::abs(dp), std::abs(d2v3),
                                       std::abs(d2v2), std::abs(s * v3)});
        res_mom[m] = std::max(res_mom[m], std::max({std::abs(r1), std::abs(r2), std::abs(r3)}));
        res_scale[m] = std::max(res_scale[m], scale);
        res_div[m] = std::max(res_div[m], std::abs(d1 * v1 + d2 * v2 + dv3));
      }
    }
    if (diag)
      bnd[m] = std::max({std::abs(out.v[0].coeffs(m, 0) - v0.v0[0](m)), std::abs(out.v[1].coeffs(m, 0) - v0.v0[1](m)),
                         std::abs(out.v[2].coeffs(m, 0) - v0.v0[2](m))});
  });

  if (diag) {
    double num = 0, scale = 0;
    for (int m = 0; m < nt; ++m) {
      num = std::max(num, res_mom[m]);
      scale = std::max(scale, res_scale[m]);
    }
    diag->momentum_residual = scale > 0 ? num / scale : 0.0;
    diag->divergence_residual = *std::max_element(res_div.begin(), res_div.end());
    bnd[0] = std::max(std::abs(out.v[0].coeffs(0, 0) - v0.v0[0](0)), std::abs(out.v[1].coeffs(0, 0) - v0.v0[1](0)));
    diag->boundary_error = *std::max_element(bnd.begin(), bnd.end());
  }
  return out;
}

std::array<Eigen::VectorXcd, 3> HalfspaceSolver::stress_trace_bottom(const FlowField& f) const {
  const SpectralGrid& g = grid_;
  Eigen::MatrixXd half_sq = Eigen::MatrixXd::Zero(g.n_modes, g.n_modes);
  for (int i = 0; i < 3; ++i) half_sq += 0.5 * to_physical(slice(f.v[i], g, 0)).cwiseAbs2();
  const Eigen::MatrixXcd ks = to_spectral(half_sq);
  std::array<Eigen::VectorXcd, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = f.dz_v[i].coeffs.col(0);
  for (int m = 0; m < g.n_total(); ++m) out[2](m) -= f.p.coeffs(m, 0) + ks(m % g.n_modes, m / g.n_modes);
  return out;
}

}  // namespace ekbl
