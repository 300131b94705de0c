#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/errors.hpp"
#include "ekbl/halfspace.hpp"
#include "ekbl/nonlinear.hpp"
#include "ekbl/verify.hpp"

#include <cmath>

using namespace ekbl;

namespace {

// c1 e^{-z} + c2 e^{-2z}
struct Expo {
  cd c1, c2;
  cd at(double z) const { return c1 * std::exp(-z) + c2 * std::exp(-2 * z); }
  Expo d() const { return {-c1, -2.0 * c2}; }
  Expo operator+(Expo o) const { return {c1 + o.c1, c2 + o.c2}; }
  Expo operator-(Expo o) const { return {c1 - o.c1, c2 - o.c2}; }
  Expo operator*(cd a) const { return {a * c1, a * c2}; }
  // antiderivative vanishing at infinity
  Expo tail() const { return {-c1, -c2 / 2.0}; }
};

// Manufactured single-mode solution at xi = (1, 0): v3 = a, v1 from the divergence, v2 = b,
// pressure c.  The source enters through the vertical components F_i3 = tail(f_i).
double manufactured_error(int nz) {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 8, nz);
  HalfspaceSolver hs(g);
  const cd I(0, 1);
  const double xi = 1, xi_sq = 1;
  Expo a{1, -1}, b{0, 1}, c{1, 0};
  Expo v1 = a.d() * (I / xi), v2 = b, v3 = a;
  Expo f1 = (b * (-1.0)) + c * (I * xi) - (v1.d().d() - v1 * xi_sq);
  Expo f2 = v1 - (b.d().d() - b * xi_sq);
  Expo f3 = c.d() - (a.d().d() - a * xi_sq);
  SourceTensor F(g);
  const int m = g.mode_of(1, 0);
  for (int j = 0; j < g.n_z(); ++j) {
    const double z = g.z(j);
    F(0, 2).coeffs(m, j) = f1.tail().at(z);
    F(1, 2).coeffs(m, j) = f2.tail().at(z);
    F(2, 2).coeffs(m, j) = f3.tail().at(z);
  }
  BoundaryData bd = BoundaryData::zeros(g);
  bd.v0[0](m) = v1.at(0);
  bd.v0[1](m) = v2.at(0);
  bd.v0[2](m) = v3.at(0);
  HalfspaceDiagnostics d;
  const FlowField out = hs.solve(bd, &F, &d);
  double e = 0;
  for (int j = 0; j < g.n_z(); ++j) {
    const double z = g.z(j);
    e = std::max({e, std::abs(out.v[0].coeffs(m, j) - v1.at(z)), std::abs(out.v[1].coeffs(m, j) - v2.at(z)),
                  std::abs(out.v[2].coeffs(m, j) - v3.at(z))});
  }
  return e;
}

}  // namespace

TEST_CASE("flat data reproduces the Ekman spiral") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 16, 256);
  HalfspaceSolver hs(g);
  const double phi1 = 0.7, phi2 = -0.4;
  HalfspaceDiagnostics d;
  const FlowField u = hs.solve(BoundaryData::uniform(g, phi1, phi2), nullptr, &d);
  double err = 0;
  for (int j = 0; j < g.n_z(); ++j) {
    auto [r1, r2] = ekman_reference(phi1, phi2, g.z(j));
    err = std::max({err, std::abs(u.v[0].coeffs(0, j) - r1), std::abs(u.v[1].coeffs(0, j) - r2),
                    std::abs(u.v[2].coeffs(0, j))});
  }
  CHECK(err / std::hypot(phi1, phi2) < 1e-8);
  CHECK(d.boundary_error < 1e-12);
}

TEST_CASE("manufactured solution converges at second order or better") {
  const double e128 = manufactured_error(128), e256 = manufactured_error(256);
  CHECK(e256 < 1e-6);
  CHECK(std::log2(e128 / e256) >= 2.0);
}

TEST_CASE("random data: residuals and real-valued output") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 16, 128);
  HalfspaceSolver hs(g);
  const BoundaryData v0 = random_boundary(g, 0.1, 4, 3);
  const SourceTensor F = random_source(g, 0.05, 8, 2);
  HalfspaceDiagnostics d;
  const FlowField u = hs.solve(v0, &F, &d);
  CHECK(d.momentum_residual < 1e-8);
  CHECK(d.divergence_residual < 1e-8);
  CHECK(d.boundary_error < 1e-12);
  for (int c = 0; c < 3; ++c) CHECK(u.v[c].hermitian_defect(g) < 1e-12);
  CHECK(u.p.hermitian_defect(g) < 1e-12);
}

TEST_CASE("superposition") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 16, 96);
  HalfspaceSolver hs(g);
  const BoundaryData a = random_boundary(g, 0.2, 1), b = random_boundary(g, 0.3, 2);
  const SourceTensor Fa = random_source(g, 0.1, 3), Fb = random_source(g, 0.1, 4);
  BoundaryData ab = a;
  for (int c = 0; c < 3; ++c) ab.v0[c] = 2.0 * a.v0[c] - 0.5 * b.v0[c];
  for (int c = 0; c < 2; ++c) ab.nu[c] = 2.0 * a.nu[c] - 0.5 * b.nu[c];
  SourceTensor Fab(g);
  for (int c = 0; c < 9; ++c) Fab.comp[c].coeffs = 2.0 * Fa.comp[c].coeffs - 0.5 * Fb.comp[c].coeffs;
  FlowField ua = hs.solve(a, &Fa), ub = hs.solve(b, &Fb);
  const FlowField uab = hs.solve(ab, &Fab);
  ua *= 2.0;
  ub *= -0.5;
  ua += ub;
  double diff = 0, scale = 0;
  for (int c = 0; c < 3; ++c) {
    diff = std::max(diff, (ua.v[c].coeffs - uab.v[c].coeffs).cwiseAbs().maxCoeff());
    scale = std::max(scale, uab.v[c].coeffs.cwiseAbs().maxCoeff());
  }
  CHECK(diff <= 1e-10 * scale);
}

TEST_CASE("flat data decays at the Ekman rate") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 8, 256);
  HalfspaceSolver hs(g);
  const FlowField u = hs.solve(BoundaryData::uniform(g, 1.0, 0.0), nullptr);
  const ExponentialFit fit = fit_exponential(g.z, sup_profile(u, g), 1.0, 30.0);
  CHECK(fit.rate == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("nonzero mean vertical trace is incompatible") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 8, 32);
  Eigen::VectorXcd v3 = Eigen::VectorXcd::Zero(g.n_total());
  v3(0) = 1e-3;
  try {
    compatibility_potentials(g, v3);
    FAIL("expected COMPAT_VIOLATED");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::compat_violated);
  }
}

TEST_CASE("compatibility potentials reproduce the vertical trace") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 16, 32);
  const BoundaryData b = random_boundary(g, 1.0, 6);
  CHECK(b.compatibility_defect(g) < 1e-14);
}
