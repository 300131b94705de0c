#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/errors.hpp"
#include "ekbl/strip.hpp"
#include "ekbl/transmission.hpp"

#include <cmath>

using namespace ekbl;
using C = std::complex<double>;

namespace {

PlaneTrace zeros(int n) {
  PlaneTrace t;
  for (auto& c : t) c = Eigen::VectorXd::Zero(n * n);
  return t;
}

double max_abs(const PlaneTrace& t) {
  double m = 0;
  for (const auto& c : t) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("flat strip with stress-free top is a finite Ekman layer") {
  // w = v1 + i v2 solves w'' = i w, w(0) = phi, w'(M) = 0
  const int n = 8;
  const double top = 1.5;
  StripSolver solver(RoughnessProfile::flat(n, 2 * M_PI), top, 24);
  const double a1 = 0.03, a2 = -0.01;
  PlaneTrace phi = zeros(n);
  phi[0].setConstant(a1);
  phi[1].setConstant(a2);
  StripReport rep;
  const StripField f = solver.solve(phi, zeros(n), &rep);
  REQUIRE(rep.converged);
  const C mu = std::polar(1.0, M_PI / 4);
  double err = 0;
  for (int l = 0; l < solver.grid().levels; ++l) {
    const double y3 = solver.grid().y3(0, l);
    const C w = C(a1, a2) * std::cosh(mu * (top - y3)) / std::cosh(mu * top);
    for (int p = 0; p < n * n; ++p)
      err = std::max({err, std::abs(f.u[0](p, l) - w.real()), std::abs(f.u[1](p, l) - w.imag()),
                      std::abs(f.u[2](p, l))});
  }
  CHECK(err < 1e-10);
  // vertical balance leaves p + |v|^2 / 2 = 0 at the top, with p constant
  const PlaneTrace vt = solver.velocity_trace_top(f);
  const double kinetic = 0.5 * (vt[0](0) * vt[0](0) + vt[1](0) * vt[1](0));
  CHECK(std::abs(solver.sample_pressure(f, 0, 1.0) + kinetic) < 1e-10);
  CHECK(std::abs(solver.sample_pressure(f, 5, 0.0) + kinetic) < 1e-10);
}

TEST_CASE("sinusoidal bottom converges with small residuals") {
  const int n = 16;
  const RoughnessProfile gamma = RoughnessProfile::sinusoidal(n, 2 * M_PI, 0.1);
  StripSolver solver(gamma, gamma.sup_gamma + 1.0, 16);
  const PlaneTrace phi = tangent_bottom_data(gamma, 0.02, 0.01);
  CHECK(solver.tangency_defect(phi) < 1e-14);
  StripReport rep;
  const StripField f = solver.solve(phi, zeros(n), &rep);
  CHECK(rep.converged);
  CHECK(rep.residuals.max() < 1e-10);
  // boundary data is reproduced and the top stress vanishes
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < n * n; ++p) CHECK(std::abs(f.u[c](p, 0) - phi[c](p)) < 1e-10);
  CHECK(max_abs(solver.stress_trace_top(f)) < 1e-9);
}

TEST_CASE("prescribed top stress is matched") {
  const int n = 8;
  const RoughnessProfile gamma = RoughnessProfile::sinusoidal(n, 2 * M_PI, 0.05, 1, 0);
  StripSolver solver(gamma, 1.2, 16);
  PlaneTrace psi = zeros(n);
  for (int p = 0; p < n * n; ++p) psi[0](p) = 0.01 * std::cos(2 * M_PI * (p % n) / n);
  StripReport rep;
  const StripField f = solver.solve(zeros(n), psi, &rep);
  REQUIRE(rep.converged);
  const PlaneTrace s = solver.stress_trace_top(f);
  for (int c = 0; c < 3; ++c) CHECK((s[c] - psi[c]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero data gives the zero flow") {
  const int n = 8;
  StripSolver solver(RoughnessProfile::filtered_noise(n, 2 * M_PI, 0.1, 3), 1.5, 12);
  StripReport rep;
  const StripField f = solver.solve(zeros(n), zeros(n), &rep);
  CHECK(rep.converged);
  for (int c = 0; c < 3; ++c) CHECK(f.u[c].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interface below the bottom is rejected") {
  const RoughnessProfile gamma = RoughnessProfile::sinusoidal(8, 2 * M_PI, 0.5);
  try {
    StripSolver solver(gamma, 0.4, 12);
    FAIL("expected INVALID_INPUT");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
  }
}

TEST_CASE("roughness profiles") {
  const RoughnessProfile s = RoughnessProfile::sinusoidal(16, 2 * M_PI, 0.2, 1, 1);
  CHECK(s.sup_gamma == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.lipschitz_bound > 0);
  const RoughnessProfile a = RoughnessProfile::filtered_noise(16, 2 * M_PI, 0.1, 7);
  const RoughnessProfile b = RoughnessProfile::filtered_noise(16, 2 * M_PI, 0.1, 7);
  CHECK((a.gamma - b.gamma).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.gamma.cwiseAbs().maxCoeff() == doctest::Approx(0.1).epsilon(1e-12));
  // spectral gradient of sin y1 sin y2
  const auto grad = s.gradient();
  const double h = 2 * M_PI / 16;
  double err = 0;
  for (int p = 0; p < 256; ++p) {
    const double y1 = (p % 16) * h, y2 = (p / 16) * h;
    err = std::max(err, std::abs(grad[0](p) - 0.2 * std::cos(y1) * std::sin(y2)));
    err = std::max(err, std::abs(grad[1](p) - 0.2 * std::sin(y1) * std::cos(y2)));
  }
  CHECK(err < 1e-13);
  CHECK(s.lipschitz_bound <= 0.2 + 1e-12);
}
