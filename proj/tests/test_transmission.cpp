#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/errors.hpp"
#include "ekbl/transmission.hpp"

#include <cmath>
#include <random>

using namespace ekbl;
using C = std::complex<double>;

namespace {

TransmissionGrids small_grids() {
  TransmissionGrids g;
  g.strip_points = 8;
  g.strip_levels = 16;
  g.top = 1.5;
  g.halfspace_modes = 16;
  g.halfspace_nz = 96;
  g.halfspace_zmax = 40;
  return g;
}

PlaneTrace zeros(int n) {
  PlaneTrace t;
  for (auto& c : t) c = Eigen::VectorXd::Zero(n * n);
  return t;
}

}  // namespace

TEST_CASE("zero data is a root of the transmission map") {
  const Transmission t(RoughnessProfile::sinusoidal(8, 2 * M_PI, 0.1), 2 * M_PI, small_grids());
  const PlaneTrace r = t.eval(zeros(8), zeros(8));
  for (const auto& c : r) CHECK(c.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("flat bottom: coupled flow is the global Ekman spiral") {
  const RoughnessProfile gamma = RoughnessProfile::flat(8, 2 * M_PI);
  const Transmission t(gamma, 2 * M_PI, small_grids());
  const double a1 = 1e-2, a2 = 3e-3;
  const FullFlow full = t.solve(tangent_bottom_data(gamma, a1, a2));
  CHECK(full.final_residual <= t.options().tol);
  const C k(1 / std::sqrt(2.0), 1 / std::sqrt(2.0));
  double err = 0;
  const auto& sg = t.strip().grid();
  for (int l = 0; l < sg.levels; ++l) {
    const C w = C(a1, a2) * std::exp(-k * sg.y3(0, l));
    err = std::max({err, std::abs(full.lower.u[0](0, l) - w.real()), std::abs(full.lower.u[1](0, l) - w.imag())});
  }
  const auto& ug = t.halfspace().grid();
  for (int j = 0; j < ug.n_z(); ++j) {
    const C w = C(a1, a2) * std::exp(-k * (ug.z(j) + full.top));
    err = std::max(err, std::abs(full.upper.v[0].coeffs(0, j) + C(0, 1) * full.upper.v[1].coeffs(0, j) - w));
  }
  CHECK(err < 1e-6 * std::hypot(a1, a2));
  CHECK(full.velocity_jump < 1e-9);
}

TEST_CASE("sinusoidal bottom: interface jumps vanish") {
  const RoughnessProfile gamma = RoughnessProfile::sinusoidal(8, 2 * M_PI, 0.05);
  const Transmission t(gamma, 2 * M_PI, small_grids());
  const FullFlow full = t.solve(tangent_bottom_data(gamma, 1e-2, 0.0));
  CHECK(full.velocity_jump <= 1e-6);
  CHECK(full.stress_jump <= 1e-6);
  CHECK(full.newton_history.size() <= 12);
  CHECK(full.weighted_norm > 0);
  CHECK(full.compat_defect < 1e-6 * full.phi_norm);
}

TEST_CASE("trace padding round trip") {
  const Transmission t(RoughnessProfile::flat(8, 2 * M_PI), 2 * M_PI, small_grids());
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(64);
  for (auto& v : x) v = nd(rng);
  const Eigen::VectorXcd big = t.pad_trace(x);
  CHECK(big.size() == 256);
  CHECK((t.truncate_trace(big) - x).cwiseAbs().maxCoeff() < 1e-13);
  // the mean is carried unchanged
  CHECK(std::abs(big(0) - x.mean()) < 1e-14);
}

TEST_CASE("flat preconditioner blocks are invertible") {
  const Transmission t(RoughnessProfile::flat(8, 2 * M_PI), 2 * M_PI, small_grids());
  for (int m = 0; m < 64; ++m) CHECK(std::abs(t.flat_jacobian(m).determinant()) > 1e-8);
}

TEST_CASE("tangent bottom data") {
  const RoughnessProfile gamma = RoughnessProfile::sinusoidal(8, 2 * M_PI, 0.2);
  const PlaneTrace phi = tangent_bottom_data(gamma, 0.3, -0.2);
  const auto grad = gamma.gradient();
  for (int p = 0; p < 64; ++p) {
    CHECK(phi[0](p) == 0.3);
    CHECK(phi[1](p) == -0.2);
    CHECK(phi[2](p) == doctest::Approx(0.3 * grad[0](p) - 0.2 * grad[1](p)).epsilon(1e-14));
  }
}

TEST_CASE("non-tangent bottom data is rejected") {
  // tangent data carries no net flux, so the interface mean of v3 stays at round-off;
  // a normal component is refused before any solve
  const RoughnessProfile gamma = RoughnessProfile::flat(8, 2 * M_PI);
  const Transmission t(gamma, 2 * M_PI, small_grids());
  PlaneTrace phi = zeros(8);
  phi[2].setConstant(1e-2);
  try {
    t.eval(phi, zeros(8));
    FAIL("expected INVALID_INPUT");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
  }
}

TEST_CASE("decay profile of the coupled flow") {
  const RoughnessProfile gamma = RoughnessProfile::flat(8, 2 * M_PI);
  const Transmission t(gamma, 2 * M_PI, small_grids());
  const FullFlow full = t.solve(tangent_bottom_data(gamma, 1e-2, 0.0));
  const DecayProfile prof = decay_profile(full, t.halfspace().grid());
  REQUIRE(prof.height.size() == t.halfspace().grid().n_z());
  CHECK(prof.height(0) == doctest::Approx(full.top));
  for (int j = 1; j < prof.sup.size(); ++j) CHECK(prof.sup(j) <= prof.sup(j - 1) * (1 + 1e-12) + 1e-18);
}
