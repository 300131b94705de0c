#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/errors.hpp"
#include "ekbl/nonlinear.hpp"

#include <algorithm>
#include <cmath>

using namespace ekbl;

namespace {

const SpectralGrid& grid() {
  static const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 16, 128);
  return g;
}
const HalfspaceSolver& solver() {
  static const HalfspaceSolver hs(grid());
  return hs;
}

double distance_to_linear(const BoundaryData& v0, const FlowField& u) {
  FlowField lin = solver().solve(v0, nullptr);
  lin *= -1.0;
  lin += u;
  return flow_norm(lin, grid());
}

}  // namespace

TEST_CASE("horizontally uniform flow is an exact nonlinear solution") {
  // u . grad u vanishes for (v1(z), v2(z), 0), so the Ekman profile is a fixed point
  const BoundaryData v0 = BoundaryData::uniform(grid(), 1e-2, 0.0);
  auto [u, rep] = solve_nsc_halfspace(solver(), v0);
  CHECK(rep.converged);
  CHECK(rep.iterates <= 15);
  CHECK(distance_to_linear(v0, u) < 1e-14);
}

TEST_CASE("random small data contracts geometrically") {
  const BoundaryData v0 = random_boundary(grid(), 1e-2, 3);
  PicardOptions opt;
  opt.tol = 1e-12;
  auto [u, rep] = solve_nsc_halfspace(solver(), v0, opt);
  REQUIRE(rep.converged);
  CHECK(rep.iterates <= 15);
  REQUIRE(!rep.ratios.empty());
  CHECK(*std::max_element(rep.ratios.begin(), rep.ratios.end()) < 0.5);
  CHECK(rep.fixed_point_defect < 1e-10);
}

TEST_CASE("departure from the linear solution is quadratic in the amplitude") {
  double constant[2];
  const double eps[2] = {1e-2, 5e-3};
  for (int i = 0; i < 2; ++i) {
    const BoundaryData v0 = random_boundary(grid(), eps[i], 3);
    PicardOptions opt;
    opt.tol = 1e-13;
    auto [u, rep] = solve_nsc_halfspace(solver(), v0, opt);
    constant[i] = distance_to_linear(v0, u) / (eps[i] * eps[i]);
  }
  CHECK(constant[0] > 0);
  CHECK(constant[1] == doctest::Approx(constant[0]).epsilon(0.1));
}

TEST_CASE("large data raises SMALLNESS_VIOLATED") {
  const ContractionConstant c = estimate_c0(solver(), 4);
  CHECK(c.linear > 0);
  CHECK(c.quadratic > 0);
  CHECK(c.c0 >= std::max(c.linear, c.quadratic));
  const BoundaryData v0 = random_boundary(grid(), 10.0 * c.admissible_delta(), 3);
  try {
    solve_nsc_halfspace(solver(), v0);
    FAIL("expected SMALLNESS_VIOLATED");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::smallness_violated);
  }
}

TEST_CASE("contraction radius solves the ball quadratic") {
  const double c0 = 1.3, delta = 0.1;
  auto [lo, hi] = contraction_radius(c0, delta);
  CHECK(lo < hi);
  CHECK(c0 * lo * lo - lo + c0 * delta == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(c0 * hi * hi - hi + c0 * delta == doctest::Approx(0.0).epsilon(1e-14));
  try {
    contraction_radius(1.0, 0.3);
    FAIL("expected SMALLNESS_VIOLATED");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::smallness_violated);
  }
}

TEST_CASE("convective source is symmetric and real") {
  const BoundaryData v0 = random_boundary(grid(), 0.1, 5);
  const FlowField u = solver().solve(v0, nullptr);
  const SourceTensor F = convective_source(u, grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK((F(i, j).coeffs - F(j, i).coeffs).cwiseAbs().maxCoeff() == 0.0);
      CHECK(F(i, j).hermitian_defect(grid()) < 1e-14);
    }
  // F_33 = -v3^2 <= 0 pointwise, so its mean is nonpositive
  for (int j = 0; j < grid().n_z(); ++j) CHECK(F(2, 2).coeffs(0, j).real() <= 1e-18);
}

TEST_CASE("random source scaling") {
  const SourceTensor F = random_source(grid(), 0.25, 2);
  double sup = 0;
  for (int j = 0; j < grid().n_z(); ++j) {
    Eigen::MatrixXd mag2 = Eigen::MatrixXd::Zero(grid().n_modes, grid().n_modes);
    for (int c = 0; c < 9; ++c) mag2 += to_physical(slice(F.comp[c], grid(), j)).cwiseAbs2();
    sup = std::max(sup, std::pow(1.0 + grid().z(j), 2.0 / 3.0) * std::sqrt(mag2.maxCoeff()));
  }
  CHECK(sup == doctest::Approx(0.25).epsilon(1e-12));
  for (int c = 0; c < 9; ++c) CHECK(F.comp[c].hermitian_defect(grid()) < 1e-15);
}
