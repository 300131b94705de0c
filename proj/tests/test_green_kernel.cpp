#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/green_kernel.hpp"

#include <random>

using namespace ekbl;
using C = std::complex<double>;

namespace {

struct Sample {
  CharRoots<double> r;
  InteriorCoeffs<double> c;
  GreenBlocks<double> g;
};

std::vector<Sample> random_frequencies(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> logk(-2.0, 1.5), ang(0.0, 2.0 * M_PI);
  std::vector<Sample> out;
  for (int s = 0; s < n; ++s) {
    const double k = std::pow(10.0, logk(rng)), t = ang(rng);
    Sample x;
    x.r = char_roots(k * std::cos(t), k * std::sin(t));
    x.c = interior_coeffs(x.r);
    x.g = green_blocks(x.r, x.c);
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("jump relations of both columns") {
  // entries (row, col): (0,0) = G11, (1,0) = G21, (0,1) = G12, (1,1) = G22
  for (const auto& s : random_frequencies(100, 5)) {
    std::array<Mat2c<double>, 4> jump;
    for (int n = 0; n < 4; ++n) jump[n] = green_jump(s.r, s.g, n);
    const double scale = 1e-10 * std::max(1.0, std::pow(s.r.xi_sq, 2));
    CHECK(std::abs(jump[0](1, 0)) < scale);
    CHECK(std::abs(jump[1](1, 0) - 1.0) < scale);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(jump[k](0, 0)) < scale);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(jump[k](1, 1)) < scale);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(jump[k](0, 1)) < scale);
    CHECK(std::abs(jump[3](0, 1) - 1.0) < scale);
  }
}

TEST_CASE("interior coefficients against the closed forms") {
  for (const auto& s : random_frequencies(100, 9)) {
    const auto& l = s.r.lambda;
    const double x = s.r.xi_sq;
    C y[3], l2[3];
    for (int i = 0; i < 3; ++i) {
      l2[i] = l(i) * l(i);
      y[i] = l2[i] - x;
    }
    const C d1 = x * (l2[1] - l2[0]) * (l2[2] - l2[0]) * (1.0 / (y[0] * y[1]) - 1.0 / (y[0] * y[2]));
    const C a[3] = {-(l2[2] - l2[1]) / (2.0 * d1), -(l2[0] - l2[2]) / (2.0 * d1), -(l2[1] - l2[0]) / (2.0 * d1)};
    Mat3c<double> m;
    for (int i = 0; i < 3; ++i) {
      m(0, i) = 1.0 / y[i];
      m(1, i) = 1.0;
      m(2, i) = l2[i];
    }
    const C d2 = -l(0) * l(1) * l(2) * m.determinant();
    const C b[3] = {l(1) * l(2) / (2.0 * d2) * (1.0 / y[1] - 1.0 / y[2]),
                    l(0) * l(2) / (2.0 * d2) * (1.0 / y[2] - 1.0 / y[0]),
                    l(0) * l(1) / (2.0 * d2) * (1.0 / y[0] - 1.0 / y[1])};
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(s.c.A(i) - a[i]) <= 1e-8 * std::abs(a[i]));
      CHECK(std::abs(s.c.B(i) - b[i]) <= 1e-8 * std::abs(b[i]));
    }
  }
}

TEST_CASE("each column solves the homogeneous system away from the source") {
  // (dz^2 - |xi|^2)^2 G1 - dz G2 = 0 and dz G1 + (dz^2 - |xi|^2) G2 = 0 for z != 0,
  // checked per exponential: lambda-derivatives replace dz.
  for (const auto& s : random_frequencies(20, 13)) {
    for (int side = 0; side < 2; ++side)
      for (int col = 0; col < 2; ++col) {
        C e1 = 0, e2 = 0;
        for (int i = 0; i < 3; ++i) {
          const auto& blk = side == 0 ? s.g.plus[i] : s.g.minus[i];
          const C d = side == 0 ? -s.r.lambda(i) : s.r.lambda(i);
          const C q = d * d - s.r.xi_sq;
          e1 += q * q * blk(0, col) - d * blk(1, col);
          e2 += d * blk(0, col) + q * blk(1, col);
        }
        CHECK(std::abs(e1) < 1e-9 * std::max(1.0, std::pow(s.r.xi_sq, 3)));
        CHECK(std::abs(e2) < 1e-9 * std::max(1.0, std::pow(s.r.xi_sq, 3)));
      }
  }
}

TEST_CASE("green_eval continuity and decay") {
  const auto r = char_roots(0.8, -0.3);
  const auto c = interior_coeffs(r);
  const auto up = green_eval(r, c, 1e-12, 0, Side::above);
  const auto dn = green_eval(r, c, -1e-12, 0, Side::below);
  CHECK((up.entries - dn.entries).cwiseAbs().maxCoeff() < 1e-10);
  const auto far = green_eval(r, c, 60.0, 0);
  CHECK(far.entries.cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(green_eval(r, c, 1.0, 4), std::invalid_argument);
}

TEST_CASE("zero frequency is rejected") {
  const auto r = char_roots(0.0, 0.0);
  CHECK_THROWS_AS(interior_coeffs(r), std::domain_error);
}

TEST_CASE("boundary coefficients reproduce the boundary rows") {
  const auto r = char_roots(1.3, 0.4);
  const Vec3c<double> rhs(C(0.3, -0.1), C(1.2, 0.0), C(-0.5, 0.7));
  const auto bc = boundary_coeffs(r, rhs);
  C s0 = 0, s1 = 0, s2 = 0;
  for (int i = 0; i < 3; ++i) {
    s0 += bc.C(i);
    s1 += r.lambda(i) * bc.C(i);
    s2 += r.omega(i) * bc.C(i);
  }
  CHECK(std::abs(s0 - rhs(0)) < 1e-12);
  CHECK(std::abs(s1 - rhs(1)) < 1e-12);
  CHECK(std::abs(s2 - rhs(2)) < 1e-12);
  CHECK(std::abs(bc.D3) > 0);
}
