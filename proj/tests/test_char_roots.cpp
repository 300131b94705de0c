#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/char_roots.hpp"

#include <cmath>
#include <random>

using namespace ekbl;
using C = std::complex<double>;

namespace {

// Real root of Y^3 + Y + q = 0 by Cardano, independent of the trigonometric form.
// The two cube roots multiply to -1/3; taking the larger one avoids cancellation.
double cardano_real_root(double q) {
  const double disc = std::sqrt(q * q / 4.0 + 1.0 / 27.0);
  const double u = std::cbrt(-q / 2.0 - disc);
  return u - 1.0 / (3.0 * u);
}

}  // namespace

TEST_CASE("resolvent real root matches Cardano") {
  for (double q : {1e-8, 1e-3, 0.5, 1.0, 7.0, 1e3, 1e6}) {
    const auto r = solve_cubic_resolvent(q);
    // the oracle itself cancels for small q, hence the absolute floor
    CHECK(std::abs(r.real_root - cardano_real_root(q)) < 1e-14 + 1e-12 * std::abs(r.real_root));
    // the complex pair closes the cubic: sum of roots is zero, product is -q
    const C sum = r.real_root + r.upper + r.lower;
    const C prod = r.real_root * r.upper * r.lower;
    CHECK(std::abs(sum) < 1e-12 * (1 + std::abs(r.real_root)));
    CHECK(std::abs(prod + q) < 1e-10 * (1 + q));
  }
}

TEST_CASE("resolvent at zero frequency is 0, +-i") {
  const auto r = solve_cubic_resolvent(0.0);
  CHECK(r.real_root == 0.0);
  CHECK(r.upper == C(0, 1));
  CHECK(r.lower == C(0, -1));
}

TEST_CASE("unit frequency roots against the closed form") {
  // xi = (1, 0): Y = cardano(1), lambda_1 = sqrt(-Y^3)
  const double y = cardano_real_root(1.0);
  const auto r = char_roots(1.0, 0.0);
  CHECK(r.lambda(0).real() == doctest::Approx(std::sqrt(-y * y * y)).epsilon(1e-13));
  CHECK(std::abs(r.lambda(0).imag()) == 0.0);
  // frozen value, 1.0 = |xi|^2
  CHECK(r.lambda(0).real() == doctest::Approx(0.5636241621612585).epsilon(1e-12));
}

TEST_CASE("sextic residual across six decades") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> logk(-3.0, 3.0), ang(0.0, 2.0 * M_PI);
  for (int s = 0; s < 1000; ++s) {
    const double k = std::pow(10.0, logk(rng)), t = ang(rng);
    const auto r = char_roots(k * std::cos(t), k * std::sin(t));
    const auto res = sextic_residual(r);
    CHECK(res.maxCoeff() <= 1e-12 * std::max(1.0, std::pow(k, 6)));
  }
}

TEST_CASE("root structure: positive real parts and a conjugate pair") {
  for (double k : {1e-6, 1e-3, 0.3, 1.0, 5.0, 200.0}) {
    const auto r = char_roots(k, 0.0);
    for (int i = 0; i < 3; ++i) CHECK(r.lambda(i).real() > 0);
    CHECK(r.lambda(0).imag() == 0.0);
    CHECK(r.lambda(1).imag() > 0);
    CHECK(std::abs(r.lambda(2) - std::conj(r.lambda(1))) == 0.0);
    // roots depend on |xi| only
    const auto rot = char_roots(k / std::sqrt(2.0), k / std::sqrt(2.0));
    CHECK(std::abs(rot.lambda(1) - r.lambda(1)) < 1e-12 * std::max(1.0, k));
  }
}

TEST_CASE("low frequency limits") {
  const C e = std::polar(1.0, M_PI / 4);
  for (double k : {1e-2, 1e-3}) {
    const auto r = char_roots(k, 0.0);
    CHECK(std::abs(r.lambda(0).real() / (k * k * k) - 1.0) < 10 * k * k);
    CHECK(std::abs(r.lambda(1) - e) < 10 * k * k);
  }
  // below the switch the asymptotic branch is used
  const auto tiny = char_roots(1e-10, 0.0);
  CHECK(std::abs(tiny.lambda(1) - e) < 1e-15);
}

TEST_CASE("high frequency expansion") {
  for (double k : {1e2, 1e3}) {
    const auto r = char_roots(k, 0.0);
    const auto a = asymptotic_roots(k, 0.0, Regime::high);
    // next correction is O(k^{-5/3})
    CHECK(std::abs(r.lambda(0) - a.lambda(0)) < 2.0 * std::pow(k, -5.0 / 3.0));
    CHECK(std::abs(r.lambda(1) - a.lambda(1)) < 2.0 * std::pow(k, -5.0 / 3.0));
  }
}

TEST_CASE("invalid frequencies") {
  CHECK_THROWS_AS(solve_cubic_resolvent(-1.0), std::domain_error);
  CHECK_THROWS_AS(char_roots(std::nan(""), 0.0), std::domain_error);
  CHECK_THROWS_AS(asymptotic_roots(0.0, 0.0, Regime::high), std::domain_error);
}

TEST_CASE("long double instantiation agrees") {
  const auto rd = char_roots(0.7, 0.2);
  const auto rl = char_roots<long double>(0.7L, 0.2L);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(rd.lambda(i).real() - static_cast<double>(rl.lambda(i).real())) < 1e-14);
    CHECK(std::abs(rd.lambda(i).imag() - static_cast<double>(rl.lambda(i).imag())) < 1e-14);
  }
}
