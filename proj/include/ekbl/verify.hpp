/**
 * @file verify.hpp
 * @brief Numerical checks of the decay and integral estimates behind the solvers.
 *
 * Fits are reported with their residuals; pass/fail thresholds belong to the tests.
 */
#pragma once

#include <Eigen/Dense>

#include "json.hpp"

#include <complex>
#include <functional>
#include <utility>
#include <vector>

namespace ekbl {

/// norm ~ constant * (1 + z)^exponent on [z_lo, z_hi].
struct DecayFit {
  double exponent = 0;
  double constant = 0;
  double z_lo = 0, z_hi = 0;
  double residual = 0;  // max |log deviation|
  int samples = 0;
  nlohmann::json to_json() const;
};

/// norm ~ constant * exp(-rate z).
struct ExponentialFit {
  double rate = 0;
  double constant = 0;
  double residual = 0;
  int samples = 0;
  nlohmann::json to_json() const;
};

/// Least squares of log(norm) against log(1 + z); throws std::domain_error on nonpositive samples.
DecayFit fit_decay(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double z_lo, double z_hi);
/// Same after dividing by ln(2 + z), i.e. norm ~ C (1+z)^p ln(2+z).
DecayFit fit_decay_with_log(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double z_lo, double z_hi);
/// Least squares of log(norm) against z.
ExponentialFit fit_exponential(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double z_lo, double z_hi);

// ---------------------------------------------------------------- roots

struct RootAsymptoticsReport {
  int samples = 0;
  double max_scaled_residual = 0;   // max |sextic| / max(1, |xi|^6)
  double low_order = 0;             // slope of |l1 - |xi|^3| vs |xi| near 0
  double low_order_complex = 0;     // same for l2, l3 against e^{+-i pi/4}
  double high_order = 0;            // slope of |l1 - (|xi| - |xi|^{-1/3}/2)| for large |xi|
  double high_order_complex = 0;
  DecayFit low_fit, high_fit;
  nlohmann::json to_json() const;
};

/// Log-uniform |xi| in [1e-3, 1e3] with random directions (fixed seed).
RootAsymptoticsReport root_asymptotics_check(int samples = 1000, unsigned seed = 11);

// ---------------------------------------------------------------- kernels

/// P(xi) = xi1^a xi2^b |xi|^beta, alpha = a + b + beta.
struct KernelSymbol {
  int a = 2;
  int b = 0;
  double beta = -1.0;
  double alpha() const { return a + b + beta; }
};

struct KernelQuadrature {
  double chi_radius = 4.0;
  // chi = 1 on |xi| <= plateau * R.  The low-frequency kernels use a bump with no
  // plateau (its Fourier tail is shortest); the high-frequency lemma needs chi = 1 on a ball.
  double low_plateau = 0.0;
  double high_plateau = 0.5;
  int angular_nodes = 256;
  int panel_nodes = 32;
  int radial_panels = 40;     // geometric refinement towards xi = 0
  double high_cutoff = 60.0;  // |xi| truncation of the high-frequency kernels
};

/// K^j(x, z) = int e^{i x.xi} chi(xi) P(xi) e^{-l_j(xi) z} dxi over the chi support.
/// `high_power` >= 0 selects the high-frequency kernel (1+|xi|^2)^{-n} (1-chi) P e^{-l_j z} instead.
std::complex<double> kernel_value(const KernelSymbol& P, int root, double x1, double x2, double z,
                                  const KernelQuadrature& q = {}, int high_power = -1);

/// Smooth cut-off: 1 on |xi| <= plateau R, 0 for |xi| >= R.
double chi_cutoff(double rho, double radius, double plateau);

struct KernelDecayReport {
  double alpha = 0;
  double target_exponent = 0;      // 2 + alpha
  DecayFit envelope_fit;           // |K^1| vs s = |x| + z^{1/3}, window s >= 5
  DecayFit spatial_fit;            // z = 0 slice, |x| -> infinity
  double vertical_exponent = 0;    // x = 0 slice against z^{1/3}
  std::array<double, 2> delta{};   // fitted e^{-delta z} rates of K^2, K^3
  double min_re_lambda23 = 0;      // on supp chi
  std::vector<std::pair<double, double>> envelope_samples;  // (s, |K^1|)
  nlohmann::json to_json() const;
};

KernelDecayReport kernel_decay_check(const KernelSymbol& P, const KernelQuadrature& q = {},
                                     std::vector<double> z_list = {}, std::vector<double> x_list = {});

struct HighFreqReport {
  std::array<double, 3> delta{};          // fitted vertical rates of K_{n,j}
  std::array<double, 3> spatial_exponent{};  // tail exponent at fixed z (inf when below the floor)
  std::array<double, 3> weighted_sup{};   // sup_x (1+|x|)^3 |K_{n,j}| / |K_{n,j}(0)|
  double min_re_lambda = 0;               // over |xi| >= R/2
  int power = 2;
  nlohmann::json to_json() const;
};

HighFreqReport highfreq_kernel_check(const KernelSymbol& P, const KernelQuadrature& q = {}, int power = 2,
                                     std::vector<double> z_list = {});

// ---------------------------------------------------------------- integrals

/// Adaptive Gauss-Kronrod (7/15) on [a, b]; throws QUADRATURE_FAIL when the
/// interval budget runs out before reaching the tolerance.
double adaptive_integral(const std::function<double(double)>& f, double a, double b, double rtol = 1e-10,
                         double atol = 1e-300, int max_intervals = 4000);
/// int_a^inf f with f ~ t^{-tail_exponent}; the substitution makes the mapped integrand bounded.
double adaptive_integral_tail(const std::function<double(double)>& f, double a, double tail_exponent,
                              double rtol = 1e-10);

struct IntegralReport {
  double first_at_zero = 0;          // closed form 3
  double sup_first = 0;              // sup I1 (1+z)^{1/3}
  double sup_second = 0;             // sup I2 (1+z)^{2/3} / ln(2+z)
  double sup_second_nolog = 0;       // sup I2 (1+z)^{2/3} (grows if the log is needed)
  double sup_third_stated = 0;       // sup I3 (1+z)^{gamma+delta}
  double sup_third_measured = 0;     // sup I3 (1+z)^{gamma+delta-1}
  double gamma = 2.0 / 3.0, delta = 2.0 / 3.0;
  DecayFit first_fit, second_fit, second_log_fit, third_fit;
  std::array<double, 3> refinement_change{};  // relative change of each sup under a 100x tighter tolerance
  Eigen::VectorXd z;
  std::array<Eigen::VectorXd, 3> values;
  nlohmann::json to_json() const;
};

IntegralReport integral_inequalities_check(const Eigen::VectorXd& z_grid, double gamma = 2.0 / 3.0,
                                           double delta = 2.0 / 3.0, double rtol = 1e-8);
/// Log-spaced z in [0, z_max] with a leading 0.
Eigen::VectorXd default_integral_grid(double z_max = 1e4, int points = 60);

// ---------------------------------------------------------------- Ekman

/// (v1, v2)(z) = Re/Im of (phi1 + i phi2) exp(-(1+i) z / sqrt 2).
std::pair<double, double> ekman_reference(double phi1, double phi2, double z);
/// Residual of e x v - v'' for the reference profile (analytic derivatives), max over z samples.
double ekman_ode_residual(double phi1, double phi2, const Eigen::VectorXd& z);

}  // namespace ekbl
