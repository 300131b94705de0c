#include "ekbl/verify.hpp"

#include "ekbl/char_roots.hpp"
#include "ekbl/errors.hpp"
#include "ekbl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ekbl {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct LineFit {
  double slope = 0, intercept = 0, residual = 0;
  int samples = 0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.samples = static_cast<int>(x.size());
  if (f.samples < 2) throw std::domain_error("fit: need at least two samples in the window");
  Eigen::MatrixXd A(f.samples, 2);
  Eigen::VectorXd b(f.samples);
  for (int i = 0; i < f.samples; ++i) {
    A(i, 0) = x[i];
    A(i, 1) = 1.0;
    b(i) = y[i];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  f.slope = c(0);
  f.intercept = c(1);
  f.residual = (A * c - b).cwiseAbs().maxCoeff();
  return f;
}

DecayFit power_fit(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double lo, double hi, bool with_log) {
  if (z.size() != norm.size()) throw std::invalid_argument("fit_decay: size mismatch");
  std::vector<double> x, y;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) < lo || z(i) > hi) continue;
    if (!(norm(i) > 0)) throw std::domain_error("fit_decay: nonpositive sample in the window");
    x.push_back(std::log1p(z(i)));
    y.push_back(std::log(norm(i)) - (with_log ? std::log(std::log(2.0 + z(i))) : 0.0));
  }
  const LineFit f = least_squares(x, y);
  DecayFit d;
  d.exponent = f.slope;
  d.constant = std::exp(f.intercept);
  d.z_lo = lo;
  d.z_hi = hi;
  d.residual = f.residual;
  d.samples = f.samples;
  return d;
}

// Gauss-Legendre nodes on [-1, 1] (Golub-Welsch)
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  return {es.eigenvalues(), 2.0 * es.eigenvectors().row(0).transpose().cwiseAbs2()};
}

struct RadialRule {
  std::vector<double> rho, weight;
};

// composite Gauss-Legendre: geometric panels towards 0, then panels no wider than `width`
RadialRule radial_rule(double lo, double hi, int panel_nodes, int geometric, double width) {
  const auto [x, w] = gauss_legendre(panel_nodes);
  std::vector<std::pair<double, double>> panels;
  double start = lo;
  if (lo == 0.0 && geometric > 0) {
    const double first = std::min(hi, 0.25);
    double a = first * std::pow(0.5, geometric);
    panels.emplace_back(0.0, a);
    for (int k = 0; k < geometric; ++k, a *= 2) panels.emplace_back(a, 2 * a);
    start = first;
  }
  if (hi > start) {
    const int count = std::max(1, static_cast<int>(std::ceil((hi - start) / width)));
    for (int k = 0; k < count; ++k)
      panels.emplace_back(start + (hi - start) * k / count, start + (hi - start) * (k + 1) / count);
  }
  RadialRule r;
  for (const auto& [a, b] : panels)
    for (int i = 0; i < panel_nodes; ++i) {
      r.rho.push_back(0.5 * (a + b) + 0.5 * (b - a) * x(i));
      r.weight.push_back(0.5 * (b - a) * w(i));
    }
  return r;
}

// int_0^{2 pi} cos^a sin^b e^{i rho (x1 cos + x2 sin)} d theta by the trapezoid rule
cd angular_factor(int a, int b, double rho, double x1, double x2, int /*base_nodes*/) {
  // cos^a sin^b as a finite Fourier sum; each harmonic integrates to a Bessel function
  const double r = std::hypot(x1, x2), t = rho * r, phi = std::atan2(x2, x1);
  if (a == 0 && b == 0) return 2.0 * kPi * std::cyl_bessel_j(0.0, t);
  std::vector<cd> c(2 * (a + b) + 1, 0.0);  // index n + a + b
  const int off = a + b;
  auto binom = [](int n, int k) {
    double v = 1;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
  };
  for (int j = 0; j <= a; ++j)
    for (int k = 0; k <= b; ++k) {
      // (e^{it}+e^{-it})^a (e^{it}-e^{-it})^b picks harmonic (2j-a)+(2k-b)
      const double sign = ((b - k) % 2) ? -1.0 : 1.0;
      c[(2 * j - a) + (2 * k - b) + off] += sign * binom(a, j) * binom(b, k);
    }
  const cd scale = std::pow(0.5, a) * std::pow(cd(0, -0.5), b);
  cd acc = 0;
  for (int n = -off; n <= off; ++n) {
    const cd cn = c[n + off];
    if (cn == cd(0)) continue;
    const int m = std::abs(n);
    acc += cn * std::polar(1.0, n * phi) * std::pow(cd(0, 1), m) * std::cyl_bessel_j(static_cast<double>(m), t);
  }
  return 2.0 * kPi * scale * acc;
}

// low-frequency kernel on a set of z for one x
std::vector<cd> low_kernel(const KernelSymbol& P, int root, double x1, double x2, const std::vector<double>& zs,
                           const KernelQuadrature& q) {
  const double width = std::min(0.1, 16.0 / (1.0 + std::hypot(x1, x2)));
  const RadialRule rr = radial_rule(0.0, q.chi_radius, q.panel_nodes, q.radial_panels, width);
  std::vector<cd> out(zs.size(), 0.0);
  for (size_t i = 0; i < rr.rho.size(); ++i) {
    const double rho = rr.rho[i];
    const double chi = chi_cutoff(rho, q.chi_radius, q.low_plateau);
    if (chi == 0.0) continue;
    const cd ang = angular_factor(P.a, P.b, rho, x1, x2, q.angular_nodes);
    const double radial = rr.weight[i] * rho * chi * std::pow(rho, P.a + P.b + P.beta);
    const cd lam = char_roots(rho, 0.0).lambda(root);
    for (size_t k = 0; k < zs.size(); ++k) out[k] += radial * ang * std::exp(-lam * zs[k]);
  }
  return out;
}

std::vector<cd> high_kernel(const KernelSymbol& P, int root, double x1, double x2, const std::vector<double>& zs,
                            const KernelQuadrature& q, int power) {
  const double width = std::min(0.1, 16.0 / (1.0 + std::hypot(x1, x2)));
  const RadialRule rr = radial_rule(q.high_plateau * q.chi_radius, q.high_cutoff, q.panel_nodes, 0, width);
  std::vector<cd> out(zs.size(), 0.0);
  for (size_t i = 0; i < rr.rho.size(); ++i) {
    const double rho = rr.rho[i];
    const double cut = 1.0 - chi_cutoff(rho, q.chi_radius, q.high_plateau);
    if (cut == 0.0) continue;
    const cd ang = angular_factor(P.a, P.b, rho, x1, x2, q.angular_nodes);
    const double radial =
        rr.weight[i] * rho * cut * std::pow(rho, P.a + P.b + P.beta) * std::pow(1.0 + rho * rho, -power);
    const cd lam = char_roots(rho, 0.0).lambda(root);
    for (size_t k = 0; k < zs.size(); ++k) out[k] += radial * ang * std::exp(-lam * zs[k]);
  }
  return out;
}

// envelope of an oscillating decay: running maximum from the far end
Eigen::VectorXd upper_envelope(const std::vector<cd>& v) {
  Eigen::VectorXd e(v.size());
  double m = 0;
  for (int i = static_cast<int>(v.size()) - 1; i >= 0; --i) {
    m = std::max(m, std::abs(v[i]));
    e(i) = m;
  }
  return e;
}

std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, n > 1 ? double(i) / (n - 1) : 0.0);
  return v;
}

std::vector<double> lin_space(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * (n > 1 ? double(i) / (n - 1) : 0.0);
  return v;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

// Kronrod 15 / Gauss 7 on [-1, 1]
constexpr double kXk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
};

Segment kronrod(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = kWk[7] * fc, g = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double s = f(c - h * kXk[i]) + f(c + h * kXk[i]);
    k += kWk[i] * s;
    if (i % 2 == 1) g += kWg[i / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

// ---------------------------------------------------------------- fits

nlohmann::json DecayFit::to_json() const {
  return {{"exponent", exponent}, {"constant", constant}, {"window", {z_lo, z_hi}}, {"residual", residual},
          {"samples", samples}};
}

nlohmann::json ExponentialFit::to_json() const {
  return {{"rate", rate}, {"constant", constant}, {"residual", residual}, {"samples", samples}};
}

DecayFit fit_decay(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double z_lo, double z_hi) {
  return power_fit(z, norm, z_lo, z_hi, false);
}

DecayFit fit_decay_with_log(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double z_lo, double z_hi) {
  return power_fit(z, norm, z_lo, z_hi, true);
}

ExponentialFit fit_exponential(const Eigen::VectorXd& z, const Eigen::VectorXd& norm, double z_lo, double z_hi) {
  std::vector<double> x, y;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) < z_lo || z(i) > z_hi) continue;
    if (!(norm(i) > 0)) throw std::domain_error("fit_exponential: nonpositive sample in the window");
    x.push_back(z(i));
    y.push_back(std::log(norm(i)));
  }
  const LineFit f = least_squares(x, y);
  return {-f.slope, std::exp(f.intercept), f.residual, f.samples};
}

// ---------------------------------------------------------------- roots

nlohmann::json RootAsymptoticsReport::to_json() const {
  return {{"samples", samples},
          {"max_scaled_residual", max_scaled_residual},
          {"low_order_lambda1", low_order},
          {"low_order_lambda23", low_order_complex},
          {"high_order_lambda1", high_order},
          {"high_order_lambda23", high_order_complex},
          {"low_fit", low_fit.to_json()},
          {"high_fit", high_fit.to_json()}};
}

RootAsymptoticsReport root_asymptotics_check(int samples, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RootAsymptoticsReport rep;
  rep.samples = samples;
  std::vector<double> lx, ly, lxc, lyc, hx, hy, hyc;
  for (int s = 0; s < samples; ++s) {
    const double r = std::pow(10.0, -3.0 + 6.0 * u(rng)), th = 2.0 * kPi * u(rng);
    const CharRoots<double> cr = char_roots(r * std::cos(th), r * std::sin(th));
    const double scale = std::max(1.0, std::pow(r, 6));
    rep.max_scaled_residual = std::max(rep.max_scaled_residual, sextic_residual(cr).maxCoeff() / scale);
    const CharRoots<double> lo = asymptotic_roots(r * std::cos(th), r * std::sin(th), Regime::low);
    const CharRoots<double> hi = asymptotic_roots(r * std::cos(th), r * std::sin(th), Regime::high);
    if (r <= 0.1) {
      const double d1 = std::abs(cr.lambda(0) - lo.lambda(0));
      const double d2 = std::max(std::abs(cr.lambda(1) - lo.lambda(1)), std::abs(cr.lambda(2) - lo.lambda(2)));
      // keep samples whose remainder is above rounding of lambda itself
      if (d1 > 1e-13 * std::abs(cr.lambda(0))) {
        lx.push_back(std::log(r));
        ly.push_back(std::log(d1));
      }
      if (d2 > 1e-14) {
        lxc.push_back(std::log(r));
        lyc.push_back(std::log(d2));
      }
    }
    if (r >= 3.0) {
      hx.push_back(std::log(r));
      hy.push_back(std::log(std::abs(cr.lambda(0) - hi.lambda(0))));
      hyc.push_back(std::log(std::max(std::abs(cr.lambda(1) - hi.lambda(1)), std::abs(cr.lambda(2) - hi.lambda(2)))));
    }
  }
  auto fit = least_squares;
  const LineFit f1 = fit(lx, ly), f2 = fit(lxc, lyc), f3 = fit(hx, hy), f4 = fit(hx, hyc);
  rep.low_order = f1.slope;
  rep.low_order_complex = f2.slope;
  rep.high_order = f3.slope;
  rep.high_order_complex = f4.slope;
  rep.low_fit = {f1.slope, std::exp(f1.intercept), 1e-3, 0.1, f1.residual, f1.samples};
  rep.high_fit = {f3.slope, std::exp(f3.intercept), 3.0, 1e3, f3.residual, f3.samples};
  return rep;
}

// ---------------------------------------------------------------- kernels

double chi_cutoff(double rho, double radius, double plateau) {
  const double t = (rho - plateau * radius) / ((1.0 - plateau) * radius);  // 0 at the plateau edge, 1 at R
  if (t <= 0) return 1.0;
  if (t >= 1) return 0.0;
  const auto bump = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
  return bump(1.0 - t) / (bump(1.0 - t) + bump(t));
}

cd kernel_value(const KernelSymbol& P, int root, double x1, double x2, double z, const KernelQuadrature& q,
                int high_power) {
  if (root < 0 || root > 2) throw std::invalid_argument("kernel_value: root index in 0..2");
  const std::vector<double> zs{z};
  return high_power >= 0 ? high_kernel(P, root, x1, x2, zs, q, high_power)[0] : low_kernel(P, root, x1, x2, zs, q)[0];
}

nlohmann::json KernelDecayReport::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& [a, b] : envelope_samples) s.push_back({a, b});
  return {{"alpha", alpha},
          {"target_exponent", target_exponent},
          {"envelope_fit", envelope_fit.to_json()},
          {"spatial_fit", spatial_fit.to_json()},
          {"vertical_exponent", vertical_exponent},
          {"delta", delta},
          {"min_re_lambda23", min_re_lambda23},
          {"envelope_samples", s}};
}

KernelDecayReport kernel_decay_check(const KernelSymbol& P, const KernelQuadrature& q, std::vector<double> z_list,
                                     std::vector<double> x_list) {
  if (P.beta < -2.0 || P.beta >= 0.0) throw std::invalid_argument("kernel_decay_check: beta must lie in [-2, 0)");
  if (!(P.alpha() > 0)) throw std::invalid_argument("kernel_decay_check: needs alpha = a + b + beta > 0");
  KernelDecayReport rep;
  rep.alpha = P.alpha();
  rep.target_exponent = 2.0 + rep.alpha;
  if (x_list.empty()) x_list = log_space(5.0, 60.0, 14);
  if (z_list.empty())
    for (double c : log_space(5.0, 40.0, 12)) z_list.push_back(c * c * c);
  // a direction along which the angular profile of P does not vanish
  const double phi = (P.a > 0 && P.b > 0) ? kPi / 4 : (P.a == 0 && P.b > 0 ? kPi / 2 : 0.0);
  const double c = std::cos(phi), s = std::sin(phi);

  std::vector<double> env_s, env_k, xs_fit, xk_fit, zs_fit, zk_fit;
  std::vector<cd> slice0(x_list.size());
  parallel_for(0, static_cast<int>(x_list.size()),
               [&](int i) { slice0[i] = low_kernel(P, 0, x_list[i] * c, x_list[i] * s, {0.0}, q)[0]; });
  for (size_t i = 0; i < x_list.size(); ++i) {
    env_s.push_back(x_list[i]);
    env_k.push_back(std::abs(slice0[i]));
  }
  const std::vector<cd> vert = low_kernel(P, 0, 0.0, 0.0, z_list, q);
  std::vector<double> cube;
  for (size_t k = 0; k < z_list.size(); ++k) {
    cube.push_back(std::cbrt(z_list[k]));
    env_s.push_back(cube.back());
    env_k.push_back(std::abs(vert[k]));
  }
  // mixed points: |x| = z^{1/3}
  std::vector<cd> mixed(z_list.size());
  parallel_for(0, static_cast<int>(z_list.size()), [&](int k) {
    mixed[k] = low_kernel(P, 0, cube[k] * c, cube[k] * s, {z_list[k]}, q)[0];
  });
  for (size_t k = 0; k < z_list.size(); ++k) {
    env_s.push_back(2.0 * cube[k]);
    env_k.push_back(std::abs(mixed[k]));
  }
  for (size_t i = 0; i < env_s.size(); ++i) rep.envelope_samples.emplace_back(env_s[i], env_k[i]);
  // envelope variable s = |x| + z^{1/3}; fit_decay uses log(1 + s)
  rep.envelope_fit = fit_decay(to_eigen(env_s), to_eigen(env_k), 5.0, 1e300);
  rep.spatial_fit = fit_decay(to_eigen(x_list), to_eigen(std::vector<double>(env_k.begin(), env_k.begin() + x_list.size())),
                              5.0, 1e300);
  {
    std::vector<double> lv;
    for (size_t k = 0; k < z_list.size(); ++k) lv.push_back(std::abs(vert[k]));
    rep.vertical_exponent = fit_decay(to_eigen(cube), to_eigen(lv), 5.0, 1e300).exponent;
  }

  // K^2, K^3 at x = 0
  const std::vector<double> zz = lin_space(2.0, 24.0, 45);
  for (int j = 1; j <= 2; ++j) {
    const Eigen::VectorXd env = upper_envelope(low_kernel(P, j, 0.0, 0.0, zz, q));
    rep.delta[j - 1] = fit_exponential(to_eigen(zz), env, 2.0, 24.0).rate;
  }
  rep.min_re_lambda23 = std::numeric_limits<double>::infinity();
  for (double r : lin_space(0.0, q.chi_radius, 201))
    rep.min_re_lambda23 = std::min(rep.min_re_lambda23, char_roots(r, 0.0).lambda(1).real());
  return rep;
}

nlohmann::json HighFreqReport::to_json() const {
  auto finite = [](const std::array<double, 3>& a) {
    nlohmann::json j = nlohmann::json::array();
    for (double v : a) j.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("below_floor"));
    return j;
  };
  return {{"delta", delta},
          {"spatial_exponent", finite(spatial_exponent)},
          {"weighted_sup", weighted_sup},
          {"min_re_lambda", min_re_lambda},
          {"power", power}};
}

HighFreqReport highfreq_kernel_check(const KernelSymbol& P, const KernelQuadrature& q, int power,
                                     std::vector<double> z_list) {
  HighFreqReport rep;
  rep.power = power;
  if (z_list.empty()) z_list = lin_space(1.0, 10.0, 37);
  const std::vector<double> xs = lin_space(0.0, 60.0, 31);
  const double zfix = 1.0;
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd env = upper_envelope(high_kernel(P, j, 0.0, 0.0, z_list, q, power));
    rep.delta[j] = fit_exponential(to_eigen(z_list), env, z_list.front(), z_list.back()).rate;
    // one radial rule fine enough for the largest |x|, roots evaluated once
    const double width = std::min(0.1, 16.0 / (1.0 + xs.back()));
    const RadialRule rr = radial_rule(q.high_plateau * q.chi_radius, q.high_cutoff, q.panel_nodes, 0, width);
    std::vector<cd> weight(rr.rho.size());
    for (size_t i = 0; i < rr.rho.size(); ++i) {
      const double rho = rr.rho[i];
      const cd lam = char_roots(rho, 0.0).lambda(j);
      weight[i] = rr.weight[i] * rho * (1.0 - chi_cutoff(rho, q.chi_radius, q.high_plateau)) *
                  std::pow(rho, P.a + P.b + P.beta) * std::pow(1.0 + rho * rho, -power) * std::exp(-lam * zfix);
    }
    std::vector<cd> row(xs.size());
    parallel_for(0, static_cast<int>(xs.size()), [&](int i) {
      cd acc = 0;
      for (size_t k = 0; k < rr.rho.size(); ++k)
        if (weight[k] != cd(0)) acc += weight[k] * angular_factor(P.a, P.b, rr.rho[k], xs[i], 0.0, q.angular_nodes);
      row[i] = acc;
    });
    const double k0 = std::abs(row[0]);
    std::vector<double> fx, fk;
    double ws = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const double a = std::abs(row[i]);
      ws = std::max(ws, std::pow(1.0 + xs[i], 3) * a / k0);
      if (xs[i] >= 20.0 && a > 1e-10 * k0) {
        fx.push_back(xs[i]);
        fk.push_back(a);
      }
    }
    rep.weighted_sup[j] = ws;
    // decay past the quadrature floor counts as faster than any fitted power
    const Eigen::VectorXd tail = upper_envelope(std::vector<cd>(fk.begin(), fk.end()));
    rep.spatial_exponent[j] =
        fx.size() >= 3 ? -fit_decay(to_eigen(fx), tail, 0.0, 1e300).exponent : std::numeric_limits<double>::infinity();
  }
  rep.min_re_lambda = std::numeric_limits<double>::infinity();
  for (double r : lin_space(q.high_plateau * q.chi_radius, q.high_cutoff, 400))
    for (int j = 0; j < 3; ++j) rep.min_re_lambda = std::min(rep.min_re_lambda, char_roots(r, 0.0).lambda(j).real());
  return rep;
}

// ---------------------------------------------------------------- integrals

double adaptive_integral(const std::function<double(double)>& f, double a, double b, double rtol, double atol,
                         int max_intervals) {
  if (a == b) return 0.0;
  std::vector<Segment> segs{kronrod(f, a, b)};
  for (;;) {
    double total = 0, err = 0;
    size_t worst = 0;
    for (size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].value;
      err += segs[i].error;
      if (segs[i].error > segs[worst].error) worst = i;
    }
    if (!std::isfinite(total)) throw SolverError(ErrorCode::quadrature_fail, "integrand is not finite");
    if (err <= std::max(atol, rtol * std::abs(total))) return total;
    if (static_cast<int>(segs.size()) >= max_intervals) {
      std::ostringstream os;
      os << "adaptive quadrature on [" << a << ", " << b << "] stalled at error " << err << " (value " << total
         << ") after " << segs.size() << " intervals";
      throw SolverError(ErrorCode::quadrature_fail, os.str());
    }
    const Segment s = segs[worst];
    const double m = 0.5 * (s.a + s.b);
    segs[worst] = kronrod(f, s.a, m);
    segs.push_back(kronrod(f, m, s.b));
  }
}

double adaptive_integral_tail(const std::function<double(double)>& f, double a, double tail_exponent, double rtol) {
  if (!(tail_exponent > 1)) throw std::invalid_argument("adaptive_integral_tail: needs decay faster than 1/t");
  // t = a + (1 + a)(u^{-q} - 1) with q (s - 1) = 1 keeps the integrand bounded at u = 0
  const double qexp = 1.0 / (tail_exponent - 1.0), scale = 1.0 + a;
  auto g = [&](double u) {
    const double t = a + scale * (std::pow(u, -qexp) - 1.0);
    return f(t) * scale * qexp * std::pow(u, -qexp - 1.0);
  };
  return adaptive_integral(g, 0.0, 1.0, rtol);
}

nlohmann::json IntegralReport::to_json() const {
  return {{"first_at_zero", first_at_zero},
          {"sup_first", sup_first},
          {"sup_second", sup_second},
          {"sup_second_nolog", sup_second_nolog},
          {"sup_third_stated", sup_third_stated},
          {"sup_third_measured", sup_third_measured},
          {"gamma", gamma},
          {"delta", delta},
          {"first_fit", first_fit.to_json()},
          {"second_fit", second_fit.to_json()},
          {"second_log_fit", second_log_fit.to_json()},
          {"third_fit", third_fit.to_json()},
          {"refinement_change", refinement_change}};
}

namespace {

std::array<double, 3> integrals_at(double z, double gamma, double delta, double rtol) {
  auto first = [z](double t) { return std::pow(1.0 + std::abs(z - t), -2.0 / 3.0) * std::pow(1.0 + t, -2.0 / 3.0); };
  auto second = [z](double t) { return 1.0 / (1.0 + std::abs(z - t)) * std::pow(1.0 + t, -2.0 / 3.0); };
  auto third = [=](double t) { return std::pow(1.0 + z + t, -gamma) * std::pow(1.0 + t, -delta); };
  const double far = 2.0 * z + 1.0;
  auto piecewise = [&](const std::function<double(double)>& f, double tail) {
    return adaptive_integral(f, 0.0, z, rtol) + adaptive_integral(f, z, far, rtol) +
           adaptive_integral_tail(f, far, tail, rtol);
  };
  return {piecewise(first, 4.0 / 3.0), piecewise(second, 5.0 / 3.0),
          adaptive_integral(third, 0.0, far, rtol) + adaptive_integral_tail(third, far, gamma + delta, rtol)};
}

}  // namespace

Eigen::VectorXd default_integral_grid(double z_max, int points) {
  Eigen::VectorXd z(points + 1);
  z(0) = 0.0;
  const std::vector<double> l = log_space(1e-2, z_max, points);
  for (int i = 0; i < points; ++i) z(i + 1) = l[i];
  return z;
}

IntegralReport integral_inequalities_check(const Eigen::VectorXd& z_grid, double gamma, double delta, double rtol) {
  if (!(delta < 1.0 && gamma + delta > 1.0 && gamma > 0 && delta > 0))
    throw std::invalid_argument("integral_inequalities_check: needs gamma, delta > 0, delta < 1, gamma + delta > 1");
  IntegralReport rep;
  rep.gamma = gamma;
  rep.delta = delta;
  rep.z = z_grid;
  for (auto& v : rep.values) v.resize(z_grid.size());
  std::array<double, 4> sups{}, fine{};
  auto sweep = [&](double tol, std::array<double, 4>& out, bool store) {
    std::vector<std::array<double, 3>> vals(z_grid.size());
    parallel_for(0, static_cast<int>(z_grid.size()), [&](int i) { vals[i] = integrals_at(z_grid(i), gamma, delta, tol); });
    out = {0, 0, 0, 0};
    for (Eigen::Index i = 0; i < z_grid.size(); ++i) {
      const double z = z_grid(i);
      out[0] = std::max(out[0], vals[i][0] * std::cbrt(1.0 + z));
      out[1] = std::max(out[1], vals[i][1] * std::pow(1.0 + z, 2.0 / 3.0) / std::log(2.0 + z));
      out[2] = std::max(out[2], vals[i][2] * std::pow(1.0 + z, gamma + delta - 1.0));
      out[3] = std::max(out[3], vals[i][1] * std::pow(1.0 + z, 2.0 / 3.0));
      if (store)
        for (int c = 0; c < 3; ++c) rep.values[c](i) = vals[i][c];
    }
  };
  sweep(rtol, sups, true);
  sweep(rtol * 1e-2, fine, false);
  rep.sup_first = sups[0];
  rep.sup_second = sups[1];
  rep.sup_third_measured = sups[2];
  rep.sup_second_nolog = sups[3];
  for (Eigen::Index i = 0; i < z_grid.size(); ++i)
    rep.sup_third_stated = std::max(rep.sup_third_stated, rep.values[2](i) * std::pow(1.0 + z_grid(i), gamma + delta));
  for (int c = 0; c < 3; ++c) rep.refinement_change[c] = std::abs(fine[c] - sups[c]) / std::abs(fine[c]);
  rep.first_at_zero = integrals_at(0.0, gamma, delta, 1e-13)[0];
  const double hi = z_grid.maxCoeff();
  rep.first_fit = fit_decay(z_grid, rep.values[0], 10.0, hi);
  rep.second_fit = fit_decay(z_grid, rep.values[1], 10.0, hi);
  rep.second_log_fit = fit_decay_with_log(z_grid, rep.values[1], 10.0, hi);
  rep.third_fit = fit_decay(z_grid, rep.values[2], 10.0, hi);
  return rep;
}

// ---------------------------------------------------------------- Ekman

std::pair<double, double> ekman_reference(double phi1, double phi2, double z) {
  const cd k(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  const cd v = cd(phi1, phi2) * std::exp(-k * z);
  return {v.real(), v.imag()};
}

double ekman_ode_residual(double phi1, double phi2, const Eigen::VectorXd& z) {
  const cd k(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  double worst = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto [v1, v2] = ekman_reference(phi1, phi2, z(i));
    const cd dd = k * k * cd(v1, v2);  // second derivative of the complex profile
    // e x v = (-v2, v1)
    worst = std::max({worst, std::abs(-v2 - dd.real()), std::abs(v1 - dd.imag())});
  }
  return worst;
}

}  // namespace ekbl
