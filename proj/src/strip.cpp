#include "ekbl/strip.hpp"

#include "ekbl/errors.hpp"
#include "ekbl/gmres.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace ekbl {

namespace {

Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) w(i) /= (x(i) - x(k));
  return w;
}

Eigen::MatrixXd interpolation_matrix(const Eigen::VectorXd& x, const Eigen::VectorXd& t) {
  const Eigen::VectorXd w = barycentric_weights(x);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t.size(), x.size());
  for (Eigen::Index r = 0; r < t.size(); ++r) {
    bool hit = false;
    for (Eigen::Index k = 0; k < x.size(); ++k)
      if (t(r) == x(k)) {
        m(r, k) = 1;
        hit = true;
      }
    if (hit) continue;
    double den = 0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      m(r, k) = w(k) / (t(r) - x(k));
      den += m(r, k);
    }
    m.row(r) /= den;
  }
  return m;
}

Eigen::MatrixXd differentiation_matrix(const Eigen::VectorXd& x) {
  const Eigen::VectorXd w = barycentric_weights(x);
  const Eigen::Index n = x.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      d(i, j) = (w(j) / w(i)) / (x(i) - x(j));
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

Eigen::VectorXcd spectral_column(const Eigen::VectorXd& v, int n) {
  const Eigen::MatrixXcd s = to_spectral(Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n)));
  return Eigen::Map<const Eigen::VectorXcd>(s.data(), n * n);
}

Eigen::VectorXd physical_column(const Eigen::VectorXcd& c, int n) {
  const Eigen::MatrixXd p = to_physical(Eigen::MatrixXcd(Eigen::Map<const Eigen::MatrixXcd>(c.data(), n, n)));
  return Eigen::Map<const Eigen::VectorXd>(p.data(), n * n);
}

double lattice_xi(int i, int n, double period) {
  const int k = i < n / 2 ? i : i - n;
  if (k == -n / 2) return 0.0;  // Nyquist derivative dropped
  return 2.0 * M_PI / period * k;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---------------------------------------------------------------- roughness

RoughnessProfile RoughnessProfile::from_samples(Eigen::VectorXd gamma, int n, double period) {
  if (gamma.size() != n * n) throw std::invalid_argument("roughness: expected n^2 samples");
  if (!gamma.allFinite()) throw std::invalid_argument("roughness: non-finite samples");
  RoughnessProfile r;
  r.gamma = std::move(gamma);
  r.n = n;
  r.period = period;
  r.sup_gamma = r.gamma.maxCoeff();
  const auto gr = r.gradient();
  r.lipschitz_bound = (gr[0].cwiseAbs2() + gr[1].cwiseAbs2()).cwiseSqrt().maxCoeff();
  return r;
}

RoughnessProfile RoughnessProfile::flat(int n, double period) {
  return from_samples(Eigen::VectorXd::Zero(n * n), n, period);
}

RoughnessProfile RoughnessProfile::sinusoidal(int n, double period, double amplitude, int k1, int k2) {
  Eigen::VectorXd g(n * n);
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const double y1 = period * i1 / n, y2 = period * i2 / n;
      const double a = std::sin(2.0 * M_PI * k1 * y1 / period);
      const double b = k2 == 0 ? 1.0 : std::sin(2.0 * M_PI * k2 * y2 / period);
      g(i1 + n * i2) = amplitude * a * b;
    }
  return from_samples(std::move(g), n, period);
}

RoughnessProfile RoughnessProfile::quasi_periodic(int n, double period, double amplitude, int k_scale) {
  const int q = static_cast<int>(std::lround(std::sqrt(2.0) * k_scale));
  Eigen::VectorXd g(n * n);
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const double t1 = 2.0 * M_PI * i1 / n, t2 = 2.0 * M_PI * i2 / n;
      g(i1 + n * i2) = 0.5 * amplitude * (std::cos(k_scale * t1) + std::cos(q * (t1 + t2)));
    }
  return from_samples(std::move(g), n, period);
}

RoughnessProfile RoughnessProfile::filtered_noise(int n, double period, double amplitude, unsigned seed, int kmax) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
  kmax = std::min(kmax, n / 2 - 1);
  auto idx = [n](int k) { return ((k % n) + n) % n; };
  for (int k2 = -kmax; k2 <= kmax; ++k2)
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
      if (k1 * k1 + k2 * k2 > kmax * kmax || (k1 == 0 && k2 == 0)) continue;
      const int a = idx(k1) + n * idx(k2), b = idx(-k1) + n * idx(-k2);
      if (a > b) continue;
      const cd c(nd(rng), nd(rng));
      s(idx(k1), idx(k2)) = c;
      s(idx(-k1), idx(-k2)) = std::conj(c);
    }
  Eigen::MatrixXd p = to_physical(s);
  p *= amplitude / p.cwiseAbs().maxCoeff();
  return from_samples(Eigen::Map<Eigen::VectorXd>(p.data(), n * n), n, period);
}

RoughnessProfile RoughnessProfile::from_csv(const std::string& path, int n, double period) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("roughness csv: cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("y1,y2,gamma", 0) != 0) throw std::invalid_argument("roughness csv: header must be y1,y2,gamma");
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n * n, std::nan(""));
  const double h = period / n;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double y1, y2, v;
    char c1, c2;
    if (!(ss >> y1 >> c1 >> y2 >> c2 >> v)) throw std::invalid_argument("roughness csv: malformed row: " + line);
    const long i1 = std::lround(y1 / h), i2 = std::lround(y2 / h);
    if (i1 < 0 || i1 >= n || i2 < 0 || i2 >= n || std::abs(y1 - i1 * h) > 1e-9 * period ||
        std::abs(y2 - i2 * h) > 1e-9 * period)
      throw std::invalid_argument("roughness csv: point off the lattice: " + line);
    g(i1 + n * i2) = v;
  }
  if (!g.allFinite()) throw std::invalid_argument("roughness csv: lattice not fully covered");
  return from_samples(std::move(g), n, period);
}

std::array<Eigen::VectorXd, 2> RoughnessProfile::gradient() const {
  const Eigen::VectorXcd s = spectral_column(gamma, n);
  Eigen::VectorXcd d1(n * n), d2(n * n);
  for (int m = 0; m < n * n; ++m) {
    d1(m) = cd(0, lattice_xi(m % n, n, period)) * s(m);
    d2(m) = cd(0, lattice_xi(m / n, n, period)) * s(m);
  }
  return {physical_column(d1, n), physical_column(d2, n)};
}

// ---------------------------------------------------------------- grid

StripGrid StripGrid::make(RoughnessProfile gamma, double top, int levels) {
  if (levels < 5) throw std::invalid_argument("strip grid: need at least 5 sigma levels");
  if (gamma.n < 4 || gamma.n % 2) throw std::invalid_argument("strip grid: horizontal size must be even and >= 4");
  if (!(top > gamma.sup_gamma)) {
    std::ostringstream os;
    os << "strip grid: interface height M = " << top << " must exceed sup gamma = " << gamma.sup_gamma;
    throw SolverError(ErrorCode::invalid_input, os.str());
  }
  StripGrid g;
  g.n = gamma.n;
  g.period = gamma.period;
  g.top = top;
  g.levels = levels;
  const int N = levels - 1;
  g.sigma.resize(levels);
  for (int k = 0; k <= N; ++k) g.sigma(k) = 0.5 * (1.0 - std::cos(M_PI * k / N));
  g.gauss.resize(N - 1);
  for (int k = 0; k < N - 1; ++k) g.gauss(k) = 0.5 * (1.0 - std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * (N - 1))));
  g.diff = differentiation_matrix(g.sigma);
  g.to_gauss = interpolation_matrix(g.sigma, g.gauss);
  g.from_gauss = interpolation_matrix(g.gauss, g.sigma);
  g.depth = top - gamma.gamma.array();
  g.dgamma = gamma.gradient();
  g.gamma = std::move(gamma);
  return g;
}

StripField StripField::zeros(const StripGrid& g) {
  StripField f;
  for (auto& c : f.u) c = Eigen::MatrixXd::Zero(g.n_points(), g.levels);
  f.p = Eigen::MatrixXd::Zero(g.n_points(), g.n_gauss());
  return f;
}

double StripResiduals::max() const { return std::max({momentum, divergence, bottom, top}); }

nlohmann::json StripReport::to_json() const {
  return nlohmann::json{{"newton_iterations", newton_iterations},
                        {"gmres_iterations", gmres_iterations},
                        {"residual_history", residual_history},
                        {"converged", converged},
                        {"small_data", small_data},
                        {"residuals",
                         {{"momentum", residuals.momentum},
                          {"divergence", residuals.divergence},
                          {"bottom", residuals.bottom},
                          {"top", residuals.top}}}};
}

// ---------------------------------------------------------------- solver

struct StripSolver::Gradient {
  // d[i][j] = physical d_j w_i on CGL levels
  std::array<std::array<Eigen::MatrixXd, 3>, 3> d;
  // raw sigma and horizontal derivatives, needed for the Gauss-point divergence
  std::array<Eigen::MatrixXd, 3> ds;
  std::array<std::array<Eigen::MatrixXd, 2>, 3> dh;
};

StripSolver::StripSolver(RoughnessProfile gamma, double top, int levels, StripOptions opt)
    : grid_(StripGrid::make(std::move(gamma), top, levels)), opt_(opt) {
  const int np = grid_.n_points();
  mean_depth_ = grid_.depth.mean();
  inv_depth_ = grid_.depth.cwiseInverse();
  for (int j = 0; j < 2; ++j) {
    metric_cgl_[j].resize(np, grid_.levels);
    metric_gauss_[j].resize(np, grid_.n_gauss());
    for (int k = 0; k < grid_.levels; ++k)
      metric_cgl_[j].col(k) = grid_.dgamma[j].cwiseProduct(inv_depth_) * (1.0 - grid_.sigma(k));
    for (int k = 0; k < grid_.n_gauss(); ++k)
      metric_gauss_[j].col(k) = grid_.dgamma[j].cwiseProduct(inv_depth_) * (1.0 - grid_.gauss(k));
  }
  build_preconditioner();
}

void StripSolver::horizontal_derivatives(const Eigen::MatrixXd& x, Eigen::MatrixXd& d1, Eigen::MatrixXd& d2) const {
  const int n = grid_.n, np = n * n;
  d1.resize(np, x.cols());
  d2.resize(np, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Eigen::VectorXcd s = spectral_column(x.col(c), n);
    Eigen::VectorXcd a(np), b(np);
    for (int m = 0; m < np; ++m) {
      a(m) = cd(0, lattice_xi(m % n, n, grid_.period)) * s(m);
      b(m) = cd(0, lattice_xi(m / n, n, grid_.period)) * s(m);
    }
    d1.col(c) = physical_column(a, n);
    d2.col(c) = physical_column(b, n);
  }
}

StripSolver::Gradient StripSolver::gradient(const std::array<Eigen::MatrixXd, 3>& w) const {
  Gradient g;
  for (int i = 0; i < 3; ++i) {
    g.ds[i] = w[i] * grid_.diff.transpose();
    horizontal_derivatives(w[i], g.dh[i][0], g.dh[i][1]);
    for (int j = 0; j < 2; ++j) g.d[i][j] = g.dh[i][j] - metric_cgl_[j].cwiseProduct(g.ds[i]);
    g.d[i][2] = inv_depth_.asDiagonal() * g.ds[i];
  }
  return g;
}

StripField StripSolver::linear_part(const StripField& f, const Gradient& gr) const {
  const int N = grid_.levels - 1;
  StripField out;
  // pressure on CGL levels and its gradient
  const Eigen::MatrixXd P = f.p * grid_.from_gauss.transpose();
  const Eigen::MatrixXd Ps = P * grid_.diff.transpose();
  Eigen::MatrixXd P1, P2;
  horizontal_derivatives(P, P1, P2);
  std::array<Eigen::MatrixXd, 3> gp{P1 - metric_cgl_[0].cwiseProduct(Ps), P2 - metric_cgl_[1].cwiseProduct(Ps),
                                    inv_depth_.asDiagonal() * Ps};
  // Laplacian by composing first derivatives
  std::array<Eigen::MatrixXd, 3> lap;
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd a1, a2, b1, b2;
    const Eigen::MatrixXd s1 = gr.d[i][0] * grid_.diff.transpose();
    const Eigen::MatrixXd s2 = gr.d[i][1] * grid_.diff.transpose();
    const Eigen::MatrixXd s3 = gr.d[i][2] * grid_.diff.transpose();
    horizontal_derivatives(gr.d[i][0], a1, a2);
    horizontal_derivatives(gr.d[i][1], b1, b2);
    lap[i] = (a1 - metric_cgl_[0].cwiseProduct(s1)) + (b2 - metric_cgl_[1].cwiseProduct(s2)) +
             inv_depth_.asDiagonal() * s3;
  }
  out.u[0] = -f.u[1] + gp[0] - lap[0];
  out.u[1] = f.u[0] + gp[1] - lap[1];
  out.u[2] = gp[2] - lap[2];
  for (int i = 0; i < 3; ++i) {
    out.u[i].col(0) = f.u[i].col(0);
    out.u[i].col(N) = gr.d[i][2].col(N);
  }
  out.u[2].col(N) -= P.col(N);
  // continuity at the Gauss nodes
  const Eigen::MatrixXd T = grid_.to_gauss.transpose();
  out.p = Eigen::MatrixXd::Zero(grid_.n_points(), grid_.n_gauss());
  for (int j = 0; j < 2; ++j)
    out.p += gr.dh[j][j] * T - metric_gauss_[j].cwiseProduct(gr.ds[j] * T);
  out.p += inv_depth_.asDiagonal() * (gr.ds[2] * T);
  return out;
}

void StripSolver::add_quadratic(StripField& out, const std::array<Eigen::MatrixXd, 3>& a, const Gradient& gb,
                                const std::array<Eigen::MatrixXd, 3>& b) const {
  const int N = grid_.levels - 1;
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd conv = a[0].cwiseProduct(gb.d[i][0]) + a[1].cwiseProduct(gb.d[i][1]) + a[2].cwiseProduct(gb.d[i][2]);
    out.u[i].middleCols(1, N - 1) += conv.middleCols(1, N - 1);
  }
  out.u[2].col(N) -= 0.5 * (a[0].col(N).cwiseProduct(b[0].col(N)) + a[1].col(N).cwiseProduct(b[1].col(N)) +
                            a[2].col(N).cwiseProduct(b[2].col(N)));
}

Eigen::VectorXd StripSolver::pack(const StripField& f) const {
  const int np = grid_.n_points(), L = grid_.levels, G = grid_.n_gauss();
  Eigen::VectorXd x(3 * np * L + np * G);
  for (int i = 0; i < 3; ++i) x.segment(i * np * L, np * L) = Eigen::Map<const Eigen::VectorXd>(f.u[i].data(), np * L);
  x.tail(np * G) = Eigen::Map<const Eigen::VectorXd>(f.p.data(), np * G);
  return x;
}

StripField StripSolver::unpack(const Eigen::VectorXd& x) const {
  const int np = grid_.n_points(), L = grid_.levels, G = grid_.n_gauss();
  StripField f;
  for (int i = 0; i < 3; ++i) f.u[i] = Eigen::Map<const Eigen::MatrixXd>(x.data() + i * np * L, np, L);
  f.p = Eigen::Map<const Eigen::MatrixXd>(x.data() + 3 * np * L, np, G);
  return f;
}

Eigen::VectorXd StripSolver::residual_vector(const StripField& f, const PlaneTrace& phi, const PlaneTrace& psi) const {
  const int N = grid_.levels - 1;
  const Gradient gr = gradient(f.u);
  StripField r = linear_part(f, gr);
  add_quadratic(r, f.u, gr, f.u);
  for (int i = 0; i < 3; ++i) {
    r.u[i].col(0) -= phi[i];
    r.u[i].col(N) -= psi[i];
  }
  return pack(r);
}

Eigen::VectorXd StripSolver::jacobian_apply(const StripField& base, const StripField& dir) const {
  const Gradient gb = gradient(base.u), gd = gradient(dir.u);
  StripField r = linear_part(dir, gd);
  add_quadratic(r, base.u, gd, dir.u);
  add_quadratic(r, dir.u, gb, base.u);
  return pack(r);
}

void StripSolver::build_preconditioner() {
  const int n = grid_.n, np = n * n, L = grid_.levels, N = L - 1, G = grid_.n_gauss();
  const int size = 3 * L + G;
  const Eigen::MatrixXd Dz = grid_.diff / mean_depth_;
  const Eigen::MatrixXd Dz2 = Dz * Dz;
  const Eigen::MatrixXd& Ip = grid_.from_gauss;
  const Eigen::MatrixXd DIp = Dz * Ip;
  const Eigen::MatrixXd& Ig = grid_.to_gauss;
  const Eigen::MatrixXd IgD = Ig * Dz;
  flat_lu_.resize(np);
  parallel_for(0, np, [&](int m) {
    const double x1 = lattice_xi(m % n, n, grid_.period), x2 = lattice_xi(m / n, n, grid_.period);
    const double s = x1 * x1 + x2 * x2;
    const cd d1(0, x1), d2(0, x2);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(size, size);
    auto U = [L](int i, int k) { return i * L + k; };
    auto Pg = [L](int g) { return 3 * L + g; };
    for (int i = 0; i < 3; ++i) {
      A(U(i, 0), U(i, 0)) = 1.0;
      for (int k = 1; k < N; ++k) {
        for (int c = 0; c < L; ++c) A(U(i, k), U(i, c)) -= Dz2(k, c);
        A(U(i, k), U(i, k)) += s;
        for (int g = 0; g < G; ++g) {
          const cd gp = i == 0 ? d1 * Ip(k, g) : i == 1 ? d2 * Ip(k, g) : cd(DIp(k, g));
          A(U(i, k), Pg(g)) += gp;
        }
      }
      for (int c = 0; c < L; ++c) A(U(i, N), U(i, c)) = Dz(N, c);
    }
    for (int k = 1; k < N; ++k) {
      A(U(0, k), U(1, k)) -= 1.0;
      A(U(1, k), U(0, k)) += 1.0;
    }
    for (int g = 0; g < G; ++g) A(U(2, N), Pg(g)) -= Ip(N, g);
    for (int g = 0; g < G; ++g) {
      for (int c = 0; c < L; ++c) {
        A(Pg(g), U(0, c)) += d1 * Ig(g, c);
        A(Pg(g), U(1, c)) += d2 * Ig(g, c);
        A(Pg(g), U(2, c)) += IgD(g, c);
      }
    }
    flat_lu_[m].compute(A);
  });
}

void StripSolver::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& out) const {
  const int n = grid_.n, np = n * n, L = grid_.levels, G = grid_.n_gauss();
  const StripField R = unpack(r);
  std::array<Eigen::MatrixXcd, 3> su;
  Eigen::MatrixXcd sp(np, G);
  for (int i = 0; i < 3; ++i) {
    su[i].resize(np, L);
    for (int k = 0; k < L; ++k) su[i].col(k) = spectral_column(R.u[i].col(k), n);
  }
  for (int g = 0; g < G; ++g) sp.col(g) = spectral_column(R.p.col(g), n);
  parallel_for(0, np, [&](int m) {
    Eigen::VectorXcd b(3 * L + G);
    for (int i = 0; i < 3; ++i) b.segment(i * L, L) = su[i].row(m).transpose();
    b.tail(G) = sp.row(m).transpose();
    const Eigen::VectorXcd x = flat_lu_[m].solve(b);
    for (int i = 0; i < 3; ++i) su[i].row(m) = x.segment(i * L, L).transpose();
    sp.row(m) = x.tail(G).transpose();
  });
  StripField z;
  for (int i = 0; i < 3; ++i) {
    z.u[i].resize(np, L);
    for (int k = 0; k < L; ++k) z.u[i].col(k) = physical_column(su[i].col(k), n);
  }
  z.p.resize(np, G);
  for (int g = 0; g < G; ++g) z.p.col(g) = physical_column(sp.col(g), n);
  out = pack(z);
}

Eigen::Vector3cd StripSolver::flat_response(int mode, const Eigen::Vector3cd& psi_hat) const {
  const int L = grid_.levels, N = L - 1, G = grid_.n_gauss();
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(3 * L + G);
  for (int i = 0; i < 3; ++i) b(i * L + N) = psi_hat(i);
  const Eigen::VectorXcd x = flat_lu_[mode].solve(b);
  return {x(N), x(L + N), x(2 * L + N)};
}

double StripSolver::tangency_defect(const PlaneTrace& phi) const {
  return (phi[2] - phi[0].cwiseProduct(grid_.dgamma[0]) - phi[1].cwiseProduct(grid_.dgamma[1])).cwiseAbs().maxCoeff();
}

StripField StripSolver::lift_boundary(const PlaneTrace& phi) const {
  const double scale = std::max({1.0, phi[0].cwiseAbs().maxCoeff(), phi[1].cwiseAbs().maxCoeff()});
  const double defect = tangency_defect(phi);
  if (defect > 1e-8 * scale) {
    std::ostringstream os;
    os << "bottom data is not tangent to the rough boundary (max |phi . n| = " << defect << ")";
    throw SolverError(ErrorCode::invalid_input, os.str());
  }
  StripField f = StripField::zeros(grid_);
  Eigen::MatrixXd a1, a2, b1, b2;
  horizontal_derivatives(phi[0], a1, a2);
  horizontal_derivatives(phi[1], b1, b2);
  const Eigen::VectorXd div = a1.col(0) + b2.col(0);
  for (int k = 0; k < grid_.levels; ++k) {
    f.u[0].col(k) = phi[0];
    f.u[1].col(k) = phi[1];
    f.u[2].col(k) = phi[2] - div.cwiseProduct(grid_.depth) * grid_.sigma(k);
  }
  return f;
}

StripResiduals StripSolver::residuals(const StripField& f, const PlaneTrace& phi, const PlaneTrace& psi) const {
  const int N = grid_.levels - 1;
  const StripField r = unpack(residual_vector(f, phi, psi));
  StripResiduals out;
  for (int i = 0; i < 3; ++i) {
    out.momentum = std::max(out.momentum, max_abs(r.u[i].middleCols(1, N - 1)));
    out.bottom = std::max(out.bottom, max_abs(r.u[i].col(0)));
    out.top = std::max(out.top, max_abs(r.u[i].col(N)));
  }
  out.divergence = max_abs(r.p);
  return out;
}

StripField StripSolver::solve(const PlaneTrace& phi, const PlaneTrace& psi, StripReport* report,
                              const StripField* guess) const {
  StripReport rep;
  double data = 0;
  for (int i = 0; i < 3; ++i) data = std::max({data, phi[i].cwiseAbs().maxCoeff(), psi[i].cwiseAbs().maxCoeff()});
  rep.small_data = data <= opt_.smallness;

  StripField f = guess ? *guess : lift_boundary(phi);
  Eigen::VectorXd x = pack(f);
  Eigen::VectorXd r = residual_vector(f, phi, psi);
  double rn = r.cwiseAbs().maxCoeff();
  rep.residual_history.push_back(rn);
  while (rn > opt_.tol) {
    if (rep.newton_iterations >= opt_.max_newton) {
      std::ostringstream os;
      os << "strip Newton did not converge in " << opt_.max_newton << " steps (residual " << rn
         << "); smallness violated or grid too coarse";
      throw SolverError(ErrorCode::newton_stagnation, os.str());
    }
    const StripField base = unpack(x);
    const Gradient gb = gradient(base.u);
    auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
      const StripField d = unpack(v);
      const Gradient gd = gradient(d.u);
      StripField jr = linear_part(d, gd);
      add_quadratic(jr, base.u, gd, d.u);
      add_quadratic(jr, d.u, gb, base.u);
      out = pack(jr);
    };
    auto prec = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { precondition(v, out); };
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(x.size());
    const Eigen::VectorXd rhs = -r;
    const GmresResult gr = gmres<double>(apply, prec, rhs, dx, opt_.forcing, opt_.gmres_restart, opt_.gmres_max);
    rep.gmres_iterations += gr.iterations;
    // backtracking on the 2-norm
    const double r2 = r.norm();
    double t = 1.0;
    Eigen::VectorXd xn, rnew;
    for (;;) {
      xn = x + t * dx;
      rnew = residual_vector(unpack(xn), phi, psi);
      if (rnew.norm() <= (1.0 - 1e-4 * t) * r2 || t < 1.0 / 64) break;
      t *= 0.5;
    }
    ++rep.newton_iterations;
    const double rn_new = rnew.cwiseAbs().maxCoeff();
    if (!(rnew.norm() < r2)) {
      // no decrease at all: either at the rounding floor or genuinely stuck
      if (rn <= 1e3 * opt_.tol) break;
      std::ostringstream os;
      os << "strip Newton stagnated at residual " << rn << " (GMRES rel. residual " << gr.relative_residual
         << "); smallness violated or grid too coarse";
      throw SolverError(ErrorCode::newton_stagnation, os.str());
    }
    x = std::move(xn);
    r = std::move(rnew);
    rn = rn_new;
    rep.residual_history.push_back(rn);
  }
  f = unpack(x);
  rep.converged = true;
  rep.residuals = residuals(f, phi, psi);
  if (report) *report = rep;
  return f;
}

PlaneTrace StripSolver::stress_trace_top(const StripField& f) const {
  const int N = grid_.levels - 1;
  PlaneTrace out;
  for (int i = 0; i < 3; ++i) out[i] = inv_depth_.cwiseProduct(f.u[i] * grid_.diff.row(N).transpose());
  const Eigen::VectorXd p_top = f.p * grid_.from_gauss.row(N).transpose();
  Eigen::VectorXd ke = Eigen::VectorXd::Zero(grid_.n_points());
  for (int i = 0; i < 3; ++i) ke += 0.5 * f.u[i].col(N).cwiseAbs2();
  out[2] -= p_top + ke;
  return out;
}

PlaneTrace StripSolver::velocity_trace_top(const StripField& f) const {
  const int N = grid_.levels - 1;
  return {f.u[0].col(N), f.u[1].col(N), f.u[2].col(N)};
}

double StripSolver::sample(const StripField& f, int comp, int point, double sigma) const {
  const Eigen::MatrixXd w = interpolation_matrix(grid_.sigma, Eigen::VectorXd::Constant(1, sigma));
  return (w * f.u[comp].row(point).transpose())(0);
}

double StripSolver::sample_pressure(const StripField& f, int point, double sigma) const {
  const Eigen::MatrixXd w = interpolation_matrix(grid_.gauss, Eigen::VectorXd::Constant(1, sigma));
  return (w * f.p.row(point).transpose())(0);
}

}  // namespace ekbl
