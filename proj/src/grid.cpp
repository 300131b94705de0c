#include "ekbl/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ekbl {

SpectralGrid SpectralGrid::graded(double period, int n_modes, int n_z, double z_max, double ratio) {
  if (n_z < 4) throw std::invalid_argument("graded grid needs at least 4 nodes");
  if (ratio <= 0) ratio = 1.0 + 3.0 / n_z;
  SpectralGrid g;
  g.period = period;
  g.n_modes = n_modes;
  g.stretching = ratio;
  g.z.resize(n_z);
  const int cells = n_z - 1;
  const double total = ratio == 1.0 ? cells : (std::pow(ratio, cells) - 1.0) / (ratio - 1.0);
  double h = z_max / total, acc = 0;
  g.z(0) = 0;
  for (int j = 1; j < n_z; ++j) {
    acc += h;
    g.z(j) = acc;
    h *= ratio;
  }
  g.z(n_z - 1) = z_max;
  g.validate();
  return g;
}

SpectralGrid SpectralGrid::with_nodes(double period, int n_modes, Eigen::VectorXd nodes) {
  SpectralGrid g;
  g.period = period;
  g.n_modes = n_modes;
  g.z = std::move(nodes);
  g.stretching = 0;
  g.validate();
  return g;
}

void SpectralGrid::validate() const {
  if (!(period > 0)) throw std::invalid_argument("grid: period must be positive");
  if (n_modes < 2 || n_modes % 2) throw std::invalid_argument("grid: n_modes must be even and >= 2");
  if (z.size() < 4) throw std::invalid_argument("grid: need at least 4 z nodes");
  if (z(0) != 0.0) throw std::invalid_argument("grid: z must start at 0");
  for (Eigen::Index j = 1; j < z.size(); ++j)
    if (!(z(j) > z(j - 1))) throw std::invalid_argument("grid: z nodes must increase strictly");
}

double SpectralGrid::xi1(int m) const { return 2.0 * M_PI / period * wavenumber(m % n_modes); }
double SpectralGrid::xi2(int m) const { return 2.0 * M_PI / period * wavenumber(m / n_modes); }

int SpectralGrid::mode_of(int k1, int k2) const {
  auto idx = [&](int k) { return ((k % n_modes) + n_modes) % n_modes; };
  return idx(k1) + n_modes * idx(k2);
}

int SpectralGrid::conjugate_mode(int m) const { return mode_of(-wavenumber(m % n_modes), -wavenumber(m / n_modes)); }

bool SpectralGrid::is_nyquist(int m) const {
  return wavenumber(m % n_modes) == -n_modes / 2 || wavenumber(m / n_modes) == -n_modes / 2;
}

double SpectralField::hermitian_defect(const SpectralGrid& g) const {
  double d = 0;
  for (int m = 0; m < g.n_total(); ++m) {
    if (g.is_nyquist(m)) continue;
    const int mc = g.conjugate_mode(m);
    d = std::max(d, (coeffs.row(mc) - coeffs.row(m).conjugate()).cwiseAbs().maxCoeff());
  }
  return d;
}

FlowField::FlowField(const SpectralGrid& g) {
  for (int i = 0; i < 3; ++i) {
    v[i] = SpectralField(g, FieldRole::velocity);
    dz_v[i] = SpectralField(g, FieldRole::velocity);
  }
  p = SpectralField(g, FieldRole::pressure);
  omega = SpectralField(g, FieldRole::vorticity);
}

FlowField& FlowField::operator+=(const FlowField& o) {
  for (int i = 0; i < 3; ++i) {
    v[i].coeffs += o.v[i].coeffs;
    dz_v[i].coeffs += o.dz_v[i].coeffs;
  }
  p.coeffs += o.p.coeffs;
  omega.coeffs += o.omega.coeffs;
  return *this;
}

FlowField& FlowField::operator*=(double a) {
  for (int i = 0; i < 3; ++i) {
    v[i].coeffs *= a;
    dz_v[i].coeffs *= a;
  }
  p.coeffs *= a;
  omega.coeffs *= a;
  return *this;
}

SourceTensor::SourceTensor(const SpectralGrid& g) {
  for (auto& c : comp) c = SpectralField(g, FieldRole::source);
}

bool SourceTensor::is_zero() const {
  for (const auto& c : comp)
    if (!c.coeffs.isZero(0)) return false;
  return true;
}

namespace {

void fft_rows_cols(Eigen::MatrixXcd& a, bool forward) {
  static thread_local Eigen::FFT<double> fft;
  std::vector<cd> in, out;
  const Eigen::Index n1 = a.rows(), n2 = a.cols();
  in.resize(n2);
  for (Eigen::Index r = 0; r < n1; ++r) {
    for (Eigen::Index c = 0; c < n2; ++c) in[c] = a(r, c);
    forward ? fft.fwd(out, in) : fft.inv(out, in);
    for (Eigen::Index c = 0; c < n2; ++c) a(r, c) = out[c];
  }
  in.resize(n1);
  for (Eigen::Index c = 0; c < n2; ++c) {
    for (Eigen::Index r = 0; r < n1; ++r) in[r] = a(r, c);
    forward ? fft.fwd(out, in) : fft.inv(out, in);
    for (Eigen::Index r = 0; r < n1; ++r) a(r, c) = out[r];
  }
}

}  // namespace

Eigen::MatrixXcd to_spectral(const Eigen::MatrixXcd& physical) {
  Eigen::MatrixXcd a = physical;
  fft_rows_cols(a, true);
  a /= static_cast<double>(a.size());
  return a;
}

Eigen::MatrixXcd to_spectral(const Eigen::MatrixXd& physical) { return to_spectral(Eigen::MatrixXcd(physical.cast<cd>())); }

Eigen::MatrixXcd to_physical_complex(const Eigen::MatrixXcd& spectral) {
  Eigen::MatrixXcd a = spectral;
  fft_rows_cols(a, false);  // inv divides by each length
  a *= static_cast<double>(a.size());
  return a;
}

Eigen::MatrixXd to_physical(const Eigen::MatrixXcd& spectral) { return to_physical_complex(spectral).real(); }

Eigen::MatrixXcd slice(const SpectralField& f, const SpectralGrid& g, int j) {
  Eigen::MatrixXcd s(g.n_modes, g.n_modes);
  for (int m = 0; m < g.n_total(); ++m) s(m % g.n_modes, m / g.n_modes) = f.coeffs(m, j);
  return s;
}

void set_slice(SpectralField& f, const SpectralGrid& g, int j, const Eigen::MatrixXcd& s) {
  for (int m = 0; m < g.n_total(); ++m) f.coeffs(m, j) = s(m % g.n_modes, m / g.n_modes);
}

void dealias(Eigen::MatrixXcd& spectral) {
  const int n = static_cast<int>(spectral.rows());
  auto keep = [n](int i) {
    const int k = i < n / 2 ? i : i - n;
    return 3 * std::abs(k) <= n;
  };
  for (int c = 0; c < spectral.cols(); ++c)
    for (int r = 0; r < n; ++r)
      if (!keep(r) || !keep(c)) spectral(r, c) = 0;
}

double weighted_sup_norm(const SpectralField& f, const SpectralGrid& g, double alpha) {
  double best = 0;
  for (int j = 0; j < g.n_z(); ++j) {
    if (f.coeffs.col(j).isZero(0)) continue;
    const double m = to_physical(slice(f, g, j)).cwiseAbs().maxCoeff();
    best = std::max(best, std::pow(1.0 + g.z(j), alpha) * m);
  }
  return best;
}

Eigen::VectorXd sup_profile(const FlowField& f, const SpectralGrid& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.n_z());
  for (int j = 0; j < g.n_z(); ++j) {
    Eigen::MatrixXd mag2 = Eigen::MatrixXd::Zero(g.n_modes, g.n_modes);
    for (int i = 0; i < 3; ++i) {
      if (f.v[i].coeffs.col(j).isZero(0)) continue;
      mag2 += to_physical(slice(f.v[i], g, j)).cwiseAbs2();
    }
    out(j) = std::sqrt(mag2.maxCoeff());
  }
  return out;
}

double weighted_sup_norm(const FlowField& f, const SpectralGrid& g, double alpha) {
  const Eigen::VectorXd prof = sup_profile(f, g);
  double best = 0;
  for (int j = 0; j < g.n_z(); ++j) best = std::max(best, std::pow(1.0 + g.z(j), alpha) * prof(j));
  return best;
}

namespace {
std::atomic<int> g_workers{0};
}

void set_workers(int n) { g_workers = std::max(0, n); }

int workers() {
  const int w = g_workers.load();
  if (w > 0) return w;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
  const int nw = std::min(workers(), std::max(1, end - begin));
  if (nw <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<int> next{begin};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int t = 0; t < nw; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < end && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace ekbl
