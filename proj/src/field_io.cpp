#include "ekbl/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace ekbl {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("EKBL dump truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <typename Flow>
auto fields_of(Flow& f) {
  return std::array{&f.v[0], &f.v[1], &f.v[2], &f.dz_v[0], &f.dz_v[1], &f.dz_v[2], &f.p, &f.omega};
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

}  // namespace

void write_ekbl(const std::string& path, const FlowField& f, const SpectralGrid& g) {
  std::ofstream os = open_out(path, std::ios::binary);
  os.write("EKBL", 4);
  put<std::uint32_t>(os, kEkblVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_modes));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_z()));
  put<std::uint32_t>(os, 8);
  put<double>(os, g.period);
  for (int j = 0; j < g.n_z(); ++j) put<double>(os, g.z(j));
  for (const SpectralField* s : fields_of(f))
    for (int m = 0; m < g.n_total(); ++m)
      for (int j = 0; j < g.n_z(); ++j) {
        put<double>(os, s->coeffs(m, j).real());
        put<double>(os, s->coeffs(m, j).imag());
      }
  if (!os) throw std::runtime_error("write failed: " + path);
}

FlowField read_ekbl(const std::string& path, SpectralGrid& g) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "EKBL", 4) != 0) throw std::runtime_error(path + ": not an EKBL dump");
  const auto version = get<std::uint32_t>(is);
  if (version != kEkblVersion) throw std::runtime_error(path + ": unsupported EKBL version " + std::to_string(version));
  const int n = static_cast<int>(get<std::uint32_t>(is));
  const int nz = static_cast<int>(get<std::uint32_t>(is));
  const auto nf = get<std::uint32_t>(is);
  if (nf != 8) throw std::runtime_error(path + ": expected 8 fields");
  const double period = get<double>(is);
  Eigen::VectorXd z(nz);
  for (int j = 0; j < nz; ++j) z(j) = get<double>(is);
  g = SpectralGrid::with_nodes(period, n, z);
  FlowField f(g);
  for (SpectralField* s : fields_of(f)) {
    for (int m = 0; m < g.n_total(); ++m)
      for (int j = 0; j < nz; ++j) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        s->coeffs(m, j) = cd(re, im);
      }
  }
  return f;
}

void write_flow_csv(const std::string& path, const FlowField& f, const SpectralGrid& g, int stride, double z_offset) {
  std::ofstream os = open_out(path);
  os << "y1,y2,z,v1,v2,v3,p\n" << std::setprecision(17);
  const int n = g.n_modes;
  for (int j = 0; j < g.n_z(); j += std::max(1, stride)) {
    const Eigen::MatrixXd v1 = to_physical(slice(f.v[0], g, j));
    const Eigen::MatrixXd v2 = to_physical(slice(f.v[1], g, j));
    const Eigen::MatrixXd v3 = to_physical(slice(f.v[2], g, j));
    const Eigen::MatrixXd p = to_physical(slice(f.p, g, j));
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1)
        os << g.period * i1 / n << ',' << g.period * i2 / n << ',' << z_offset + g.z(j) << ',' << v1(i1, i2) << ','
           << v2(i1, i2) << ',' << v3(i1, i2) << ',' << p(i1, i2) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_strip_csv(const std::string& path, const StripField& f, const StripGrid& g) {
  std::ofstream os = open_out(path);
  os << "y1,y2,z,v1,v2,v3,p\n" << std::setprecision(17);
  const Eigen::MatrixXd p = f.p * g.from_gauss.transpose();
  for (int k = 0; k < g.levels; ++k)
    for (int pt = 0; pt < g.n_points(); ++pt)
      os << g.period * (pt % g.n) / g.n << ',' << g.period * (pt / g.n) / g.n << ',' << g.y3(pt, k) << ','
         << f.u[0](pt, k) << ',' << f.u[1](pt, k) << ',' << f.u[2](pt, k) << ',' << p(pt, k) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_columns(const std::string& path, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns) {
  if (header.size() != columns.size()) throw std::invalid_argument("write_columns: header/column mismatch");
  std::ofstream os = open_out(path);
  os << std::setprecision(17);
  for (size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  const Eigen::Index rows = columns.empty() ? 0 : columns[0].size();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c](r);
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace ekbl
