#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ekbl/errors.hpp"
#include "ekbl/field_io.hpp"
#include "ekbl/nonlinear.hpp"
#include "ekbl/scenario.hpp"
#include "ekbl/strip.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ekbl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ekbl_test_io_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Error message of a scenario that should not parse.
std::string parse_error(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
    return e.what();
  }
  FAIL("scenario was accepted");
  return {};
}

FlowField sample_flow(const SpectralGrid& g) {
  const HalfspaceSolver hs(g);
  return hs.solve(random_boundary(g, 0.1, 2), nullptr);
}

}  // namespace

TEST_CASE("EKBL dump round trips bit for bit") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 8, 24);
  const FlowField f = sample_flow(g);
  const fs::path dir = scratch_dir("ekbl");
  fs::create_directories(dir);
  write_ekbl((dir / "f.ekbl").string(), f, g);
  SpectralGrid g2;
  const FlowField h = read_ekbl((dir / "f.ekbl").string(), g2);
  CHECK(g2.n_modes == g.n_modes);
  CHECK(g2.period == g.period);
  CHECK(std::memcmp(g2.z.data(), g.z.data(), sizeof(double) * g.n_z()) == 0);
  auto same = [](const SpectralField& a, const SpectralField& b) {
    return a.coeffs.size() == b.coeffs.size() &&
           std::memcmp(a.coeffs.data(), b.coeffs.data(), sizeof(cd) * a.coeffs.size()) == 0;
  };
  for (int c = 0; c < 3; ++c) {
    CHECK(same(f.v[c], h.v[c]));
    CHECK(same(f.dz_v[c], h.dz_v[c]));
  }
  CHECK(same(f.p, h.p));
  CHECK(same(f.omega, h.omega));
  // header layout
  const std::string raw = slurp(dir / "f.ekbl");
  CHECK(raw.substr(0, 4) == "EKBL");
  CHECK(raw.size() == 4 + 4 * 4 + 8 + 8 * 24 + 8 * 64 * 24 * 16);
}

TEST_CASE("corrupt dumps are rejected") {
  const fs::path dir = scratch_dir("corrupt");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.ekbl") << "NOPE";
  SpectralGrid g;
  CHECK_THROWS(read_ekbl((dir / "bad.ekbl").string(), g));
  CHECK_THROWS(read_ekbl((dir / "missing.ekbl").string(), g));
}

TEST_CASE("flow CSV has seven columns and full precision") {
  const SpectralGrid g = SpectralGrid::graded(2 * M_PI, 4, 10);
  const FlowField f = sample_flow(g);
  const fs::path dir = scratch_dir("csv");
  fs::create_directories(dir);
  write_flow_csv((dir / "f.csv").string(), f, g, 3);
  std::ifstream in(dir / "f.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "y1,y2,z,v1,v2,v3,p");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  // nodes 0, 3, 6, 9 of 10
  CHECK(rows == 16 * 4);
  // values parse back to the same doubles
  std::ifstream again(dir / "f.csv");
  std::getline(again, line);
  std::getline(again, line);
  std::stringstream ss(line);
  std::string cell;
  std::vector<double> vals;
  while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
  REQUIRE(vals.size() == 7);
  const double v1 = to_physical(slice(f.v[0], g, 0))(0, 0);
  CHECK(vals[3] == v1);
}

TEST_CASE("minimal scenario gets the documented defaults") {
  const Scenario s = parse_scenario(json{{"version", 1}, {"kind", "ekman_flat"}});
  CHECK(s.kind == ScenarioKind::ekman_flat);
  CHECK(s.grid.period == doctest::Approx(2 * M_PI).epsilon(1e-15));
  CHECK(s.grid.n_modes == 64);
  CHECK(s.grid.z_max == 50.0);
  CHECK(s.grid.n_z == 256);
  CHECK(s.tolerances.tol > 0);
}

TEST_CASE("scenario round trip is the identity") {
  const json doc = {{"version", 1},
                    {"kind", "full_rough"},
                    {"grid", {{"strip_points", 16}, {"n_modes", 32}}},
                    {"gamma", {{"family", "filtered_noise"}, {"amplitude", 0.1}, {"seed", 4}}},
                    {"phi", {{"amplitude", 0.01}, {"direction", {1.0, 0.5}}}},
                    {"output", {{"fields_binary", true}}}};
  const Scenario a = parse_scenario(doc);
  const Scenario b = parse_scenario(a.to_json());
  CHECK(a == b);
  CHECK(a.to_json().dump() == b.to_json().dump());
  // M was resolved from the profile
  const RoughnessProfile gamma = RoughnessProfile::filtered_noise(16, 2 * M_PI, 0.1, 4);
  CHECK(a.grid.top == gamma.sup_gamma + 1.0);
  CHECK(a.grid.n_z == 128);
}

TEST_CASE("validation names the offending key") {
  CHECK(parse_error(json{{"kind", "ekman_flat"}}).find("version") != std::string::npos);
  CHECK(parse_error(json{{"version", 2}, {"kind", "ekman_flat"}}).find("version") != std::string::npos);
  CHECK(parse_error(json{{"version", 1}, {"kind", "warp"}}).find("kind") != std::string::npos);
  CHECK(parse_error(json{{"version", 1}, {"kind", "ekman_flat"}, {"grid", {{"n_mode", 64}}}}).find("grid.n_mode") !=
        std::string::npos);
  CHECK(parse_error(json{{"version", 1}, {"kind", "ekman_flat"}, {"grid", {{"n_modes", -4}}}})
            .find("grid.n_modes") != std::string::npos);
  CHECK(parse_error(json{{"version", 1}, {"kind", "ekman_flat"}, {"grid", {{"z_max", "far"}}}})
            .find("grid.z_max") != std::string::npos);
  CHECK(parse_error(json{{"version", 1}, {"kind", "strip"}, {"phi", {{"family", "random"}}}}).find("phi.family") !=
        std::string::npos);
  CHECK(parse_error(json{{"version", 1}, {"kind", "ekman_flat"}, {"extra", 1}}).find("extra") != std::string::npos);
}

TEST_CASE("interface below the roughness is an inconsistent scenario") {
  const std::string msg = parse_error(json{{"version", 1},
                                           {"kind", "strip"},
                                           {"gamma", {{"family", "sinusoidal"}, {"amplitude", 0.3}}},
                                           {"grid", {{"top", 0.2}}}});
  CHECK(msg.find("grid.top") != std::string::npos);
  CHECK(msg.find("sup gamma") != std::string::npos);
}

TEST_CASE("large nonlinear amplitude warns but parses") {
  const Scenario s =
      parse_scenario(json{{"version", 1}, {"kind", "nonlinear_halfspace"}, {"phi", {{"amplitude", 0.5}}}});
  CHECK(s.warnings.size() == 1);
}

TEST_CASE("ekman_flat run writes a deterministic report") {
  const Scenario s = parse_scenario(json{{"version", 1}, {"kind", "ekman_flat"}, {"output", {{"csv_stride", 64}}}});
  RunOptions o1, o2;
  o1.out_dir = scratch_dir("ekman1").string();
  o2.out_dir = scratch_dir("ekman2").string();
  o2.workers = 1;
  const RunResult r1 = run_scenario(s, o1);
  REQUIRE(r1.exit_code == 0);
  const RunResult r2 = run_scenario(s, o2);
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.report["results"]["max_abs_error"].get<double>() <= 1e-8);
  CHECK(r1.report["results"]["decay_fit"]["rate"].get<double>() ==
        doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-3));
  CHECK(slurp(fs::path(o1.out_dir) / "report.json") == slurp(fs::path(o2.out_dir) / "report.json"));
  for (const char* f : {"report.json", "timing.json", "profile.csv", "fields.csv"})
    CHECK(fs::exists(fs::path(o1.out_dir) / f));
  // the resolved configuration is recorded
  CHECK(parse_scenario(r1.report["config"]) == s);
}

TEST_CASE("verify_integrals run reports three finite constants") {
  const Scenario s = parse_scenario(
      json{{"version", 1}, {"kind", "verify_integrals"}, {"verify", {{"integral_z_max", 1e3}, {"integral_points", 20}}}});
  RunOptions o;
  o.out_dir = scratch_dir("integrals").string();
  const RunResult r = run_scenario(s, o);
  REQUIRE(r.exit_code == 0);
  const json& c = r.report["results"]["sup_constants"];
  REQUIRE(c.size() == 3);
  for (const auto& v : c) CHECK((v.is_number() && std::isfinite(v.get<double>())));
}

TEST_CASE("solver failure leaves no artifacts") {
  const Scenario s = parse_scenario(json{{"version", 1},
                                         {"kind", "nonlinear_halfspace"},
                                         {"grid", {{"n_modes", 8}, {"n_z", 64}}},
                                         {"phi", {{"family", "random"}, {"amplitude", 80.0}}},
                                         {"tolerances", {{"max_iter", 20}}}});
  RunOptions o;
  o.out_dir = scratch_dir("fail").string();
  const RunResult r = run_scenario(s, o);
  CHECK(r.exit_code != 0);
  CHECK(r.report["error"]["code"] == "SMALLNESS_VIOLATED");
  CHECK(!fs::exists(o.out_dir));
}

TEST_CASE("output root from the environment") {
  Scenario s = parse_scenario(json{{"version", 1}, {"kind", "verify_roots"}});
  ::setenv("EKBL_OUTPUT_ROOT", "/tmp/ekbl_root", 1);
  CHECK(resolve_output_dir(s, {}) == "/tmp/ekbl_root/verify_roots");
  RunOptions o;
  o.out_dir = "/elsewhere";
  CHECK(resolve_output_dir(s, o) == "/elsewhere");
  ::unsetenv("EKBL_OUTPUT_ROOT");
  CHECK(resolve_output_dir(s, {}) == "out/verify_roots");
}

TEST_CASE("schema lists every kind") {
  const json sch = scenario_schema();
  CHECK(sch["version"] == 1);
  CHECK(sch["kinds"].size() == 8);
  CHECK(sch["defaults"]["grid"]["n_modes"] == 64);
}
