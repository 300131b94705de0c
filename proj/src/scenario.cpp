#include "ekbl/scenario.hpp"

#include "ekbl/errors.hpp"
#include "ekbl/field_io.hpp"
#include "ekbl/halfspace.hpp"
#include "ekbl/nonlinear.hpp"
#include "ekbl/strip.hpp"
#include "ekbl/transmission.hpp"
#include "ekbl/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace ekbl {

using nlohmann::json;

namespace {

constexpr ScenarioKind kAllKinds[] = {ScenarioKind::ekman_flat,         ScenarioKind::linear_halfspace,
                                      ScenarioKind::nonlinear_halfspace, ScenarioKind::strip,
                                      ScenarioKind::full_rough,          ScenarioKind::verify_roots,
                                      ScenarioKind::verify_kernels,      ScenarioKind::verify_integrals};

const std::vector<std::string> kPhiFamilies = {"uniform", "random", "tangent"};
const std::vector<std::string> kGammaFamilies = {"flat", "sinusoidal", "quasi_periodic", "filtered_noise", "csv"};
const std::vector<std::string> kSourceFamilies = {"none", "random"};

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
  throw SolverError(ErrorCode::invalid_input, path + ": " + msg);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

// Reads keys of one JSON object, remembering which were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (auto v = take(key)) {
      if (!v->is_number()) invalid(key_path(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) invalid(key_path(key), "must be finite");
    }
  }
  void integer(const std::string& key, int& out) {
    if (auto v = take(key)) {
      if (!v->is_number_integer()) invalid(key_path(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void seed(const std::string& key, unsigned& out) {
    if (auto v = take(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) invalid(key_path(key), "expected a nonnegative integer");
      out = v->get<unsigned>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (auto v = take(key)) {
      if (!v->is_boolean()) invalid(key_path(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (auto v = take(key)) {
      if (!v->is_string()) invalid(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void choice(const std::string& key, std::string& out, const std::vector<std::string>& allowed) {
    string(key, out);
    for (const auto& a : allowed)
      if (a == out) return;
    invalid(key_path(key), "'" + out + "' is not one of " + join(allowed));
  }
  void pair(const std::string& key, double (&out)[2]) {
    if (auto v = take(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        invalid(key_path(key), "expected an array of two numbers");
      out[0] = (*v)[0].get<double>();
      out[1] = (*v)[1].get<double>();
    }
  }
  Section sub(const std::string& key) {
    static const json empty = json::object();
    const json* v = take(key);
    return Section(v ? *v : empty, key_path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) invalid(key_path(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) invalid(path, msg);
}

bool uses_strip(ScenarioKind k) { return k == ScenarioKind::strip || k == ScenarioKind::full_rough; }

RoughnessProfile make_roughness(const RoughnessSpec& r, int n, double period) {
  if (r.family == "flat") return RoughnessProfile::flat(n, period);
  if (r.family == "sinusoidal") return RoughnessProfile::sinusoidal(n, period, r.amplitude, r.k1, r.k2);
  if (r.family == "quasi_periodic") return RoughnessProfile::quasi_periodic(n, period, r.amplitude, r.k1);
  if (r.family == "filtered_noise") return RoughnessProfile::filtered_noise(n, period, r.amplitude, r.seed, r.kmax);
  return RoughnessProfile::from_csv(r.path, n, period);
}

double default_tol(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::nonlinear_halfspace: return 1e-10;
    case ScenarioKind::strip: return 1e-11;
    case ScenarioKind::full_rough: return 1e-9;
    case ScenarioKind::verify_integrals: return 1e-8;
    default: return 1e-10;
  }
}

void validate(Scenario& s) {
  const GridSpec& g = s.grid;
  require(g.period > 0, "grid.period", "must be positive");
  require(g.n_modes >= 4 && g.n_modes % 2 == 0, "grid.n_modes", "must be even and >= 4");
  require(g.z_max > 0, "grid.z_max", "must be positive");
  require(g.n_z == 0 || g.n_z >= 8, "grid.n_z", "must be >= 8");
  require(g.n_sigma >= 4, "grid.n_sigma", "must be >= 4");
  require(g.top >= 0, "grid.top", "must be nonnegative");
  require(g.strip_points >= 4 && g.strip_points % 2 == 0, "grid.strip_points", "must be even and >= 4");
  if (s.kind == ScenarioKind::full_rough)
    require(g.n_modes >= g.strip_points, "grid.n_modes", "must be >= grid.strip_points for full_rough");
  if (s.grid.n_z == 0) s.grid.n_z = s.kind == ScenarioKind::full_rough ? 128 : 256;

  require(s.phi.amplitude >= 0, "phi.amplitude", "must be nonnegative");
  require(s.phi.kmax >= 1, "phi.kmax", "must be >= 1");
  if (s.phi.family != "random")
    require(std::hypot(s.phi.direction[0], s.phi.direction[1]) > 0, "phi.direction", "must be nonzero");
  if (uses_strip(s.kind))
    require(s.phi.family != "random", "phi.family", "strip kinds take uniform or tangent bottom data");
  if (s.kind == ScenarioKind::ekman_flat)
    require(s.phi.family == "uniform", "phi.family", "ekman_flat needs uniform data");

  require(s.gamma.amplitude >= 0, "gamma.amplitude", "must be nonnegative");
  require(s.gamma.kmax >= 1, "gamma.kmax", "must be >= 1");
  if (s.gamma.family == "csv") require(!s.gamma.path.empty(), "gamma.path", "required for the csv family");

  require(s.source.amplitude >= 0, "source.amplitude", "must be nonnegative");
  require(s.source.kmax >= 1, "source.kmax", "must be >= 1");
  if (s.source.family != "none")
    require(s.kind == ScenarioKind::linear_halfspace, "source.family", "a source is only used by linear_halfspace");

  require(s.tolerances.tol >= 0, "tolerances.tol", "must be nonnegative");
  require(s.tolerances.max_iter >= 1, "tolerances.max_iter", "must be >= 1");
  require(s.tolerances.max_newton >= 1, "tolerances.max_newton", "must be >= 1");
  if (s.tolerances.tol == 0) s.tolerances.tol = default_tol(s.kind);

  require(s.smallness.bound > 0, "smallness.bound", "must be positive");
  require(s.verify.samples >= 10, "verify.samples", "must be >= 10");
  require(s.verify.a >= 0 && s.verify.b >= 0, "verify.a", "exponents must be nonnegative");
  require(s.verify.integral_z_max > 0, "verify.integral_z_max", "must be positive");
  require(s.verify.integral_points >= 8, "verify.integral_points", "must be >= 8");
  require(s.output.csv_stride >= 1, "output.csv_stride", "must be >= 1");

  if (uses_strip(s.kind)) {
    RoughnessProfile gamma = make_roughness(s.gamma, g.strip_points, g.period);
    if (s.grid.top == 0) {
      s.grid.top = gamma.sup_gamma + 1.0;
    } else if (!(s.grid.top > gamma.sup_gamma)) {
      std::ostringstream os;
      os << "interface height M = " << s.grid.top << " must exceed sup gamma = " << gamma.sup_gamma;
      invalid("grid.top", os.str());
    }
  }

  s.warnings.clear();
  if ((s.kind == ScenarioKind::nonlinear_halfspace || uses_strip(s.kind)) && s.phi.amplitude > s.smallness.bound) {
    std::ostringstream os;
    os << "phi.amplitude " << s.phi.amplitude << " exceeds smallness.bound " << s.smallness.bound;
    s.warnings.push_back(os.str());
  }
}

}  // namespace

const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::ekman_flat: return "ekman_flat";
    case ScenarioKind::linear_halfspace: return "linear_halfspace";
    case ScenarioKind::nonlinear_halfspace: return "nonlinear_halfspace";
    case ScenarioKind::strip: return "strip";
    case ScenarioKind::full_rough: return "full_rough";
    case ScenarioKind::verify_roots: return "verify_roots";
    case ScenarioKind::verify_kernels: return "verify_kernels";
    case ScenarioKind::verify_integrals: return "verify_integrals";
  }
  return "unknown";
}

json Scenario::to_json() const {
  return json{
      {"version", version},
      {"kind", kind_name(kind)},
      {"grid",
       {{"period", grid.period},
        {"n_modes", grid.n_modes},
        {"z_max", grid.z_max},
        {"n_z", grid.n_z},
        {"n_sigma", grid.n_sigma},
        {"top", grid.top},
        {"strip_points", grid.strip_points}}},
      {"phi",
       {{"family", phi.family},
        {"amplitude", phi.amplitude},
        {"direction", {phi.direction[0], phi.direction[1]}},
        {"seed", phi.seed},
        {"kmax", phi.kmax}}},
      {"gamma",
       {{"family", gamma.family},
        {"amplitude", gamma.amplitude},
        {"k1", gamma.k1},
        {"k2", gamma.k2},
        {"seed", gamma.seed},
        {"kmax", gamma.kmax},
        {"path", gamma.path}}},
      {"source",
       {{"family", source.family}, {"amplitude", source.amplitude}, {"seed", source.seed}, {"kmax", source.kmax}}},
      {"tolerances",
       {{"tol", tolerances.tol}, {"max_iter", tolerances.max_iter}, {"max_newton", tolerances.max_newton}}},
      {"smallness", {{"bound", smallness.bound}, {"estimate", smallness.estimate}}},
      {"verify",
       {{"samples", verify.samples},
        {"seed", verify.seed},
        {"a", verify.a},
        {"b", verify.b},
        {"beta", verify.beta},
        {"integral_z_max", verify.integral_z_max},
        {"integral_points", verify.integral_points}}},
      {"output",
       {{"dir", output.dir},
        {"fields_csv", output.fields_csv},
        {"fields_binary", output.fields_binary},
        {"csv_stride", output.csv_stride}}}};
}

Scenario parse_scenario(const json& doc) {
  Scenario s;
  Section root(doc, "");
  {
    const json* v = root.take("version");
    if (!v) invalid("version", "required");
    if (!v->is_number_integer() || v->get<int>() != kScenarioVersion)
      invalid("version", "unsupported, expected " + std::to_string(kScenarioVersion));
  }
  {
    const json* v = root.take("kind");
    if (!v) invalid("kind", "required");
    if (!v->is_string()) invalid("kind", "expected a string");
    bool found = false;
    std::vector<std::string> names;
    for (ScenarioKind k : kAllKinds) {
      names.push_back(kind_name(k));
      if (v->get<std::string>() == kind_name(k)) {
        s.kind = k;
        found = true;
      }
    }
    if (!found) invalid("kind", "'" + v->get<std::string>() + "' is not one of " + join(names));
  }

  Section grid = root.sub("grid");
  grid.number("period", s.grid.period);
  grid.integer("n_modes", s.grid.n_modes);
  grid.number("z_max", s.grid.z_max);
  grid.integer("n_z", s.grid.n_z);
  grid.integer("n_sigma", s.grid.n_sigma);
  grid.number("top", s.grid.top);
  grid.integer("strip_points", s.grid.strip_points);
  grid.finish();

  Section phi = root.sub("phi");
  phi.choice("family", s.phi.family, kPhiFamilies);
  phi.number("amplitude", s.phi.amplitude);
  phi.pair("direction", s.phi.direction);
  phi.seed("seed", s.phi.seed);
  phi.integer("kmax", s.phi.kmax);
  phi.finish();

  Section gamma = root.sub("gamma");
  gamma.choice("family", s.gamma.family, kGammaFamilies);
  gamma.number("amplitude", s.gamma.amplitude);
  gamma.integer("k1", s.gamma.k1);
  gamma.integer("k2", s.gamma.k2);
  gamma.seed("seed", s.gamma.seed);
  gamma.integer("kmax", s.gamma.kmax);
  gamma.string("path", s.gamma.path);
  gamma.finish();

  Section source = root.sub("source");
  source.choice("family", s.source.family, kSourceFamilies);
  source.number("amplitude", s.source.amplitude);
  source.seed("seed", s.source.seed);
  source.integer("kmax", s.source.kmax);
  source.finish();

  Section tol = root.sub("tolerances");
  tol.number("tol", s.tolerances.tol);
  tol.integer("max_iter", s.tolerances.max_iter);
  tol.integer("max_newton", s.tolerances.max_newton);
  tol.finish();

  Section small = root.sub("smallness");
  small.number("bound", s.smallness.bound);
  small.boolean("estimate", s.smallness.estimate);
  small.finish();

  Section ver = root.sub("verify");
  ver.integer("samples", s.verify.samples);
  ver.seed("seed", s.verify.seed);
  ver.integer("a", s.verify.a);
  ver.integer("b", s.verify.b);
  ver.number("beta", s.verify.beta);
  ver.number("integral_z_max", s.verify.integral_z_max);
  ver.integer("integral_points", s.verify.integral_points);
  ver.finish();

  Section out = root.sub("output");
  out.string("dir", s.output.dir);
  out.boolean("fields_csv", s.output.fields_csv);
  out.boolean("fields_binary", s.output.fields_binary);
  out.integer("csv_stride", s.output.csv_stride);
  out.finish();

  root.finish();
  validate(s);
  return s;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid(path, "cannot open scenario file");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    invalid(path, std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

json scenario_schema() {
  json kinds = json::array();
  for (ScenarioKind k : kAllKinds) kinds.push_back(kind_name(k));
  Scenario defaults;
  defaults.grid.n_z = 0;
  return json{{"version", kScenarioVersion},
              {"required", {"version", "kind"}},
              {"kinds", kinds},
              {"families", {{"phi", kPhiFamilies}, {"gamma", kGammaFamilies}, {"source", kSourceFamilies}}},
              {"defaults", defaults.to_json()},
              {"notes",
               {{"grid.n_z", "0 selects 256, or 128 for full_rough"},
                {"grid.top", "0 selects sup gamma + 1; otherwise must exceed sup gamma"},
                {"tolerances.tol", "0 selects the kind default"},
                {"output.dir", "empty selects $EKBL_OUTPUT_ROOT/<kind>, falling back to out/<kind>"}}}};
}

std::string resolve_output_dir(const Scenario& s, const RunOptions& opt) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  if (!s.output.dir.empty()) return s.output.dir;
  const char* root = std::getenv("EKBL_OUTPUT_ROOT");
  std::filesystem::path base = (root && *root) ? root : "out";
  return (base / kind_name(s.kind)).string();
}

// ---------------------------------------------------------------- running

namespace {

using Clock = std::chrono::steady_clock;

// Everything a run produces, held in memory until the solve is done.
struct Artifacts {
  json results = json::object();
  std::vector<std::string> profile_header;
  std::vector<Eigen::VectorXd> profile;
  std::vector<std::function<void(const std::filesystem::path&)>> writers;
  json timing = json::object();
};

class Stopwatch {
 public:
  explicit Stopwatch(json& sink) : sink_(sink), t0_(Clock::now()) {}
  void lap(const std::string& name) {
    const auto t = Clock::now();
    sink_[name] = std::chrono::duration<double>(t - t0_).count();
    t0_ = t;
  }

 private:
  json& sink_;
  Clock::time_point t0_;
};

json diagnostics_json(const HalfspaceDiagnostics& d) {
  return json{{"momentum_residual", d.momentum_residual},
              {"divergence_residual", d.divergence_residual},
              {"boundary_error", d.boundary_error}};
}

SpectralGrid halfspace_grid(const Scenario& s) {
  return SpectralGrid::graded(s.grid.period, s.grid.n_modes, s.grid.n_z, s.grid.z_max);
}

BoundaryData halfspace_boundary(const Scenario& s, const SpectralGrid& g) {
  if (s.phi.family == "random") return random_boundary(g, s.phi.amplitude, s.phi.seed, s.phi.kmax);
  const double n = std::hypot(s.phi.direction[0], s.phi.direction[1]);
  return BoundaryData::uniform(g, s.phi.amplitude * s.phi.direction[0] / n, s.phi.amplitude * s.phi.direction[1] / n);
}

PlaneTrace strip_boundary(const Scenario& s, const RoughnessProfile& gamma) {
  const double n = std::hypot(s.phi.direction[0], s.phi.direction[1]);
  return tangent_bottom_data(gamma, s.phi.amplitude * s.phi.direction[0] / n,
                             s.phi.amplitude * s.phi.direction[1] / n);
}

void add_profile(Artifacts& a, const SpectralGrid& g, const Eigen::VectorXd& sup, double z_offset = 0.0) {
  Eigen::VectorXd z = g.z.array() + z_offset;
  Eigen::VectorXd weighted = sup.array() * (1.0 + z.array()).pow(1.0 / 3.0);
  a.profile_header = {"z", "sup_v", "weighted_sup_v"};
  a.profile = {z, sup, weighted};
}

void add_flow_writers(Artifacts& a, const Scenario& s, std::shared_ptr<const FlowField> f,
                      std::shared_ptr<const SpectralGrid> g, double z_offset = 0.0) {
  if (s.output.fields_csv)
    a.writers.push_back([=, stride = s.output.csv_stride](const std::filesystem::path& dir) {
      write_flow_csv((dir / "fields.csv").string(), *f, *g, stride, z_offset);
    });
  if (s.output.fields_binary)
    a.writers.push_back([=](const std::filesystem::path& dir) { write_ekbl((dir / "fields.ekbl").string(), *f, *g); });
}

void run_ekman(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  auto g = std::make_shared<SpectralGrid>(halfspace_grid(s));
  HalfspaceSolver solver(*g);
  sw.lap("setup");
  const BoundaryData v0 = halfspace_boundary(s, *g);
  HalfspaceDiagnostics diag;
  auto u = std::make_shared<FlowField>(solver.solve(v0, nullptr, &diag));
  sw.lap("solve");

  const double phi1 = v0.v0[0](0).real(), phi2 = v0.v0[1](0).real();
  const double scale = std::hypot(phi1, phi2);
  double abs_err = 0, nonzero_modes = 0;
  for (int j = 0; j < g->n_z(); ++j) {
    auto [r1, r2] = ekman_reference(phi1, phi2, g->z(j));
    abs_err = std::max(abs_err, std::hypot(std::abs(u->v[0].coeffs(0, j) - r1), std::abs(u->v[1].coeffs(0, j) - r2)));
    abs_err = std::max(abs_err, std::abs(u->v[2].coeffs(0, j)));
    for (int c = 0; c < 3; ++c)
      nonzero_modes = std::max(nonzero_modes, u->v[c].coeffs.col(j).tail(g->n_total() - 1).cwiseAbs().maxCoeff());
  }
  const Eigen::VectorXd sup = sup_profile(*u, *g);
  const ExponentialFit fit = fit_exponential(g->z, sup, 1.0, 30.0);
  sw.lap("analysis");

  a.results = json{{"max_abs_error", abs_err},
                   {"max_rel_error", scale > 0 ? abs_err / scale : abs_err},
                   {"max_nonzero_mode", nonzero_modes},
                   {"ode_residual", ekman_ode_residual(phi1, phi2, g->z)},
                   {"decay_fit", fit.to_json()},
                   {"decay_rate_exact", 1.0 / std::sqrt(2.0)},
                   {"diagnostics", diagnostics_json(diag)}};
  add_profile(a, *g, sup);
  add_flow_writers(a, s, u, g);
}

void run_linear(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  auto g = std::make_shared<SpectralGrid>(halfspace_grid(s));
  HalfspaceSolver solver(*g);
  sw.lap("setup");
  const BoundaryData v0 = halfspace_boundary(s, *g);
  SourceTensor F;
  const bool with_source = s.source.family == "random";
  if (with_source) F = random_source(*g, s.source.amplitude, s.source.seed, s.source.kmax);
  HalfspaceDiagnostics diag;
  auto u = std::make_shared<FlowField>(solver.solve(v0, with_source ? &F : nullptr, &diag));
  sw.lap("solve");

  const double data = boundary_norm(v0, *g);
  const double norm = flow_norm(*u, *g);
  const Eigen::VectorXd sup = sup_profile(*u, *g);
  a.results = json{{"boundary_norm", data},
                   {"source_norm", with_source ? s.source.amplitude : 0.0},
                   {"weighted_norm", norm},
                   {"norm_ratio", norm / std::max(data + (with_source ? s.source.amplitude : 0.0), 1e-300)},
                   {"compatibility_defect", v0.compatibility_defect(*g)},
                   {"diagnostics", diagnostics_json(diag)}};
  add_profile(a, *g, sup);
  add_flow_writers(a, s, u, g);
}

void run_nonlinear(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  auto g = std::make_shared<SpectralGrid>(halfspace_grid(s));
  HalfspaceSolver solver(*g);
  sw.lap("setup");
  const BoundaryData v0 = halfspace_boundary(s, *g);
  json smallness = json{{"bound", s.smallness.bound}};
  if (s.smallness.estimate) {
    const ContractionConstant c = estimate_c0(solver);
    const double amp = boundary_norm(v0, *g);
    smallness["c0"] = c.c0;
    smallness["linear"] = c.linear;
    smallness["quadratic"] = c.quadratic;
    smallness["admissible_delta"] = c.admissible_delta();
    smallness["admissible_delta_single"] = c.admissible_delta_single();
    if (amp > c.admissible_delta()) {
      std::ostringstream os;
      os << "boundary amplitude " << amp << " exceeds the empirical contraction radius " << c.admissible_delta();
      throw SolverError(ErrorCode::smallness_violated, os.str());
    }
    sw.lap("estimate");
  }
  PicardOptions po;
  po.tol = s.tolerances.tol;
  po.max_iter = s.tolerances.max_iter;
  auto [sol, report] = solve_nsc_halfspace(solver, v0, po);
  auto u = std::make_shared<FlowField>(std::move(sol));
  sw.lap("solve");

  // distance to the linear solution, O(amplitude^2)
  FlowField diff = *u;
  FlowField lin = solver.solve(v0, nullptr);
  lin *= -1.0;
  diff += lin;
  const double amp = boundary_norm(v0, *g);
  const double dist = flow_norm(diff, *g);
  const Eigen::VectorXd sup = sup_profile(*u, *g);
  a.results = json{{"picard", report.to_json()},
                   {"boundary_norm", amp},
                   {"distance_to_linear", dist},
                   {"distance_constant", amp > 0 ? dist / (amp * amp) : 0.0},
                   {"smallness", smallness}};
  add_profile(a, *g, sup);
  add_flow_writers(a, s, u, g);
}

void run_strip(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  RoughnessProfile gamma = make_roughness(s.gamma, s.grid.strip_points, s.grid.period);
  StripOptions so;
  so.tol = s.tolerances.tol;
  auto solver = std::make_shared<StripSolver>(gamma, s.grid.top, s.grid.n_sigma, so);
  sw.lap("setup");
  const PlaneTrace phi = strip_boundary(s, gamma);
  PlaneTrace psi;
  for (auto& c : psi) c = Eigen::VectorXd::Zero(gamma.n * gamma.n);
  StripReport report;
  auto f = std::make_shared<StripField>(solver->solve(phi, psi, &report));
  sw.lap("solve");

  const PlaneTrace top = solver->velocity_trace_top(*f);
  double top_sup = 0;
  for (int p = 0; p < gamma.n * gamma.n; ++p)
    top_sup = std::max(top_sup, std::sqrt(top[0](p) * top[0](p) + top[1](p) * top[1](p) + top[2](p) * top[2](p)));
  a.results = json{{"strip", report.to_json()},
                   {"tangency_defect", solver->tangency_defect(phi)},
                   {"sup_gamma", gamma.sup_gamma},
                   {"lipschitz_bound", gamma.lipschitz_bound},
                   {"top", s.grid.top},
                   {"top_velocity_sup", top_sup}};
  if (s.output.fields_csv)
    a.writers.push_back(
        [=](const std::filesystem::path& dir) { write_strip_csv((dir / "fields.csv").string(), *f, solver->grid()); });
}

void run_full(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  RoughnessProfile gamma = make_roughness(s.gamma, s.grid.strip_points, s.grid.period);
  TransmissionGrids grids;
  grids.strip_points = s.grid.strip_points;
  grids.strip_levels = s.grid.n_sigma;
  grids.top = s.grid.top;
  grids.halfspace_modes = s.grid.n_modes;
  grids.halfspace_nz = s.grid.n_z;
  grids.halfspace_zmax = s.grid.z_max;
  TransmissionOptions to;
  to.tol = s.tolerances.tol;
  to.max_newton = s.tolerances.max_newton;
  auto t = std::make_shared<Transmission>(gamma, s.grid.period, grids, to);
  sw.lap("setup");
  const PlaneTrace phi = strip_boundary(s, gamma);
  auto full = std::make_shared<FullFlow>(t->solve(phi));
  sw.lap("solve");

  auto ug = std::make_shared<SpectralGrid>(t->halfspace().grid());
  const DecayProfile prof = decay_profile(*full, *ug);
  a.results = json{{"transmission", full->to_json()},
                   {"sup_gamma", gamma.sup_gamma},
                   {"lipschitz_bound", gamma.lipschitz_bound}};
  Eigen::VectorXd weighted = prof.sup.array() * (1.0 + prof.height.array()).pow(1.0 / 3.0);
  a.profile_header = {"y3", "sup_v", "weighted_sup_v"};
  a.profile = {prof.height, prof.sup, weighted};
  auto upper = std::shared_ptr<const FlowField>(full, &full->upper);
  add_flow_writers(a, s, upper, ug, full->top);
  if (s.output.fields_csv)
    a.writers.push_back([=](const std::filesystem::path& dir) {
      write_strip_csv((dir / "strip_fields.csv").string(), full->lower, t->strip().grid());
    });
}

void run_verify_roots(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  a.results = root_asymptotics_check(s.verify.samples, s.verify.seed).to_json();
  sw.lap("check");
}

void run_verify_kernels(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  KernelSymbol P;
  P.a = s.verify.a;
  P.b = s.verify.b;
  P.beta = s.verify.beta;
  const KernelDecayReport low = kernel_decay_check(P);
  sw.lap("low_frequency");
  const HighFreqReport high = highfreq_kernel_check(P);
  sw.lap("high_frequency");
  a.results = json{{"low_frequency", low.to_json()}, {"high_frequency", high.to_json()}};
  Eigen::VectorXd sv(low.envelope_samples.size()), kv(low.envelope_samples.size());
  for (size_t i = 0; i < low.envelope_samples.size(); ++i) {
    sv(i) = low.envelope_samples[i].first;
    kv(i) = low.envelope_samples[i].second;
  }
  a.profile_header = {"s", "abs_K1"};
  a.profile = {sv, kv};
}

void run_verify_integrals(const Scenario& s, Artifacts& a) {
  Stopwatch sw(a.timing);
  const IntegralReport r = integral_inequalities_check(
      default_integral_grid(s.verify.integral_z_max, s.verify.integral_points), 2.0 / 3.0, 2.0 / 3.0,
      s.tolerances.tol);
  sw.lap("check");
  a.results = r.to_json();
  a.results["sup_constants"] = {r.sup_first, r.sup_second, r.sup_third_measured};
  a.profile_header = {"z", "I1", "I2", "I3"};
  a.profile = {r.z, r.values[0], r.values[1], r.values[2]};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& opt) {
  Scenario s = scenario;
  if (opt.tol > 0) s.tolerances.tol = opt.tol;
  set_workers(opt.workers);

  RunResult res;
  res.out_dir = resolve_output_dir(s, opt);
  Artifacts a;
  const auto t0 = Clock::now();
  try {
    switch (s.kind) {
      case ScenarioKind::ekman_flat: run_ekman(s, a); break;
      case ScenarioKind::linear_halfspace: run_linear(s, a); break;
      case ScenarioKind::nonlinear_halfspace: run_nonlinear(s, a); break;
      case ScenarioKind::strip: run_strip(s, a); break;
      case ScenarioKind::full_rough: run_full(s, a); break;
      case ScenarioKind::verify_roots: run_verify_roots(s, a); break;
      case ScenarioKind::verify_kernels: run_verify_kernels(s, a); break;
      case ScenarioKind::verify_integrals: run_verify_integrals(s, a); break;
    }
  } catch (const SolverError& e) {
    res.exit_code = 2;
    res.report = json{{"error", {{"code", e.code_name()}, {"message", e.what()}}}, {"kind", kind_name(s.kind)}};
    return res;
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.report = json{{"error", {{"code", "INTERNAL"}, {"message", e.what()}}}, {"kind", kind_name(s.kind)}};
    return res;
  }
  a.timing["total"] = std::chrono::duration<double>(Clock::now() - t0).count();

  json config = s.to_json();
  res.report = json{{"version", kScenarioVersion},
                    {"kind", kind_name(s.kind)},
                    {"config", config},
                    {"warnings", s.warnings},
                    {"results", a.results}};

  try {
    const std::filesystem::path dir(res.out_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", res.report.dump(2) + "\n");
    write_text(dir / "timing.json", json{{"seconds", a.timing}, {"workers", opt.workers}}.dump(2) + "\n");
    if (!a.profile.empty()) write_columns((dir / "profile.csv").string(), a.profile_header, a.profile);
    for (auto& w : a.writers) w(dir);
  } catch (const std::exception& e) {
    res.exit_code = 4;
    res.report = json{{"error", {{"code", "IO_ERROR"}, {"message", e.what()}}}, {"kind", kind_name(s.kind)}};
  }
  return res;
}

}  // namespace ekbl
