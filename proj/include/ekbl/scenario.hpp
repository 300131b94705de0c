/**
 * @file scenario.hpp
 * @brief Scenario files: parsing, validation, dispatch and artifact emission.
 *
 * A scenario is a JSON object with an explicit "version" and a "kind".  Parsing
 * fills every default, so the serialized form is the fully resolved run
 * configuration and parse(serialize(s)) == s.
 */
#pragma once

#include "json.hpp"

#include <string>
#include <vector>

namespace ekbl {

constexpr int kScenarioVersion = 1;

enum class ScenarioKind {
  ekman_flat,
  linear_halfspace,
  nonlinear_halfspace,
  strip,
  full_rough,
  verify_roots,
  verify_kernels,
  verify_integrals
};

const char* kind_name(ScenarioKind k);

struct GridSpec {
  double period = 2.0 * 3.14159265358979323846;  // L
  int n_modes = 64;
  double z_max = 50.0;
  int n_z = 0;            // 0: 256, or 128 for full_rough
  int n_sigma = 24;       // strip CGL levels
  double top = 0;         // M; 0 selects sup gamma + 1
  int strip_points = 32;
};

/// Bottom velocity phi.
struct BoundarySpec {
  std::string family = "uniform";  // uniform | random | tangent
  double amplitude = 1.0;
  double direction[2] = {1.0, 0.0};
  unsigned seed = 1;
  int kmax = 2;
};

/// Bottom profile gamma.
struct RoughnessSpec {
  std::string family = "flat";  // flat | sinusoidal | quasi_periodic | filtered_noise | csv
  double amplitude = 0.0;
  int k1 = 1, k2 = 1;
  unsigned seed = 1;
  int kmax = 3;
  std::string path;
};

struct SourceSpec {
  std::string family = "none";  // none | random
  double amplitude = 0.0;
  unsigned seed = 1;
  int kmax = 2;
};

struct ToleranceSpec {
  double tol = 0;          // 0: kind default (Picard 1e-10, strip 1e-11, transmission 1e-9, quadrature 1e-8)
  int max_iter = 50;       // Picard
  int max_newton = 12;     // transmission
};

struct SmallnessSpec {
  double bound = 0.05;     // advisory amplitude bound for the nonlinear kinds
  bool estimate = false;   // run the empirical contraction-constant estimate
};

struct VerifySpec {
  int samples = 1000;
  unsigned seed = 11;
  int a = 2, b = 0;
  double beta = -1.0;
  double integral_z_max = 1e4;
  int integral_points = 60;
};

struct OutputSpec {
  std::string dir;         // empty: $EKBL_OUTPUT_ROOT/<kind>, else ./out/<kind>
  bool fields_csv = true;
  bool fields_binary = false;
  int csv_stride = 16;     // keep every stride-th z node in fields.csv
};

struct Scenario {
  int version = kScenarioVersion;
  ScenarioKind kind = ScenarioKind::ekman_flat;
  GridSpec grid;
  BoundarySpec phi;
  RoughnessSpec gamma;
  SourceSpec source;
  ToleranceSpec tolerances;
  SmallnessSpec smallness;
  VerifySpec verify;
  OutputSpec output;
  std::vector<std::string> warnings;  // filled by validation, not serialized

  nlohmann::json to_json() const;
  bool operator==(const Scenario& o) const { return to_json() == o.to_json(); }
};

/// Throws SolverError(INVALID_INPUT) naming the offending key path.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_file(const std::string& path);

/// Published description: kinds, families, defaults.
nlohmann::json scenario_schema();

struct RunOptions {
  std::string out_dir;     // overrides the scenario's output directory
  int workers = 0;         // 0: hardware concurrency
  double tol = 0;          // overrides tolerances.tol when positive
};

struct RunResult {
  int exit_code = 0;
  std::string out_dir;
  nlohmann::json report;   // report.json, or the error document on failure
};

/// Runs the scenario.  Artifacts are written only after the solve succeeded;
/// on failure nothing is written and `report` holds {"error": {code, message}}.
RunResult run_scenario(const Scenario& s, const RunOptions& opt = {});

/// Output directory after applying overrides and EKBL_OUTPUT_ROOT.
std::string resolve_output_dir(const Scenario& s, const RunOptions& opt);

}  // namespace ekbl
