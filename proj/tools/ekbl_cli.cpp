// ekbl_cli: run scenarios, verification checks and field exports.
//
//   ekbl_cli run <scenario.json> [--out DIR] [--workers N] [--tol X]
//   ekbl_cli verify {roots|kernels|integrals} [--out DIR] [--workers N] [--samples N] [--seed S]
//   ekbl_cli export <in.ekbl> --out <file.csv> [--stride K]
//   ekbl_cli schema
//
// Exit codes: 0 ok, 1 bad usage or invalid scenario, 2 solver error, 3 internal, 4 I/O.

#include "ekbl/errors.hpp"
#include "ekbl/field_io.hpp"
#include "ekbl/scenario.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <iostream>

namespace {

using nlohmann::json;

int print_error(const std::string& code, const std::string& message, int exit_code) {
  std::cout << json{{"error", {{"code", code}, {"message", message}}}}.dump(2) << "\n";
  return exit_code;
}

int finish(const ekbl::RunResult& r) {
  if (r.exit_code != 0) {
    std::cout << r.report.dump(2) << "\n";
    return r.exit_code;
  }
  for (const auto& w : r.report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << json{{"status", "ok"}, {"out_dir", r.out_dir}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ekman boundary layer solvers over rough bottoms"};
  app.require_subcommand(1);

  std::string scenario_path;
  ekbl::RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("scenario", scenario_path, "Scenario JSON")->required();
  run->add_option("--out", run_opt.out_dir, "Output directory");
  run->add_option("--workers", run_opt.workers, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  run->add_option("--tol", run_opt.tol, "Override the primary tolerance")->check(CLI::PositiveNumber);

  std::string check;
  ekbl::RunOptions verify_opt;
  int samples = 1000;
  unsigned seed = 11;
  auto* verify = app.add_subcommand("verify", "Run one verification check");
  verify->add_option("check", check, "roots, kernels or integrals")
      ->required()
      ->check(CLI::IsMember({"roots", "kernels", "integrals"}));
  verify->add_option("--out", verify_opt.out_dir, "Output directory");
  verify->add_option("--workers", verify_opt.workers, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  verify->add_option("--samples", samples, "Root samples")->check(CLI::Range(10, 10000000));
  verify->add_option("--seed", seed, "Root sampling seed");

  std::string export_in, export_out;
  int stride = 1;
  auto* exp = app.add_subcommand("export", "Convert an EKBL binary dump to CSV");
  exp->add_option("input", export_in, "EKBL file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", export_out, "CSV path")->required();
  exp->add_option("--stride", stride, "Keep every stride-th z node")->check(CLI::PositiveNumber);

  app.add_subcommand("schema", "Print the scenario schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      const ekbl::Scenario s = ekbl::parse_scenario_file(scenario_path);
      return finish(ekbl::run_scenario(s, run_opt));
    }
    if (*verify) {
      json doc{{"version", ekbl::kScenarioVersion}, {"kind", "verify_" + check}};
      if (check == "roots") doc["verify"] = {{"samples", samples}, {"seed", seed}};
      return finish(ekbl::run_scenario(ekbl::parse_scenario(doc), verify_opt));
    }
    if (*exp) {
      ekbl::SpectralGrid g;
      const ekbl::FlowField f = ekbl::read_ekbl(export_in, g);
      ekbl::write_flow_csv(export_out, f, g, stride);
      std::cout << json{{"status", "ok"}, {"out", export_out}}.dump() << "\n";
      return 0;
    }
    std::cout << ekbl::scenario_schema().dump(2) << "\n";
    return 0;
  } catch (const ekbl::SolverError& e) {
    return print_error(e.code_name(), e.what(), e.code() == ekbl::ErrorCode::invalid_input ? 1 : 2);
  } catch (const std::exception& e) {
    return print_error("INTERNAL", e.what(), 3);
  }
}
