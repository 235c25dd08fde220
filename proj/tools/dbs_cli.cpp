// dbs_cli: run builtin or file-defined scenarios and the SGD checks.
//
//   dbs_cli list
//   dbs_cli run <config.json | builtin> --out DIR [--seed N] [--parallel]
//   dbs_cli check <config.json | builtin> --out DIR [--seed N]

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "dbs/dbs.hpp"

namespace {

using dbs::scenario::ScenarioConfig;

ScenarioConfig resolve(const std::string& source) {
  if (std::filesystem::exists(source)) return dbs::scenario::load_config(source);
  if (auto builtin = dbs::scenario::find_builtin(source)) return *builtin;
  throw dbs::Error(dbs::Errc::io, "'" + source + "' is neither a readable config file nor a builtin scenario");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic batch size scheduling: cluster simulator and SGD checks"};
  app.require_subcommand(1);

  std::string source;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool parallel = false;

  auto* list = app.add_subcommand("list", "Print the builtin scenario catalog");

  auto* run = app.add_subcommand("run", "Simulate every strategy of a scenario and write CSV/JSON reports");
  run->add_option("scenario", source, "Config file path or builtin scenario name")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_flag("--parallel", parallel, "Run strategies concurrently (same results)");

  auto* check = app.add_subcommand("check", "Run the SGD convergence checks of a scenario");
  check->add_option("scenario", source, "Config file path or builtin scenario name")->required();
  check->add_option("--out", out_dir, "Output directory")->required();
  check->add_option("--seed", seed, "Override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dbs::scenario::kValidationFailure;
  }

  try {
    if (list->parsed()) {
      dbs::scenario::list_scenarios(std::cout);
      return dbs::scenario::kSuccess;
    }
    auto config = resolve(source);
    if (seed) config.seed = *seed;
    if (run->parsed()) return dbs::scenario::run_scenario(config, out_dir, std::cout, parallel);
    if (check->parsed()) {
      const int code = dbs::scenario::run_sgd_check(config, out_dir, std::cout);
      if (code != dbs::scenario::kSuccess) std::cerr << "error: one or more SGD checks failed\n";
      return code;
    }
  } catch (const dbs::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dbs::scenario::kValidationFailure;
  } catch (const dbs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dbs::scenario::kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dbs::scenario::kRuntimeFailure;
  }
  return dbs::scenario::kRuntimeFailure;
}
