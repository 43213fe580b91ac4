// effect-engine command line: run | validate | verify
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "effect_engine/error.hpp"
#include "effect_engine/io/config.hpp"
#include "effect_engine/io/run.hpp"
#include "effect_engine/parallel.hpp"
#include "effect_engine/verify/suites.hpp"

namespace ee = effect_engine;

namespace {

int validate_command(const std::string& config_path) {
  try {
    auto config = ee::io::load_config(config_path);
    std::cout << "config OK: " << config.queries.size() << " quer"
              << (config.queries.size() == 1 ? "y" : "ies") << ", reference arm '"
              << config.model.reference_arm << "'\n";
    return 0;
  } catch (const ee::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}

int verify_command(const std::string& suite, std::uint64_t seed) {
  try {
    auto results = ee::verify::run_suite(suite, seed);
    bool ok = true;
    for (const auto& r : results) {
      std::printf("%s %-24s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                  r.detail.c_str());
      ok = ok && r.passed;
    }
    return ok ? 0 : 2;
  } catch (const ee::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect estimation from interacted linear models"};
  app.require_subcommand(1);

  ee::io::RunOptions run_options;
  std::string data_path, config_path, out_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Fit models and answer the configured queries");
  run->add_option("--data", data_path, "CSV data file")->required();
  run->add_option("--config", config_path, "JSON query config")->required();
  run->add_option("--out", out_path, "Report path (overrides output.path)");
  run->add_option("--seed", seed, "Seed for quasi-Monte Carlo integration");
  run->add_flag("--flat-prior-ok", run_options.flat_prior_ok,
                "Allow ranking on an OLS fit read as a flat-prior posterior");
  run->add_flag("--partial", run_options.partial, "Record failing queries instead of aborting");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("--config", validate_path, "JSON query config")->required();

  std::string suite;
  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify", "Run oracle acceptance suites");
  verify->add_option("--suite", suite, "Suite name or 'all'")->required();
  verify->add_option("--seed", verify_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*run) {
    run_options.data_path = data_path;
    run_options.config_path = config_path;
    if (!out_path.empty()) run_options.out_path = out_path;
    run_options.seed = seed;
    run_options.workers = ee::default_workers();
    auto outcome = ee::io::run(run_options);
    (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << "\n";
    return outcome.exit_code;
  }
  if (*validate) return validate_command(validate_path);
  return verify_command(suite, verify_seed);
}
