// lyapcheck: run stability scenarios and list registered instances.
//
//   lyapcheck run <config.json> [--seed N] [--tolerance X] [--report PATH]
//   lyapcheck list [--json]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "lyap/scenario.hpp"

int main(int argc, char** argv) {
  namespace sc = lyap::scenario;

  CLI::App app{"Check Lyapunov stability certificates on bundled and configured instances"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--tolerance", tolerance, "override the order tolerance of the instance")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "run the checks declared in a scenario config");
  run->fallthrough();
  std::string config;
  std::optional<std::string> report;
  run->add_option("config", config, "scenario config (JSON)")->required();
  run->add_option("--report", report, "write the JSON report here instead of the configured path");

  auto* list = app.add_subcommand("list", "list registered instances and their parameters");
  bool as_json = false;
  list->add_flag("--json", as_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sc::kExitConfig;
  }

  try {
    const auto registry = sc::builtin_registry();
    if (*list) {
      std::cout << sc::list_instances(registry, as_json);
      return sc::kExitOk;
    }
    return sc::run_scenario(registry, config, {seed, tolerance, report}, std::cerr, std::cout);
  } catch (const lyap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return sc::kExitConfig;
  } catch (const lyap::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return sc::kExitNumeric;
  }
}
