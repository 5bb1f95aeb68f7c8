#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "flowjump/experiments.hpp"

namespace {

int execute(flowjump::ExperimentConfig config, std::optional<std::uint64_t> seed, const std::string& output) {
  if (seed) config.seed = *seed;
  const std::string dir = output.empty() ? config.output : output;
  const auto manifest = flowjump::run_experiment(config, dir);
  for (const auto& check : manifest.checks) std::cout << flowjump::format_check(check) << '\n';
  for (const auto& [key, value] : manifest.notes) std::cout << "  " << key << " = " << value << '\n';
  std::cout << (manifest.all_pass() ? "all checks passed" : "some checks failed") << " -> " << dir
            << "/manifest.txt\n";
  return manifest.all_pass() ? EXIT_SUCCESS : EXIT_FAILURE;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic flows with jumps: experiments and acceptance suite"};
  app.require_subcommand(1);
  std::string config_path;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool smoke = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Path to the config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--output", output, "Override the output directory");

  auto* acc = app.add_subcommand("acceptance", "Run the acceptance suite with the config's seed");
  acc->add_option("config", config_path, "Path to the config file")->required()->check(CLI::ExistingFile);
  acc->add_option("--seed", seed, "Override the config seed");
  acc->add_option("--output", output, "Override the output directory");
  acc->add_flag("--smoke", smoke, "Reduced sample counts with widened tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    auto config = flowjump::ExperimentConfig::load(config_path);
    if (acc->parsed()) {
      config.kind = flowjump::ExperimentKind::AcceptanceAll;
      config.smoke = config.smoke || smoke;
    }
    return execute(std::move(config), seed, output);
  } catch (const std::exception& e) {
    std::cerr << "flowjump: " << e.what() << '\n';
    return 2;
  }
}
