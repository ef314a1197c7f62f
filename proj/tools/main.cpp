#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "experiments/config.hpp"
#include "experiments/experiments.hpp"
#include "mlmcuq/error.hpp"
#include "mlmcuq/version.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace mlmcuq;
  using namespace mlmcuq::experiments;

  CLI::App app{"Multilevel Monte Carlo experiments for random interface problems"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned workers = 1;
  auto* run = app.add_subcommand("run", "Run the experiment named in a config file");
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--workers", workers, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");

  auto* validate = app.add_subcommand("validate", "Load and check a config file");
  validate->add_option("--config", config_path, "JSON config")->required();

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }
  if (validate->parsed()) {
    std::printf("%s: ok (experiment %s)\n", config_path.c_str(), config.experiment.c_str());
    return 0;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;

  try {
    const WorkerPool pool(workers);
    const ExperimentOutput out = run_experiment(config, pool);
    write_outputs(config.output_dir, config, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical error [%s/%s]: %s\n", std::string(module_of(e.code())).c_str(),
                 std::string(to_string(e.code())).c_str(), e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("%s: wrote %s\n", config.experiment.c_str(), config.output_dir.c_str());
  return 0;
}
