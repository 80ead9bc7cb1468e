// heom2d_main.cpp - command line entry: parse flags, load the run configuration,
// apply overrides, and dispatch to the matching runner operation.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "heom2d/config.hpp"
#include "heom2d/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rephasing 2D electronic spectra of coupled chromophores via HEOM"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, method;
  int workers = 0;
  unsigned long long seed = 0;
  auto* opt_config = app.add_option("--config", config_path, "run configuration file");
  auto* opt_out = app.add_option(
      "--out", out_dir, "output directory (for plotdata: the finished run directory)");
  auto* opt_workers =
      app.add_option("--workers", workers, "worker threads, 0 = hardware concurrency")
          ->check(CLI::NonNegativeNumber);
  auto* opt_seed = app.add_option("--seed", seed, "RNG seed for disorder sampling");
  auto* opt_method =
      app.add_option("--method", method, "signal computation method")
          ->check(CLI::IsMember({"perturbative", "phasecycle", "both"}));

  auto* cmd_propagate =
      app.add_subcommand("propagate", "free or pre-equilibrated trajectory from t = 0");
  auto* cmd_spectra =
      app.add_subcommand("spectra2d", "kernels, convolution, 2D spectra, peak metrics");
  auto* cmd_sweep =
      app.add_subcommand("sweep", "spectra2d repeated over the configured detuning list");
  auto* cmd_plot =
      app.add_subcommand("plotdata", "re-render plots from a finished run directory");
  auto* cmd_validate =
      app.add_subcommand("validate-config", "parse, validate, and print the configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? heom2d::run::kOk : heom2d::run::kConfigError;
  }

  if (cmd_plot->parsed()) {
    if (opt_out->count() == 0) {
      std::fprintf(stderr, "error: plotdata requires --out RUN_DIR\n");
      return heom2d::run::kConfigError;
    }
    return heom2d::run::plotdata(out_dir);
  }

  if (opt_config->count() == 0) {
    std::fprintf(stderr, "error: --config PATH is required\n");
    return heom2d::run::kConfigError;
  }
  heom2d::config::RunConfig c;
  try {
    c = heom2d::config::load_file(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return heom2d::run::kConfigError;
  }
  if (opt_out->count() > 0) c.output.directory = out_dir;
  if (opt_workers->count() > 0) c.workers = workers;
  if (opt_seed->count() > 0) c.spectra.seed = seed;
  if (opt_method->count() > 0) c.response.method = method;

  if (cmd_propagate->parsed()) return heom2d::run::propagate(c);
  if (cmd_spectra->parsed()) return heom2d::run::spectra2d(c);
  if (cmd_sweep->parsed()) return heom2d::run::sweep(c);
  if (cmd_validate->parsed()) return heom2d::run::validate_config(c);
  std::fprintf(stderr, "error: no subcommand selected\n");
  return heom2d::run::kConfigError;
}
