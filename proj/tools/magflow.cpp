// magflow: numerical Anosov certification of magnetic flows on surfaces.
//
//   magflow run   --config cfg.json [--out DIR] [--workers N] [-v]
//   magflow sweep --config cfg.json [--out DIR] [--workers N] [-v]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "magflow/config.hpp"
#include "magflow/errors.hpp"
#include "magflow/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  int workers = 0;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "JSON run configuration")->required();
  cmd->add_option("-o,--out", f.out, "output directory (overrides output.directory)");
  cmd->add_option("-w,--workers", f.workers, "worker threads (overrides workers)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", f.verbosity, "print per-orbit results");
}

magflow::RunConfig configure(const Flags& f) {
  magflow::RunConfig cfg = magflow::load_config(f.config);
  if (!f.out.empty()) cfg.output_directory = f.out;
  if (f.workers > 0) cfg.classify.workers = f.workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical Anosov certification for magnetic flows on surfaces"};
  app.require_subcommand(1);
  Flags run_flags, sweep_flags;
  auto* run_cmd = app.add_subcommand("run", "classify the configured model");
  add_common(run_cmd, run_flags);
  auto* sweep_cmd = app.add_subcommand("sweep", "classify along the configured parameter grid");
  add_common(sweep_cmd, sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return magflow::run(configure(run_flags), std::cout, run_flags.verbosity);
    const magflow::RunConfig cfg = configure(sweep_flags);
    if (!cfg.sweep) throw magflow::ConfigError("sweep", "the sweep command needs a sweep section");
    return magflow::sweep(cfg, std::cout, sweep_flags.verbosity);
  } catch (const magflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
