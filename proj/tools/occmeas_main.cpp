#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "occmeas/commands.hpp"
#include "occmeas/config.hpp"
#include "occmeas/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"occmeas: stationary-measure sets, occupational-measure convergence and "
               "two-timescale averaging experiments"};
  app.require_subcommand(1);

  std::string config_path;
  long long seed_override = -1;
  std::string out_override;
  int threads = -1;

  for (const std::string verb : {"compute-w", "loms", "happrox", "averaging", "sweep"}) {
    auto* sub = app.add_subcommand(verb);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed_override, "override [experiment] seed");
    sub->add_option("--out", out_override, "override output directory");
    sub->add_option("--threads", threads, "worker threads (0 = hardware default)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();

  occmeas::ExperimentConfig cfg;
  try {
    cfg = occmeas::ExperimentConfig::load(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (threads >= 0) cfg.threads = threads;

  std::string message;
  const int code = occmeas::run_command(verb, cfg, cfg.out_dir, &message);
  if (code != 0) std::cerr << "error (exit " << code << "): " << message << "\n";
  return code;
}
