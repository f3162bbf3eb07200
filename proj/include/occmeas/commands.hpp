#pragma once

#include <filesystem>
#include <string>

#include "occmeas/config.hpp"

namespace occmeas {

/// The five experiment verbs. Each writes its CSV/text artifacts plus a
/// records.csv into `out` and throws on failure; run_command maps exceptions
/// to the exit-code contract (0 ok, 2 config, 3 statistical guard, 4 model
/// violation, 5 numerical failure).
void cmd_compute_w(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_loms(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_happrox(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_averaging(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out);

int run_command(const std::string& verb, const ExperimentConfig& cfg,
                const std::filesystem::path& out, std::string* error_message = nullptr);

}  // namespace occmeas
