#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace occmeas {

/// Parsed experiment configuration. One structured text file carries the full
/// provenance of a run; unknown sections or keys are rejected so that stale
/// configs fail loudly instead of silently using defaults.
struct ExperimentConfig {
  // [experiment]
  std::string instance = "linear-benchmark";
  std::uint64_t seed = 1;
  std::string out_dir = "results";
  int threads = 0;

  // [grid]
  std::size_t n_y = 21;

  // [basis]
  std::size_t basis_J = 16;
  std::uint64_t basis_seed = 1;

  // [loms]
  std::vector<std::size_t> loms_horizons = {50, 200, 800};
  std::size_t loms_plans = 50;
  std::size_t loms_replicates = 16;
  std::size_t loms_directions = 128;
  std::size_t loms_w_vertices = 12;

  // [happrox]
  std::size_t happrox_j = 3;
  std::vector<std::size_t> happrox_T = {20, 80, 320};
  std::size_t happrox_replicates = 200;
  std::size_t happrox_family = 64;
  std::size_t happrox_directions = 32;

  // [hybrid]
  std::vector<double> epsilon_list = {0.04, 0.01, 0.0025};
  std::string schedule = "sqrt";  // sqrt | power | custom
  double schedule_alpha = 0.5;
  double schedule_delta = 0.0;
  std::size_t substeps = 4;
  std::size_t hybrid_replicates = 48;

  // [f0]
  std::size_t f0_lattice = 401;
  std::size_t f0_refine = 801;
  std::size_t f0_directions = 32;

  // [synthesis]
  std::size_t burn_in = 0;
  std::size_t filler_u = 0;
  std::size_t nu_g_replicates = 32;

  // [custom] (only read when instance = custom)
  std::string custom_y_points;
  std::string custom_u_points;
  std::string custom_s_values;
  std::string custom_s_probs;
  std::string custom_step_table;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical text form; hash input and provenance header.
  std::string canonical() const;
  std::uint64_t hash() const;
};

std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace occmeas
