#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "occmeas/config.hpp"
#include "occmeas/hybrid.hpp"
#include "occmeas/system.hpp"

namespace occmeas {

/// A canonical experiment instance: the fast system plus, when the instance
/// has a slow layer, a hybrid-spec factory parameterized by epsilon.
struct Instance {
  std::string id;
  SystemSpec system;
  std::function<HybridSpec(double eps, const GridSpec& grid)> make_hybrid;  // empty when no slow layer
  std::vector<std::pair<std::size_t, std::size_t>> y0_pairs;
  std::size_t default_y0 = 0;
  std::optional<double> linear_contraction;  // ||A|| when the fast map is linear
};

/// linear-benchmark: y+ = 0.5 y + 0.25 u + 0.25 s on a uniform [0,1] grid,
///   u, s in {0,1}, equiprobable atoms; slow layer zdot = -z + y*u with
///   G(z) = (z - 0.4)^2 from z0 = 0.9.
/// two-state-mdp: the 2x2x2 hand instance whose four deterministic policies
///   give the four vertices of W.
/// disconnected-chain: two absorbing states, no control connectivity.
/// custom: explicit grids and step table from the [custom] config section.
Instance make_instance(const ExperimentConfig& cfg);

}  // namespace occmeas
