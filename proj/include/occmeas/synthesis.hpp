#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occmeas/inclusion.hpp"

namespace occmeas {

struct SynthesisConfig {
  std::size_t burn_in = 0;            // block steps discarded from the realized average
  double realization_tol = 1e-7;      // measure-for-velocity slack tolerance
  std::size_t filler_u = 0;           // control played outside the targeting blocks
  std::size_t nu_g_replicates = 32;   // replicates behind the per-window nu_g estimate
};

/// Velocity the tracked solution prescribes on window t: the exact window
/// average of the piecewise-linear derivative, projected onto V_g(zbar(tau_t)).
std::vector<double> target_velocity(const InclusionSolution& zbar, std::size_t t,
                                    const VelocityOracle& oracle);

struct MeasureForVelocity {
  OccMeasure gamma;
  double slack;  // l1 mismatch between the measure's velocity and the target
};

/// A measure in W whose g-average equals v, found by an l1-slack LP over the
/// W polytope. Slack above the tolerance means v is not in V_g(z).
MeasureForVelocity measure_for_velocity(const VelocityOracle& oracle, std::span<const double> z,
                                        std::span<const double> v, double tol = 1e-7);

/// Randomized Markov table realizing gamma's conditional control law.
PolicyTable policy_from_measure(const OccMeasure& gamma, const GridSpec& grid,
                                std::size_t filler_u);

struct WindowProvenance {
  std::size_t window;
  std::vector<double> target_v;     // v_t
  double measure_slack;             // velocity certificate of gamma_t
  std::uint64_t gamma_digest;       // FNV-1a over the rounded weights
  double nu_g_estimate;             // realized E || v_t - block g-average ||
  double nu_g_stderr;
};

struct SynthesizedPlan {
  ControlPlan plan;                        // block tables + filler, length floor(1/eps)+1
  std::vector<WindowProvenance> windows;
  double epsilon = 0.0;
  std::size_t K = 0;

  std::string provenance_csv() const;  // sidecar: per-window targets and realization
};

/// The block construction: per window, target velocity -> realizing measure
/// at zbar(tau_t) -> conditional policy for the first K(eps) steps, filler
/// elsewhere and over the tail. The realized nu_g column is estimated by
/// replicated simulation of the assembled plan.
SynthesizedPlan assemble_plan(const InclusionSolution& zbar, const VelocityOracle& oracle,
                              const SystemSpec& sysspec, const TimeGrid& grid,
                              const SynthesisConfig& config, std::size_t y0,
                              std::uint64_t seed);

struct TrackingReport {
  double max_error = 0.0;       // max over mesh of E || z_eps(s) - zbar(s) ||
  double stderr_at_max = 0.0;
  std::vector<double> mesh;
  std::vector<double> mean_error;  // per mesh point
};

TrackingReport verify_tracking(const HybridSpec& hspec, const SystemSpec& sysspec,
                               const ControlPlan& plan, const InclusionSolution& zbar,
                               std::size_t y0, std::size_t replicates, std::uint64_t seed);

struct GapReport {
  double expected_cost = 0.0;  // E[G(z(1))] of the synthesized plan
  double cost_stderr = 0.0;
  double f0 = 0.0;
  double gap = 0.0;            // expected_cost - f0
};

GapReport optimality_gap(const HybridSpec& hspec, const SystemSpec& sysspec,
                         const ControlPlan& plan, double f0, std::size_t y0,
                         std::size_t replicates, std::uint64_t seed);

}  // namespace occmeas
