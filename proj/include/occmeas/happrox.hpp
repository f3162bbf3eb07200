#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occmeas/metric.hpp"
#include "occmeas/polytope.hpp"
#include "occmeas/system.hpp"

namespace occmeas {

/// Vector test function h = (h_1..h_j) on the cell grid, with the exhaustive
/// norm bound c_h = max over cells of ||h(cell)||.
struct TestVector {
  std::vector<std::vector<double>> components;  // j rows over cells
  double c_h = 0.0;
  double lipschitz_y = 0.0;  // sqrt(sum_j l_j^2) with per-component y-Lipschitz bounds

  std::size_t dim() const { return components.size(); }

  static TestVector from_rows(std::vector<std::vector<double>> rows, const GridSpec& grid);

  /// First j basis functions, optionally scaled by 2^-k so that the Euclidean
  /// geometry of the image matches the moment embedding of rho.
  static TestVector from_basis_prefix(const MetricBasis& basis, std::size_t j, bool weighted);

  /// h evaluated at one cell.
  std::vector<double> at(std::size_t cell) const;
};

enum class ValueSetProvenance { finite_horizon_dp, polytope_image, monte_carlo };

struct ValueSet {
  std::vector<std::vector<double>> points;
  ValueSetProvenance provenance = ValueSetProvenance::finite_horizon_dp;
};

/// Support of V_h(T, y0) in direction p by exact backward dynamic programming:
/// V_t(y) = max_u [ p.h(y,u) + E_s V_{t+1}(step(y,u,s)) ], returned as V_0(y0)/T.
/// Markov decisions suffice for this additive criterion; test code checks that
/// against full history-plan enumeration on tiny instances.
double psi_h_dp(const SystemSpec& spec, const TestVector& h, std::span<const double> p,
                std::size_t T, std::size_t y0);

struct DpPlanValue {
  double psi;                                   // support value, already /T
  std::vector<std::vector<std::size_t>> policy;  // argmax table: policy[t][y]
  std::vector<double> achieved;                 // exact E[(1/T) sum h] of the argmax plan
};

DpPlanValue psi_h_dp_with_plan(const SystemSpec& spec, const TestVector& h,
                               std::span<const double> p, std::size_t T, std::size_t y0);

/// Point cloud of exact expected h-averages of the per-direction optimal
/// plans; its hull approximates co V_h(T, y0) from inside.
ValueSet value_set_VhT(const SystemSpec& spec, const TestVector& h, std::size_t T,
                       std::size_t y0, const std::vector<std::vector<double>>& directions);

/// Empirical weak nu_h(T): the largest direction-sampled Hausdorff gap
/// between the value clouds of the supplied initial-condition pairs.
double weak_nu_estimate(const SystemSpec& spec, const TestVector& h, std::size_t T,
                        const std::vector<std::pair<std::size_t, std::size_t>>& y0_pairs,
                        const std::vector<std::vector<double>>& directions);

struct StrongNuOptions {
  std::size_t family_size = 200;     // sampled noise-history plans per pair
  std::size_t search_candidates = 0; // 0: evaluate pi'' = pi' only (pathwise coupling)
  std::size_t history_window = 2;
};

struct StrongNuResult {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Empirical strong nu_h(T) over a seeded family of noise-history plans
/// (open-loop and truncated-window tables), simulated from both initial
/// conditions under common random numbers. With search_candidates = 0 the
/// matching plan is pi' itself, which is the coupling used for linear
/// systems; otherwise the estimate is the max over pi' of the min over the
/// candidate subset, an empirical lower bound of the sup-inf.
StrongNuResult strong_nu_estimate(const SystemSpec& spec, const TestVector& h, std::size_t T,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& y0_pairs,
                                  std::size_t replicates, std::uint64_t seed,
                                  const StrongNuOptions& options = {});

/// Seeded mixed plan family (stationary Markov tables, open-loop sequences,
/// randomized tables) used by the convergence reports.
std::vector<ControlPlan> sample_plan_family(const GridSpec& grid, std::size_t count,
                                            std::size_t horizon, std::uint64_t seed);

struct ConvergenceRow {
  std::size_t T;
  std::string metric;
  double estimate;
  double stderr_;
};

struct ConvergenceReport {
  std::vector<std::size_t> horizons;
  std::vector<ConvergenceRow> rows;
  std::map<std::string, double> slopes;  // fitted log-log decay per metric
  std::uint64_t seed = 0;

  double value(std::size_t T, const std::string& metric) const;
  double stderr_of(std::size_t T, const std::string& metric) const;
  std::string to_csv() const;     // T,metric,estimate,stderr
  std::string summary() const;    // slopes and bound columns
};

struct LomsOptions {
  std::size_t n_plans = 50;
  std::size_t replicates = 16;
  std::size_t directions = 128;
  std::size_t w_vertex_sample = 12;
  /// Analytic Example-3 style bound column nu(T) = L_h * diam / (T (1 - a)),
  /// emitted when the contraction factor is set.
  std::optional<double> linear_contraction;
};

inline constexpr const char* kMetricDhGammaW = "dH_embedded_GammaT_vs_W";
inline constexpr const char* kMetricSupErhoChiW = "sup_plans_E_rho_chi_W";
inline constexpr const char* kMetricSupRhoEWBT = "sup_W_rhoE_to_BT";

/// The three convergence diagnostics of the occupational-measure theory on
/// one instance: (a) Hausdorff gap between the moment-embedded value cloud of
/// Gamma_T(y0) and the embedded W (exact DP vs LP supports); (b) sup over
/// sampled plans of E[rho(chi, W)] with the exact l1-projection inside the
/// expectation; (c) sup over sampled W vertices of the expected-rho distance
/// to the sampled random occupation ensemble.
ConvergenceReport loms_report(const SystemSpec& spec, const MetricBasis& basis,
                              const MeasurePolytope& poly, std::size_t y0,
                              const std::vector<std::size_t>& horizons, std::uint64_t seed,
                              const LomsOptions& options = {});

}  // namespace occmeas
