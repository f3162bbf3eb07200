#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "occmeas/hybrid.hpp"
#include "occmeas/polytope.hpp"

namespace occmeas {

/// Support-function access to the averaged velocity sets
/// V_g(z) = { integral of g(z,.) dgamma : gamma in W }, backed by the W
/// polytope's LP oracle. Values are cached per quantized (z, p) pair; the
/// cache is guarded and entries are deterministic, so concurrent sweeps stay
/// reproducible.
class VelocityOracle {
 public:
  VelocityOracle(MeasurePolytope poly, HybridSpec::SlowField g, const GridSpec& grid,
                 std::vector<std::pair<double, double>> z_box, double lipschitz_C,
                 double bound_M);

  struct Support {
    double value;
    std::vector<double> velocity;   // integral of g against the maximizer
    std::vector<double> weights;    // the maximizing measure's cell weights
  };

  Support support_Vg(std::span<const double> z, std::span<const double> p) const;

  /// g integrated against explicit cell weights at the point z.
  std::vector<double> velocity_of(std::span<const double> z,
                                  std::span<const double> weights) const;

  const MeasurePolytope& polytope() const { return poly_; }
  const GridSpec& grid() const { return *grid_; }
  const std::vector<std::pair<double, double>>& z_box() const { return box_; }
  double lipschitz_C() const { return C_; }
  double bound_M() const { return M_; }
  std::size_t dim() const { return box_.size(); }

  /// Row h_i(cell) = g_i(z, cell), the image map used by measure LPs.
  std::vector<std::vector<double>> g_rows(std::span<const double> z) const;

 private:
  MeasurePolytope poly_;
  HybridSpec::SlowField g_;
  const GridSpec* grid_;
  std::vector<std::pair<double, double>> box_;
  double C_, M_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<long long>, Support> cache_;
};

struct ProjectionResult {
  std::vector<double> velocity;  // projection of v onto V_g(z)
  double gap;                    // certified Frank-Wolfe gap at termination
  std::vector<double> weights;   // mixing measure realizing the projection
};

/// Projection onto V_g(z) by a fully corrective conditional-gradient scheme
/// (min-norm-point over the atoms discovered through support_Vg). Stops when
/// the Frank-Wolfe gap falls below `gap_tol` or after `max_iter` rounds; a
/// terminal gap above 1e-4 raises NumericalFailure.
ProjectionResult project_onto_Vg(const VelocityOracle& oracle, std::span<const double> v,
                                 std::span<const double> z, double gap_tol = 1e-9,
                                 std::size_t max_iter = 500);

struct InclusionStep {
  double tau;
  std::vector<double> zeta;      // state at tau
  std::vector<double> velocity;  // selected velocity used on [tau, tau_next]
  double gap;                    // projection certificate for the velocity
  std::vector<double> gamma;     // selecting measure (cell weights)
};

/// Piecewise-linear Euler solution of zdot in V_g(z): zeta_{t+1} =
/// zeta_t + Delta v_t with every v_t certified in V_g(zeta_t); the tail
/// [tau_N, 1] continues with a velocity selected at zeta_N.
struct InclusionSolution {
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<InclusionStep> steps;  // t = 0..N (step N covers the tail)
  double terminal_cost = 0.0;        // G(z(1)) when a cost was supplied

  std::size_t windows() const { return steps.empty() ? 0 : steps.size() - 1; }
  std::vector<double> z_at(double s) const;
  std::vector<double> window_average_velocity(std::size_t t) const;
  std::string to_csv() const;  // t,tau,zeta_1..n,v_1..n,gap
};

using VelocitySelector =
    std::function<std::vector<double>(std::size_t t, std::span<const double> zeta)>;

/// Euler stepping with projection of each selected target onto V_g(zeta_t).
/// The per-step defect of the interpolated path against V_g is bounded by
/// C*M*Delta and is recorded through the projection certificates.
InclusionSolution solve_inclusion(const VelocityOracle& oracle, const TimeGrid& grid,
                                  std::span<const double> z0, const VelocitySelector& selector,
                                  const HybridSpec::TerminalCost* terminal = nullptr);

enum class F0Method { grid_dp, extreme_point_search };

struct F0Options {
  F0Method method = F0Method::grid_dp;
  std::size_t lattice = 401;        // points per axis (grid-DP, n <= 2)
  std::size_t directions = 32;      // extreme-velocity fan
  std::size_t refine_lattice = 0;   // when nonzero, re-solve and report the delta
  std::size_t search_starts = 64;   // extreme-point search multi-starts
  std::uint64_t seed = 1;
};

struct F0Result {
  double value = 0.0;
  InclusionSolution solution;
  double refinement_delta = 0.0;  // |F0(lattice) - F0(refine_lattice)|
};

/// min G(z(1)) over Euler solutions of the inclusion: backward value
/// iteration on a z-lattice with multilinear interpolation (n <= 2), or a
/// seeded multi-start over extreme-velocity direction sequences.
F0Result optimize_F0(const VelocityOracle& oracle, const TimeGrid& grid,
                     const HybridSpec::TerminalCost& G, std::span<const double> z0,
                     const F0Options& options = {});

}  // namespace occmeas
