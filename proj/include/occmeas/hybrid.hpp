#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "occmeas/system.hpp"

namespace occmeas {

/// Slow continuous dynamics driven by the fast chain: zdot = g(z, y, u) on
/// [0, 1] with terminal cost G(z(1)). The declared Lipschitz and bound
/// constants are validated by seeded sampling over z_box x grid at
/// construction; violations reject the spec.
class HybridSpec {
 public:
  using SlowField =
      std::function<std::vector<double>(std::span<const double> z, const Point& y, const Point& u)>;
  using TerminalCost = std::function<double(std::span<const double> z)>;

  HybridSpec(SlowField g, TerminalCost G, std::vector<double> z0, double epsilon,
             double lipschitz_C, double bound_M, double lipschitz_CG,
             std::vector<std::pair<double, double>> z_box, const GridSpec& grid);

  const SlowField& g() const { return g_; }
  const TerminalCost& G() const { return G_; }
  const std::vector<double>& z0() const { return z0_; }
  double epsilon() const { return epsilon_; }
  double lipschitz_C() const { return C_; }
  double bound_M() const { return M_; }
  double lipschitz_CG() const { return CG_; }
  const std::vector<std::pair<double, double>>& z_box() const { return box_; }
  std::size_t dim() const { return z0_.size(); }

  bool in_box(std::span<const double> z) const;

  HybridSpec with_epsilon(double eps, const GridSpec& grid) const;

 private:
  SlowField g_;
  TerminalCost G_;
  std::vector<double> z0_;
  double epsilon_;
  double C_, M_, CG_;
  std::vector<std::pair<double, double>> box_;
};

enum class DeltaScheduleKind { sqrt_eps, power, custom };

struct DeltaSchedule {
  DeltaScheduleKind kind = DeltaScheduleKind::sqrt_eps;
  double alpha = 0.5;         // power schedule: Delta = eps^alpha
  double custom_delta = 0.0;  // custom: explicit Delta value

  double delta(double epsilon) const;
};

/// The averaging windows tau_t = t Delta(eps) with the per-window fast-step
/// counts K_t = floor(tau_{t+1}/eps) - floor(tau_t/eps) and K = min_t K_t.
struct TimeGrid {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t N = 0;               // floor(1/Delta)
  std::vector<double> tau;         // tau_0..tau_N
  std::vector<std::size_t> Kt;     // t = 0..N-1
  std::size_t K = 0;

  std::size_t fast_start(std::size_t t) const;  // floor(tau_t / eps)
};

TimeGrid make_time_grid(double epsilon, const DeltaSchedule& schedule);

struct HybridTrajectory {
  std::vector<double> mesh;              // sample times, fast boundaries + 1.0
  std::vector<std::vector<double>> z;    // one state per mesh time
  Trajectory fast;
  std::uint64_t seed = 0;
  double terminal_cost = 0.0;

  std::string to_csv(const GridSpec& grid) const;  // s,z_1..z_n,y_index,u_index
};

/// Simulates the fast chain for t = 0..floor(1/eps) and integrates the slow
/// state exactly per fast interval with a fixed-step classical 4-stage
/// Runge-Kutta method (substeps per interval >= 4). Leaving z_box raises
/// ModelViolation with a trajectory dump.
HybridTrajectory simulate_hybrid(const HybridSpec& hspec, const SystemSpec& sysspec,
                                 const ControlPlan& plan, std::size_t y0, std::uint64_t seed,
                                 std::uint64_t replicate = 0, std::size_t substeps = 4);

struct FEpsEstimate {
  std::vector<double> values;   // per plan E[G(z(1))]
  std::vector<double> stderrs;  // per plan
  std::size_t best_index = 0;
  double best_value = 0.0;      // empirical upper bound of F^eps
};

/// Monte Carlo value of each plan under common random numbers; the minimum is
/// an empirical upper bound of F^eps over the supplied family (the true inf
/// is over all plans and is not computable).
FEpsEstimate estimate_F_eps(const HybridSpec& hspec, const SystemSpec& sysspec,
                            const std::vector<ControlPlan>& plans, std::size_t y0,
                            std::size_t replicates, std::uint64_t seed);

}  // namespace occmeas
