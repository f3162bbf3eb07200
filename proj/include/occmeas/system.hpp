#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "occmeas/grid.hpp"
#include "occmeas/measure.hpp"

namespace occmeas {

/// The controlled dynamics y(t+1) = f(y(t), u(t), s(t)) snapped to the y grid.
/// The full transition table is precomputed at construction, which makes the
/// step map exact, forward invariance automatic and the expectation kernel an
/// exact finite sum over noise atoms.
class SystemSpec {
 public:
  using Dynamics = std::function<Point(const Point& y, const Point& u, const Point& s)>;

  SystemSpec(GridSpec grid, Dynamics f);

  /// Directly from a transition table next[(iy,iu,is)] -> iy'.
  SystemSpec(GridSpec grid, std::vector<std::size_t> step_table);

  const GridSpec& grid() const { return grid_; }

  std::size_t step(std::size_t iy, std::size_t iu, std::size_t is) const;

 private:
  GridSpec grid_;
  std::vector<std::size_t> table_;  // n_y * n_u * n_s
};

/// Row-stochastic policy table: prob(u | y). Deterministic rows are one-hot.
struct PolicyTable {
  std::vector<std::vector<double>> probs;  // n_y rows, n_u columns

  static PolicyTable deterministic(const std::vector<std::size_t>& u_of_y, std::size_t n_u);

  /// Conditional law u | y of a cell measure: gamma(y,u) / sum_u gamma(y,u).
  /// Rows with zero marginal play the filler control deterministically.
  static PolicyTable from_conditional(const OccMeasure& gamma, std::size_t n_y, std::size_t n_u,
                                      std::size_t filler_u);

  bool is_deterministic() const;
  std::size_t arg_u(std::size_t y) const;  // deterministic rows only
};

enum class PlanKind { open_loop, markov, history };

/// A control plan in one of three tabular forms. Decisions at time t depend
/// only on information available before the draw of s(t): the open-loop list,
/// the current state (itself a function of past noise), or a truncated window
/// of past noise atom indices.
class ControlPlan {
 public:
  static ControlPlan open_loop(std::vector<std::size_t> u_sequence);

  /// Stationary Markov plan: a single table used for every t.
  static ControlPlan markov_stationary(PolicyTable table, std::size_t horizon);

  /// Time-varying Markov plan: table_of_t[t] indexes into tables.
  static ControlPlan markov_schedule(std::vector<PolicyTable> tables,
                                     std::vector<std::size_t> table_of_t);

  /// History-lookup plan: u(t) = entry(t, last `window` noise atom indices).
  /// Entries are dense per t over all |S|^min(t, window) histories.
  static ControlPlan history(std::size_t window, std::size_t n_atoms,
                             std::vector<std::vector<std::size_t>> entries);

  PlanKind kind() const { return kind_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t window() const { return window_; }
  bool randomized() const;

  /// Decision at time t. `y` is the current state cell, `history` the atom
  /// indices s(0..t-1), `policy_draw` a uniform used only by randomized rows.
  std::size_t decide(std::size_t t, std::size_t y,
                     const std::vector<std::size_t>& history, double policy_draw) const;

  const std::vector<std::size_t>& open_loop_sequence() const { return open_loop_; }
  const std::vector<PolicyTable>& tables() const { return tables_; }
  const std::vector<std::size_t>& table_of_t() const { return table_of_t_; }

  std::string serialize() const;
  static ControlPlan deserialize(const std::string& text);

 private:
  PlanKind kind_ = PlanKind::open_loop;
  std::size_t horizon_ = 0;
  std::vector<std::size_t> open_loop_;
  std::vector<PolicyTable> tables_;
  std::vector<std::size_t> table_of_t_;
  std::size_t window_ = 0;
  std::size_t n_atoms_ = 0;
  std::vector<std::vector<std::size_t>> history_entries_;
};

struct Trajectory {
  std::vector<std::size_t> y_path;  // length T+1
  std::vector<std::size_t> u_path;  // length T
  std::vector<std::size_t> s_path;  // length T
  std::uint64_t seed = 0;

  std::size_t horizon() const { return u_path.size(); }
  std::string to_csv() const;
};

/// One trajectory under the seeded noise stream (seed, replicate). Replaying
/// with the same arguments is bit-identical.
Trajectory simulate(const SystemSpec& spec, const ControlPlan& plan, std::size_t y0,
                    std::size_t T, std::uint64_t seed, std::uint64_t replicate = 0);

/// Same dynamics with an explicit noise-atom sequence (oracle and replay path).
Trajectory simulate_with_noise(const SystemSpec& spec, const ControlPlan& plan, std::size_t y0,
                               const std::vector<std::size_t>& s_path,
                               std::uint64_t seed = 0, std::uint64_t replicate = 0);

/// Checks y(t+1) = step(y(t), u(t), s(t)) along the whole path.
bool replay_consistent(const SystemSpec& spec, const Trajectory& traj);

OccMeasure random_occupation(const Trajectory& traj, const GridSpec& grid);

struct ExpectedOccupation {
  OccMeasure measure;
  std::vector<double> stderr_;  // per cell
};

ExpectedOccupation expected_occupation(const SystemSpec& spec, const ControlPlan& plan,
                                       std::size_t y0, std::size_t T, std::size_t replicates,
                                       std::uint64_t seed);

/// Exact expectation by enumerating all |S|^T noise sequences. Deterministic
/// plans only; guarded at |S|^T <= 1e6.
OccMeasure exact_expected_occupation(const SystemSpec& spec, const ControlPlan& plan,
                                     std::size_t y0, std::size_t T);

struct VarianceCheck {
  double mean;
  double variance;
  double bound;         // 2 max|phi|^2 / T
  double mean_stderr;
  double variance_stderr;
};

/// Estimates mean and variance of (1/T) sum_t [phi(y(t+1)) - psi(y(t),u(t))]
/// with psi(y,u) = E_s phi(step(y,u,s)) computed exactly from the atoms.
VarianceCheck telescoping_variance_check(const SystemSpec& spec, const ControlPlan& plan,
                                         std::size_t y0, std::size_t T,
                                         const std::function<double(const Point&)>& phi,
                                         std::size_t replicates, std::uint64_t seed);

}  // namespace occmeas
