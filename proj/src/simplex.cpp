#include "occmeas/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace occmeas {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr double kRatioTieTol = 1e-9;
constexpr int kStallLimit = 40;

struct Tableau {
  std::vector<std::vector<double>> t;  // m rows over ncols columns
  std::vector<double> rhs;
  std::vector<std::size_t> basis;
  std::size_t ncols = 0;

  void pivot(std::size_t row, std::size_t col) {
    const double p = t[row][col];
    const double inv = 1.0 / p;
    for (double& v : t[row]) v *= inv;
    rhs[row] *= inv;
    t[row][col] = 1.0;  // cut round-off on the pivot itself
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == row) continue;
      const double factor = t[i][col];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < ncols; ++j) t[i][j] -= factor * t[row][j];
      t[i][col] = 0.0;
      rhs[i] -= factor * rhs[row];
    }
    basis[row] = col;
    for (double& b : rhs) {
      if (b < 0.0 && b > -1e-9) b = 0.0;
    }
  }
};

/// Optimizes in place for the given column costs. `enterable[j]` gates which
/// columns may enter the basis (used to lock out artificials in phase 2).
LpStatus run_simplex(Tableau& tab, const std::vector<double>& cost,
                     const std::vector<char>& enterable, double& objective) {
  const std::size_t m = tab.t.size();
  const std::size_t n = tab.ncols;
  const long max_iter = 100 * static_cast<long>(m + n) + 1000;
  bool bland = false;
  int stall = 0;
  double prev_obj = -std::numeric_limits<double>::infinity();

  for (long iter = 0; iter < max_iter; ++iter) {
    // reduced costs r_j = c_j - c_B^T B^{-1} A_j, recomputed for stability
    std::vector<double> dual(m);
    for (std::size_t i = 0; i < m; ++i) dual[i] = cost[tab.basis[i]];

    std::size_t enter = n;
    double best = kReducedCostTol;
    for (std::size_t j = 0; j < n; ++j) {
      if (!enterable[j]) continue;
      double r = cost[j];
      for (std::size_t i = 0; i < m; ++i) {
        if (dual[i] != 0.0) r -= dual[i] * tab.t[i][j];
      }
      if (r > kReducedCostTol) {
        if (bland) {
          enter = j;
          break;
        }
        if (r > best) {
          best = r;
          enter = j;
        }
      }
    }
    if (enter == n) {
      objective = 0.0;
      for (std::size_t i = 0; i < m; ++i) objective += cost[tab.basis[i]] * tab.rhs[i];
      return LpStatus::optimal;
    }

    // ratio test: exact minimum first, then lowest basic variable index among
    // the tied rows (Bland-compatible, so degenerate cycles terminate)
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double a = tab.t[i][enter];
      if (a <= kPivotTol) continue;
      min_ratio = std::min(min_ratio, std::max(0.0, tab.rhs[i]) / a);
    }
    if (min_ratio == std::numeric_limits<double>::infinity()) return LpStatus::unbounded;
    const double tie_window = bland ? 0.0 : kRatioTieTol * (1.0 + std::abs(min_ratio));
    std::size_t leave = m;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = tab.t[i][enter];
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, tab.rhs[i]) / a;
      if (ratio <= min_ratio + tie_window) {
        if (leave == m || tab.basis[i] < tab.basis[leave]) leave = i;
      }
    }

    tab.pivot(leave, enter);

    double obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) obj += cost[tab.basis[i]] * tab.rhs[i];
    if (obj <= prev_obj + 1e-12) {
      if (++stall >= kStallLimit) bland = true;
    } else {
      stall = 0;
    }
    prev_obj = obj;
  }
  return LpStatus::iteration_limit;
}

}  // namespace

LpSolution simplex_solve(const LpProblem& problem) {
  const std::size_t m = problem.rows();
  const std::size_t n = problem.cols();
  if (problem.b.size() != m || problem.c.size() != n)
    throw std::invalid_argument("simplex_solve: dimension mismatch");

  Tableau tab;
  tab.ncols = n + m;  // structurals then one artificial per row
  tab.t.assign(m, std::vector<double>(tab.ncols, 0.0));
  tab.rhs.resize(m);
  tab.basis.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = problem.b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.t[i][j] = sign * problem.A[i][j];
    tab.rhs[i] = sign * problem.b[i];
    tab.t[i][n + i] = 1.0;
    tab.basis[i] = n + i;
  }

  // Phase 1: drive out the artificials.
  std::vector<double> phase1_cost(tab.ncols, 0.0);
  for (std::size_t j = n; j < tab.ncols; ++j) phase1_cost[j] = -1.0;
  std::vector<char> enterable(tab.ncols, 1);
  double obj1 = 0.0;
  LpStatus st = run_simplex(tab, phase1_cost, enterable, obj1);
  if (st != LpStatus::optimal) return LpSolution{st, 0.0, {}, {}};
  if (obj1 < -1e-7) return LpSolution{LpStatus::infeasible, 0.0, {}, {}};

  // Remove basic artificials: pivot to a structural column when possible,
  // otherwise the row is redundant and gets dropped.
  for (std::size_t i = tab.t.size(); i-- > 0;) {
    if (tab.basis[i] < n) continue;
    std::size_t col = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(tab.t[i][j]) > 1e-8) {
        col = j;
        break;
      }
    }
    if (col < n) {
      tab.pivot(i, col);
    } else {
      tab.t.erase(tab.t.begin() + static_cast<std::ptrdiff_t>(i));
      tab.rhs.erase(tab.rhs.begin() + static_cast<std::ptrdiff_t>(i));
      tab.basis.erase(tab.basis.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }

  // Phase 2 over the original objective; artificials may not re-enter.
  std::vector<double> cost(tab.ncols, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = problem.c[j];
  for (std::size_t j = n; j < tab.ncols; ++j) enterable[j] = 0;
  double obj2 = 0.0;
  st = run_simplex(tab, cost, enterable, obj2);
  if (st != LpStatus::optimal) return LpSolution{st, 0.0, {}, {}};

  LpSolution sol;
  sol.status = LpStatus::optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < tab.t.size(); ++i) {
    if (tab.basis[i] < n) sol.x[tab.basis[i]] = std::max(0.0, tab.rhs[i]);
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += problem.c[j] * sol.x[j];
  sol.basis = tab.basis;
  return sol;
}

std::string lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

}  // namespace occmeas
