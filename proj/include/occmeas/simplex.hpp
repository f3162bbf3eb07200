#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace occmeas {

/// max c^T x  subject to  A x = b, x >= 0.
struct LpProblem {
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<double> c;

  std::size_t rows() const { return A.size(); }
  std::size_t cols() const { return A.empty() ? 0 : A[0].size(); }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<std::size_t> basis;  // basic variable per remaining row
};

/// Dense two-phase tableau simplex. Pivoting is deterministic: largest
/// reduced cost with lowest-index ties, falling back to Bland's rule as soon
/// as the objective stalls, so degenerate problems terminate and identical
/// inputs always reproduce the same optimal basis.
LpSolution simplex_solve(const LpProblem& problem);

std::string lp_status_name(LpStatus s);

}  // namespace occmeas
