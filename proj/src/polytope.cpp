#include "occmeas/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "occmeas/csv.hpp"
#include "occmeas/rng.hpp"

namespace occmeas {

TransitionKernel::TransitionKernel(const SystemSpec& spec) {
  const GridSpec& grid = spec.grid();
  probs_.assign(grid.n_cells(), std::vector<double>(grid.n_y(), 0.0));
  for (std::size_t iy = 0; iy < grid.n_y(); ++iy)
    for (std::size_t iu = 0; iu < grid.n_u(); ++iu) {
      auto& row = probs_[grid.cell_index(iy, iu)];
      for (std::size_t is = 0; is < grid.n_s(); ++is)
        row[spec.step(iy, iu, is)] += grid.s_prob(is);
    }
  for (const auto& row : probs_) {
    double mass = 0.0;
    for (double p : row) mass += p;
    if (std::abs(mass - 1.0) > 1e-12)
      throw std::logic_error("TransitionKernel: row does not sum to 1");
  }
}

TransitionKernel build_kernel(const SystemSpec& spec) { return TransitionKernel(spec); }

MeasurePolytope::MeasurePolytope(std::vector<std::vector<double>> A, std::vector<double> b,
                                 std::size_t n_y, std::size_t n_u)
    : A_(std::move(A)), b_(std::move(b)), n_y_(n_y), n_u_(n_u) {
  if (A_.empty() || A_.size() != b_.size())
    throw std::invalid_argument("MeasurePolytope: malformed constraint system");
}

MeasurePolytope stationary_polytope(const TransitionKernel& kernel) {
  const std::size_t ny = kernel.n_y();
  const std::size_t cells = kernel.n_cells();
  const std::size_t nu = cells / ny;

  // One balance row per y': sum_{(y,u)} gamma(y,u) P[(y,u)->y'] = sum_u gamma(y',u),
  // then the unit-mass row.
  std::vector<std::vector<double>> A(ny + 1, std::vector<double>(cells, 0.0));
  std::vector<double> b(ny + 1, 0.0);
  for (std::size_t yn = 0; yn < ny; ++yn) {
    for (std::size_t cell = 0; cell < cells; ++cell) A[yn][cell] = kernel.prob(cell, yn);
    for (std::size_t u = 0; u < nu; ++u) A[yn][yn * nu + u] -= 1.0;
  }
  for (std::size_t cell = 0; cell < cells; ++cell) A[ny][cell] = 1.0;
  b[ny] = 1.0;

  MeasurePolytope poly(std::move(A), std::move(b), ny, nu);

  // W is nonempty for every finite kernel; a failure here is a kernel bug.
  LpProblem feas{poly.A(), poly.b(), std::vector<double>(cells, 0.0)};
  LpSolution sol = simplex_solve(feas);
  if (sol.status != LpStatus::optimal)
    throw std::logic_error("stationary_polytope: balance system infeasible (" +
                           lp_status_name(sol.status) + ")");

  if (cells <= 12) {
    auto verts = enumerate_vertices(poly.A(), poly.b());
    for (const auto& v : verts) {
      for (std::size_t r = 0; r < poly.n_rows(); ++r) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < cells; ++j) lhs += poly.A()[r][j] * v[j];
        if (std::abs(lhs - poly.b()[r]) > 1e-9)
          throw std::logic_error("stationary_polytope: cached vertex violates constraints");
      }
    }
    poly.vertices_ = std::move(verts);
  }
  return poly;
}

std::string MeasurePolytope::export_lp() const {
  std::ostringstream out;
  out << "polytope-lp v1\n";
  out << "cells " << n_cells() << " rows " << n_rows() << "\n";
  out << "columns cell_index_order\n";
  for (std::size_t r = 0; r < n_rows(); ++r) {
    out << "eq";
    for (std::size_t j = 0; j < n_cells(); ++j) out << ' ' << format_double(A_[r][j]);
    out << " = " << format_double(b_[r]) << "\n";
  }
  out << "bounds x >= 0\n";
  return out.str();
}

SupportResult support(const MeasurePolytope& poly, std::span<const double> c) {
  if (c.size() != poly.n_cells())
    throw std::invalid_argument("support: cost dimension mismatch");
  LpProblem lp{poly.A(), poly.b(), std::vector<double>(c.begin(), c.end())};
  LpSolution sol = simplex_solve(lp);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error("support: LP did not solve (" + lp_status_name(sol.status) + ")");
  double mass = 0.0;
  for (double w : sol.x) mass += w;
  std::vector<double> weights = sol.x;
  for (double& w : weights) w = std::max(0.0, w / mass);
  return SupportResult{sol.objective, OccMeasure(std::move(weights), MeasureKind::expectation),
                       sol.basis};
}

bool contains(const MeasurePolytope& poly, const OccMeasure& gamma, double tol) {
  if (gamma.n_cells() != poly.n_cells())
    throw std::invalid_argument("contains: measure grid mismatch");
  for (double w : gamma.weights())
    if (w < -tol) return false;
  for (std::size_t r = 0; r < poly.n_rows(); ++r) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < poly.n_cells(); ++j) lhs += poly.A()[r][j] * gamma.weight(j);
    if (std::abs(lhs - poly.b()[r]) > tol) return false;
  }
  return true;
}

ImageSupportResult image_support(const MeasurePolytope& poly,
                                 const std::vector<std::vector<double>>& H,
                                 std::span<const double> p) {
  if (H.size() != p.size()) throw std::invalid_argument("image_support: dimension mismatch");
  const std::size_t cells = poly.n_cells();
  std::vector<double> cost(cells, 0.0);
  for (std::size_t j = 0; j < H.size(); ++j) {
    if (H[j].size() != cells) throw std::invalid_argument("image_support: H row size mismatch");
    for (std::size_t cell = 0; cell < cells; ++cell) cost[cell] += p[j] * H[j][cell];
  }
  SupportResult s = support(poly, cost);
  std::vector<double> img(H.size(), 0.0);
  for (std::size_t j = 0; j < H.size(); ++j)
    for (std::size_t cell = 0; cell < cells; ++cell)
      img[j] += H[j][cell] * s.maximizer.weight(cell);
  return ImageSupportResult{s.value, std::move(img), std::move(s.maximizer)};
}

double polytope_set_hausdorff(const SupportOracle& s1, const SupportOracle& s2,
                              const std::vector<std::vector<double>>& directions) {
  if (directions.size() < 2)
    throw std::invalid_argument("polytope_set_hausdorff: need >= 2 directions");
  if (directions[0].size() > 1 && directions.size() < 16)
    throw std::invalid_argument("polytope_set_hausdorff: need >= 16 directions");
  double worst = 0.0;
  for (const auto& p : directions) worst = std::max(worst, std::abs(s1(p) - s2(p)));
  return worst;
}

SupportOracle point_cloud_support(const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw std::invalid_argument("point_cloud_support: empty cloud");
  return [points](std::span<const double> p) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : points) {
      double dot = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) dot += p[k] * v[k];
      best = std::max(best, dot);
    }
    return best;
  };
}

double l1_projection_distance(const MeasurePolytope& poly,
                              const std::vector<std::vector<double>>& H,
                              std::span<const double> target) {
  const std::size_t cells = poly.n_cells();
  const std::size_t j = H.size();
  if (target.size() != j) throw std::invalid_argument("l1_projection_distance: size mismatch");
  const std::size_t nvars = cells + 2 * j;  // gamma, s+, s-
  const std::size_t base_rows = poly.n_rows();

  LpProblem lp;
  lp.A.assign(base_rows + j, std::vector<double>(nvars, 0.0));
  lp.b.assign(base_rows + j, 0.0);
  for (std::size_t r = 0; r < base_rows; ++r) {
    for (std::size_t c = 0; c < cells; ++c) lp.A[r][c] = poly.A()[r][c];
    lp.b[r] = poly.b()[r];
  }
  for (std::size_t k = 0; k < j; ++k) {
    auto& row = lp.A[base_rows + k];
    for (std::size_t c = 0; c < cells; ++c) row[c] = H[k][c];
    row[cells + k] = -1.0;      // s+
    row[cells + j + k] = 1.0;   // s-
    lp.b[base_rows + k] = target[k];
  }
  lp.c.assign(nvars, 0.0);
  for (std::size_t k = 0; k < 2 * j; ++k) lp.c[cells + k] = -1.0;

  LpSolution sol = simplex_solve(lp);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error("l1_projection_distance: LP failed (" +
                             lp_status_name(sol.status) + ")");
  return std::max(0.0, -sol.objective);
}

namespace {

std::size_t matrix_rank(std::vector<std::vector<double>> M) {
  const std::size_t rows = M.size();
  const std::size_t cols = rows ? M[0].size() : 0;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows; ++col) {
    std::size_t piv = rank;
    for (std::size_t r = rank + 1; r < rows; ++r)
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    if (std::abs(M[piv][col]) < 1e-10) continue;
    std::swap(M[piv], M[rank]);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == rank) continue;
      const double f = M[r][col] / M[rank][col];
      for (std::size_t j = col; j < cols; ++j) M[r][j] -= f * M[rank][j];
    }
    ++rank;
  }
  return rank;
}

bool solve_square(std::vector<std::vector<double>> M, std::vector<double> rhs,
                  std::vector<double>& out) {
  const std::size_t n = M.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    if (std::abs(M[piv][col]) < 1e-12) return false;
    std::swap(M[piv], M[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = M[r][col] / M[col][col];
      for (std::size_t j = col; j < n; ++j) M[r][j] -= f * M[col][j];
      rhs[r] -= f * rhs[col];
    }
  }
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rhs[i] / M[i][i];
  return true;
}

}  // namespace

std::vector<std::vector<double>> enumerate_vertices(const std::vector<std::vector<double>>& A,
                                                    const std::vector<double>& b) {
  const std::size_t n = A.empty() ? 0 : A[0].size();
  if (n > 12) throw std::invalid_argument("enumerate_vertices: dimension guard (n <= 12)");
  const std::size_t rank = matrix_rank(A);

  std::vector<std::vector<double>> verts;
  std::vector<std::size_t> idx(rank);
  // all column subsets of size `rank`
  std::vector<std::size_t> comb(rank);
  for (std::size_t i = 0; i < rank; ++i) comb[i] = i;
  if (rank == 0 || rank > n) return verts;

  auto emit = [&](const std::vector<std::size_t>& cols) {
    // Solve A_B x_B = b in least-squares-free way: pick `rank` independent rows.
    // Build the full (rows x rank) system and reduce it.
    std::vector<std::vector<double>> M;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < A.size(); ++r) {
      std::vector<double> row(rank);
      for (std::size_t k = 0; k < rank; ++k) row[k] = A[r][cols[k]];
      M.push_back(std::move(row));
      rhs.push_back(b[r]);
    }
    // Gaussian elimination keeping the first `rank` independent rows.
    std::vector<std::vector<double>> sq;
    std::vector<double> sqb;
    std::vector<char> used(M.size(), 0);
    for (std::size_t k = 0; k < rank; ++k) {
      std::size_t best = M.size();
      double best_abs = 1e-10;
      for (std::size_t r = 0; r < M.size(); ++r) {
        if (used[r]) continue;
        if (std::abs(M[r][k]) > best_abs) {
          best_abs = std::abs(M[r][k]);
          best = r;
        }
      }
      if (best == M.size()) return;  // singular basis choice
      used[best] = 1;
      sq.push_back(M[best]);
      sqb.push_back(rhs[best]);
      for (std::size_t r = 0; r < M.size(); ++r) {
        if (used[r]) continue;
        const double f = M[r][k] / M[best][k];
        for (std::size_t j = 0; j < rank; ++j) M[r][j] -= f * M[best][j];
        rhs[r] -= f * sqb.back();
      }
    }
    std::vector<double> xb;
    if (!solve_square(sq, sqb, xb)) return;
    std::vector<double> x(n, 0.0);
    for (std::size_t k = 0; k < rank; ++k) {
      if (xb[k] < -1e-9) return;
      x[cols[k]] = std::max(0.0, xb[k]);
    }
    // all original equations must hold
    for (std::size_t r = 0; r < A.size(); ++r) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += A[r][j] * x[j];
      if (std::abs(lhs - b[r]) > 1e-8) return;
    }
    for (const auto& v : verts) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(v[j] - x[j]));
      if (d < 1e-9) return;  // duplicate
    }
    verts.push_back(std::move(x));
  };

  while (true) {
    emit(comb);
    // next combination
    std::size_t i = rank;
    while (i-- > 0) {
      if (comb[i] + (rank - i) < n) {
        ++comb[i];
        for (std::size_t j = i + 1; j < rank; ++j) comb[j] = comb[j - 1] + 1;
        break;
      }
      if (i == 0) return verts;
    }
  }
}

std::vector<OccMeasure> sample_vertices(const MeasurePolytope& poly, std::size_t directions,
                                        std::uint64_t seed) {
  RngStream rng(seed, make_stream(0, stream_channel::kDirections));
  std::map<std::vector<long long>, OccMeasure> found;
  const std::size_t cells = poly.n_cells();
  for (std::size_t k = 0; k < directions; ++k) {
    std::vector<double> c(cells);
    for (std::size_t j = 0; j < cells; ++j) c[j] = rng.uniform(-1.0, 1.0);
    SupportResult s = support(poly, c);
    std::vector<long long> key(cells);
    for (std::size_t j = 0; j < cells; ++j)
      key[j] = static_cast<long long>(std::llround(s.maximizer.weight(j) * 1e9));
    found.emplace(std::move(key), std::move(s.maximizer));
  }
  std::vector<OccMeasure> out;
  out.reserve(found.size());
  for (auto& [key, m] : found) out.push_back(std::move(m));
  return out;
}

}  // namespace occmeas
