#include "occmeas/inclusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "occmeas/csv.hpp"
#include "occmeas/errors.hpp"
#include "occmeas/metric.hpp"
#include "occmeas/parallel.hpp"
#include "occmeas/rng.hpp"

namespace occmeas {

VelocityOracle::VelocityOracle(MeasurePolytope poly, HybridSpec::SlowField g,
                               const GridSpec& grid,
                               std::vector<std::pair<double, double>> z_box, double lipschitz_C,
                               double bound_M)
    : poly_(std::move(poly)),
      g_(std::move(g)),
      grid_(&grid),
      box_(std::move(z_box)),
      C_(lipschitz_C),
      M_(bound_M) {
  if (box_.empty()) throw std::invalid_argument("VelocityOracle: empty z_box");
}

std::vector<std::vector<double>> VelocityOracle::g_rows(std::span<const double> z) const {
  const std::size_t cells = grid_->n_cells();
  std::vector<std::vector<double>> rows(dim(), std::vector<double>(cells, 0.0));
  for (std::size_t c = 0; c < cells; ++c) {
    const auto gv = g_(z, grid_->y_point(grid_->cell_y(c)), grid_->u_point(grid_->cell_u(c)));
    for (std::size_t i = 0; i < dim(); ++i) rows[i][c] = gv[i];
  }
  return rows;
}

VelocityOracle::Support VelocityOracle::support_Vg(std::span<const double> z,
                                                   std::span<const double> p) const {
  if (z.size() != dim() || p.size() != dim())
    throw std::invalid_argument("support_Vg: dimension mismatch");
  if (euclidean_norm(p) == 0.0) throw std::invalid_argument("support_Vg: zero direction");

  std::vector<long long> key;
  key.reserve(2 * dim());
  for (double v : z) key.push_back(static_cast<long long>(std::llround(v * 1e9)));
  for (double v : p) key.push_back(static_cast<long long>(std::llround(v * 1e9)));
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  const std::size_t cells = grid_->n_cells();
  std::vector<double> cost(cells, 0.0);
  const auto rows = g_rows(z);
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t c = 0; c < cells; ++c) cost[c] += p[i] * rows[i][c];

  SupportResult s = support(poly_, cost);
  Support out;
  out.value = s.value;
  out.weights.assign(s.maximizer.weights().begin(), s.maximizer.weights().end());
  out.velocity.assign(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t c = 0; c < cells; ++c) out.velocity[i] += rows[i][c] * out.weights[c];

  std::lock_guard<std::mutex> lock(cache_mutex_);
  cache_.emplace(std::move(key), out);
  return out;
}

std::vector<double> VelocityOracle::velocity_of(std::span<const double> z,
                                                std::span<const double> weights) const {
  const auto rows = g_rows(z);
  std::vector<double> v(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t c = 0; c < weights.size(); ++c) v[i] += rows[i][c] * weights[c];
  return v;
}

namespace {

/// min ||target - A alpha||^2 with sum(alpha) = 1, unconstrained sign:
/// KKT system over the atom Gram matrix.
bool affine_minimizer(const std::vector<std::vector<double>>& atoms,
                      std::span<const double> target, std::vector<double>& alpha) {
  const std::size_t m = atoms.size();
  const std::size_t dim = target.size();
  std::vector<std::vector<double>> M(m + 1, std::vector<double>(m + 2, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += atoms[i][k] * atoms[j][k];
      M[i][j] = dot;
    }
    M[i][m] = 1.0;  // multiplier column
    double rhs = 0.0;
    for (std::size_t k = 0; k < dim; ++k) rhs += atoms[i][k] * target[k];
    M[i][m + 1] = rhs;
  }
  for (std::size_t j = 0; j < m; ++j) M[m][j] = 1.0;
  M[m][m + 1] = 1.0;

  const std::size_t n = m + 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    if (std::abs(M[piv][col]) < 1e-13) return false;
    std::swap(M[piv], M[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = M[r][col] / M[col][col];
      for (std::size_t j = col; j <= n; ++j) M[r][j] -= f * M[col][j];
    }
  }
  alpha.resize(m);
  for (std::size_t i = 0; i < m; ++i) alpha[i] = M[i][n] / M[i][i];
  return true;
}

}  // namespace

ProjectionResult project_onto_Vg(const VelocityOracle& oracle, std::span<const double> v,
                                 std::span<const double> z, double gap_tol,
                                 std::size_t max_iter) {
  const std::size_t dim = oracle.dim();
  if (v.size() != dim) throw std::invalid_argument("project_onto_Vg: dimension mismatch");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("project_onto_Vg: non-finite target");

  // initial atom: LMO toward v (any fixed direction works when v is degenerate)
  std::vector<double> d0(v.begin(), v.end());
  if (euclidean_norm(d0) == 0.0) d0[0] = 1.0;
  VelocityOracle::Support first = oracle.support_Vg(z, d0);

  std::vector<std::vector<double>> atoms{first.velocity};
  std::vector<std::vector<double>> atom_weights{first.weights};
  std::vector<double> lambda{1.0};
  std::vector<double> x = first.velocity;

  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<double> dir(dim);
    for (std::size_t k = 0; k < dim; ++k) dir[k] = v[k] - x[k];
    if (euclidean_norm(dir) == 0.0) {
      gap = 0.0;
      break;
    }
    VelocityOracle::Support s = oracle.support_Vg(z, dir);
    gap = 0.0;
    for (std::size_t k = 0; k < dim; ++k) gap += dir[k] * (s.velocity[k] - x[k]);
    if (gap <= gap_tol) break;

    atoms.push_back(s.velocity);
    atom_weights.push_back(s.weights);
    lambda.push_back(0.0);

    // minor cycle: affine minimization clipped back into the simplex
    for (int minor = 0; minor < 64; ++minor) {
      std::vector<double> alpha;
      if (!affine_minimizer(atoms, v, alpha)) {
        // degenerate Gram system: drop the smallest-weight atom and retry
        std::size_t drop = 0;
        for (std::size_t i = 1; i < lambda.size(); ++i)
          if (lambda[i] < lambda[drop]) drop = i;
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(drop));
        atom_weights.erase(atom_weights.begin() + static_cast<std::ptrdiff_t>(drop));
        lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(drop));
        continue;
      }
      bool feasible = true;
      for (double a : alpha)
        if (a < -1e-12) feasible = false;
      if (feasible) {
        lambda = alpha;
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] < lambda[i]) {
          const double denom = lambda[i] - alpha[i];
          if (denom > 1e-15) theta = std::min(theta, lambda[i] / denom);
        }
      }
      for (std::size_t i = 0; i < lambda.size(); ++i)
        lambda[i] = (1.0 - theta) * lambda[i] + theta * alpha[i];
      for (std::size_t i = lambda.size(); i-- > 0;) {
        if (lambda[i] <= 1e-12) {
          atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(i));
          atom_weights.erase(atom_weights.begin() + static_cast<std::ptrdiff_t>(i));
          lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(i));
        }
      }
    }
    x.assign(dim, 0.0);
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t k = 0; k < dim; ++k) x[k] += lambda[i] * atoms[i][k];
  }

  if (gap > 1e-4)
    throw NumericalFailure("project_onto_Vg: conditional gradient did not converge (gap " +
                           format_double(gap) + ")");

  ProjectionResult out;
  out.velocity = x;
  out.gap = std::max(0.0, gap);
  const std::size_t cells = atom_weights.empty() ? 0 : atom_weights[0].size();
  out.weights.assign(cells, 0.0);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t c = 0; c < cells; ++c) out.weights[c] += lambda[i] * atom_weights[i][c];
  return out;
}

std::vector<double> InclusionSolution::z_at(double s) const {
  if (steps.empty()) throw std::logic_error("InclusionSolution: empty");
  const std::size_t N = windows();
  if (s <= steps.front().tau) return steps.front().zeta;
  for (std::size_t t = 0; t < N; ++t) {
    if (s <= steps[t + 1].tau + 1e-15) {
      const double dt = s - steps[t].tau;
      std::vector<double> z = steps[t].zeta;
      for (std::size_t k = 0; k < z.size(); ++k) z[k] += dt * steps[t].velocity[k];
      return z;
    }
  }
  // tail [tau_N, 1] moves with the velocity selected at zeta_N
  const double dt = s - steps[N].tau;
  std::vector<double> z = steps[N].zeta;
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += dt * steps[N].velocity[k];
  return z;
}

std::vector<double> InclusionSolution::window_average_velocity(std::size_t t) const {
  if (t >= windows()) throw std::invalid_argument("window_average_velocity: t out of range");
  std::vector<double> v = steps[t + 1].zeta;
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = (v[k] - steps[t].zeta[k]) / (steps[t + 1].tau - steps[t].tau);
  return v;
}

std::string InclusionSolution::to_csv() const {
  const std::size_t n = steps.empty() ? 0 : steps[0].zeta.size();
  std::vector<std::string> header{"t", "tau"};
  for (std::size_t k = 0; k < n; ++k) header.push_back("zeta_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < n; ++k) header.push_back("v_" + std::to_string(k + 1));
  header.push_back("gap");
  CsvWriter csv(header);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::vector<std::string> row{csv_cell(t), csv_cell(steps[t].tau)};
    for (double z : steps[t].zeta) row.push_back(csv_cell(z));
    for (double v : steps[t].velocity) row.push_back(csv_cell(v));
    row.push_back(csv_cell(steps[t].gap));
    csv.row(row);
  }
  return csv.full_text();
}

InclusionSolution solve_inclusion(const VelocityOracle& oracle, const TimeGrid& grid,
                                  std::span<const double> z0, const VelocitySelector& selector,
                                  const HybridSpec::TerminalCost* terminal) {
  if (z0.size() != oracle.dim()) throw std::invalid_argument("solve_inclusion: z0 dimension");
  InclusionSolution sol;
  sol.epsilon = grid.epsilon;
  sol.delta = grid.delta;
  std::vector<double> zeta(z0.begin(), z0.end());
  for (std::size_t t = 0; t <= grid.N; ++t) {
    const std::vector<double> target = selector(t, zeta);
    ProjectionResult proj = project_onto_Vg(oracle, target, zeta);
    InclusionStep step;
    step.tau = grid.tau[t];
    step.zeta = zeta;
    step.velocity = proj.velocity;
    step.gap = proj.gap;
    step.gamma = proj.weights;
    sol.steps.push_back(std::move(step));
    if (t < grid.N) {
      for (std::size_t k = 0; k < zeta.size(); ++k)
        zeta[k] += grid.delta * sol.steps.back().velocity[k];
    }
  }
  if (terminal != nullptr) sol.terminal_cost = (*terminal)(sol.z_at(1.0));
  return sol;
}

namespace {

struct Lattice {
  std::vector<std::vector<double>> axes;  // per-dimension coordinates

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
  }
  std::vector<double> point(std::size_t flat) const {
    std::vector<double> z(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
      z[d] = axes[d][flat % axes[d].size()];
      flat /= axes[d].size();
    }
    return z;
  }
};

Lattice make_lattice(const std::vector<std::pair<double, double>>& box, std::size_t points) {
  Lattice lat;
  for (const auto& [lo, hi] : box) {
    std::vector<double> axis(points);
    for (std::size_t i = 0; i < points; ++i)
      axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    lat.axes.push_back(std::move(axis));
  }
  return lat;
}

/// Multilinear interpolation with clamping to the lattice box.
double interpolate(const Lattice& lat, const std::vector<double>& values,
                   std::span<const double> z) {
  const std::size_t dim = lat.axes.size();
  std::vector<std::size_t> lo(dim);
  std::vector<double> frac(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const auto& axis = lat.axes[d];
    double x = std::clamp(z[d], axis.front(), axis.back());
    const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
    double idx = (x - axis.front()) / step;
    std::size_t i = std::min(static_cast<std::size_t>(idx), axis.size() - 2);
    lo[d] = i;
    frac[d] = std::clamp(idx - static_cast<double>(i), 0.0, 1.0);
  }
  double acc = 0.0;
  const std::size_t corners = std::size_t{1} << dim;
  for (std::size_t corner = 0; corner < corners; ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      const bool hi = (corner >> d) & 1u;
      w *= hi ? frac[d] : 1.0 - frac[d];
      flat = flat * lat.axes[d].size() + lo[d] + (hi ? 1 : 0);
    }
    acc += w * values[flat];
  }
  return acc;
}

std::vector<std::vector<double>> velocity_menu(const VelocityOracle& oracle,
                                               std::span<const double> z,
                                               const std::vector<std::vector<double>>& fan) {
  std::vector<std::vector<double>> menu;
  menu.reserve(fan.size());
  for (const auto& p : fan) {
    auto v = oracle.support_Vg(z, p).velocity;
    bool dup = false;
    for (const auto& m : menu)
      if (euclidean_distance(m, v) < 1e-12) {
        dup = true;
        break;
      }
    if (!dup) menu.push_back(std::move(v));
  }
  return menu;
}

double grid_dp_value(const VelocityOracle& oracle, const TimeGrid& grid,
                     const HybridSpec::TerminalCost& G, std::span<const double> z0,
                     std::size_t lattice_points, const std::vector<std::vector<double>>& fan,
                     std::vector<std::vector<std::vector<double>>>* menus_out,
                     Lattice* lattice_out) {
  Lattice lat = make_lattice(oracle.z_box(), lattice_points);
  const std::size_t nodes = lat.size();

  std::vector<std::vector<std::vector<double>>> menus(nodes);
  par::parallel_for(nodes, [&](std::size_t i) {
    menus[i] = velocity_menu(oracle, lat.point(i), fan);
  });

  const double tail = 1.0 - grid.tau[grid.N];
  std::vector<double> value(nodes), next(nodes);
  par::parallel_for(nodes, [&](std::size_t i) {
    const auto z = lat.point(i);
    if (tail > 1e-12) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : menus[i]) {
        std::vector<double> zt(z);
        for (std::size_t k = 0; k < zt.size(); ++k) zt[k] += tail * v[k];
        best = std::min(best, G(zt));
      }
      value[i] = best;
    } else {
      value[i] = G(z);
    }
  });

  for (std::size_t t = grid.N; t-- > 0;) {
    par::parallel_for(nodes, [&](std::size_t i) {
      const auto z = lat.point(i);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : menus[i]) {
        std::vector<double> zt(z);
        for (std::size_t k = 0; k < zt.size(); ++k) zt[k] += grid.delta * v[k];
        best = std::min(best, interpolate(lat, value, zt));
      }
      next[i] = best;
    });
    value.swap(next);
  }

  const double f0 = interpolate(lat, value, z0);
  if (menus_out != nullptr) *menus_out = std::move(menus);
  if (lattice_out != nullptr) *lattice_out = std::move(lat);
  return f0;
}

}  // namespace

F0Result optimize_F0(const VelocityOracle& oracle, const TimeGrid& grid,
                     const HybridSpec::TerminalCost& G, std::span<const double> z0,
                     const F0Options& options) {
  F0Result out;
  if (options.method == F0Method::grid_dp) {
    if (oracle.dim() > 2)
      throw std::invalid_argument("optimize_F0: grid-DP supports n <= 2 only");
    const auto fan = make_directions(oracle.dim(), options.directions, options.seed);

    // value pass plus stage values retained for policy extraction
    Lattice lat = make_lattice(oracle.z_box(), options.lattice);
    const std::size_t nodes = lat.size();
    std::vector<std::vector<std::vector<double>>> menus(nodes);
    par::parallel_for(nodes, [&](std::size_t i) {
      menus[i] = velocity_menu(oracle, lat.point(i), fan);
    });

    const double tail = 1.0 - grid.tau[grid.N];
    std::vector<std::vector<double>> stage_values(grid.N + 1,
                                                  std::vector<double>(nodes, 0.0));
    par::parallel_for(nodes, [&](std::size_t i) {
      const auto z = lat.point(i);
      if (tail > 1e-12) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v : menus[i]) {
          std::vector<double> zt(z);
          for (std::size_t k = 0; k < zt.size(); ++k) zt[k] += tail * v[k];
          best = std::min(best, G(zt));
        }
        stage_values[grid.N][i] = best;
      } else {
        stage_values[grid.N][i] = G(z);
      }
    });
    for (std::size_t t = grid.N; t-- > 0;) {
      par::parallel_for(nodes, [&](std::size_t i) {
        const auto z = lat.point(i);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v : menus[i]) {
          std::vector<double> zt(z);
          for (std::size_t k = 0; k < zt.size(); ++k) zt[k] += grid.delta * v[k];
          best = std::min(best, interpolate(lat, stage_values[t + 1], zt));
        }
        stage_values[t][i] = best;
      });
    }
    out.value = interpolate(lat, stage_values[0], z0);

    // greedy rollout against the stage values, menus generated at the exact
    // visited states so every velocity is an exact member of V_g(zeta_t)
    VelocitySelector dp_selector = [&](std::size_t t, std::span<const double> zeta) {
      const auto menu = velocity_menu(oracle, zeta, fan);
      double best = std::numeric_limits<double>::infinity();
      std::vector<double> best_v = menu.front();
      for (const auto& v : menu) {
        std::vector<double> zt(zeta.begin(), zeta.end());
        if (t < grid.N) {
          for (std::size_t k = 0; k < zt.size(); ++k) zt[k] += grid.delta * v[k];
          const double val = interpolate(lat, stage_values[t + 1], zt);
          if (val < best) {
            best = val;
            best_v = v;
          }
        } else {
          for (std::size_t k = 0; k < zt.size(); ++k) zt[k] += tail * v[k];
          const double val = G(zt);
          if (val < best) {
            best = val;
            best_v = v;
          }
        }
      }
      return best_v;
    };
    out.solution = solve_inclusion(oracle, grid, z0, dp_selector, &G);

    if (options.refine_lattice > 1 && options.refine_lattice != options.lattice) {
      const double refined =
          grid_dp_value(oracle, grid, G, z0, options.refine_lattice, fan, nullptr, nullptr);
      out.refinement_delta = std::abs(refined - out.value);
    }
    return out;
  }

  // extreme-point search: seeded multi-start over direction sequences
  const auto fan = make_directions(oracle.dim(), options.directions, options.seed);
  RngStream rng(options.seed, make_stream(2, stream_channel::kDirections));
  double best_value = std::numeric_limits<double>::infinity();
  InclusionSolution best_sol;
  for (std::size_t start = 0; start < options.search_starts; ++start) {
    std::vector<std::size_t> choice(grid.N + 1);
    for (auto& c : choice) c = static_cast<std::size_t>(rng.uniform() * fan.size()) % fan.size();
    VelocitySelector sel = [&](std::size_t t, std::span<const double> zeta) {
      return oracle.support_Vg(zeta, fan[choice[t]]).velocity;
    };
    InclusionSolution sol = solve_inclusion(oracle, grid, z0, sel, &G);
    if (sol.terminal_cost < best_value) {
      best_value = sol.terminal_cost;
      best_sol = std::move(sol);
    }
  }
  out.value = best_value;
  out.solution = std::move(best_sol);
  return out;
}

}  // namespace occmeas
