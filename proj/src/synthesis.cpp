#include "occmeas/synthesis.hpp"

#include <cmath>
#include <sstream>

#include "occmeas/csv.hpp"
#include "occmeas/errors.hpp"
#include "occmeas/parallel.hpp"
#include "occmeas/rng.hpp"
#include "occmeas/simplex.hpp"

namespace occmeas {

std::vector<double> target_velocity(const InclusionSolution& zbar, std::size_t t,
                                    const VelocityOracle& oracle) {
  if (t >= zbar.windows()) throw std::invalid_argument("target_velocity: window out of range");
  const std::vector<double> avg = zbar.window_average_velocity(t);
  const std::vector<double> z_tau = zbar.steps[t].zeta;
  return project_onto_Vg(oracle, avg, z_tau).velocity;
}

MeasureForVelocity measure_for_velocity(const VelocityOracle& oracle, std::span<const double> z,
                                        std::span<const double> v, double tol) {
  const MeasurePolytope& poly = oracle.polytope();
  const std::size_t cells = poly.n_cells();
  const std::size_t n = oracle.dim();
  if (v.size() != n) throw std::invalid_argument("measure_for_velocity: dimension mismatch");

  const auto rows = oracle.g_rows(z);
  LpProblem lp;
  const std::size_t nvars = cells + 2 * n;
  lp.A.assign(poly.n_rows() + n, std::vector<double>(nvars, 0.0));
  lp.b.assign(poly.n_rows() + n, 0.0);
  for (std::size_t r = 0; r < poly.n_rows(); ++r) {
    for (std::size_t c = 0; c < cells; ++c) lp.A[r][c] = poly.A()[r][c];
    lp.b[r] = poly.b()[r];
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto& row = lp.A[poly.n_rows() + k];
    for (std::size_t c = 0; c < cells; ++c) row[c] = rows[k][c];
    row[cells + k] = -1.0;
    row[cells + n + k] = 1.0;
    lp.b[poly.n_rows() + k] = v[k];
  }
  lp.c.assign(nvars, 0.0);
  for (std::size_t k = 0; k < 2 * n; ++k) lp.c[cells + k] = -1.0;

  LpSolution sol = simplex_solve(lp);
  if (sol.status != LpStatus::optimal)
    throw NumericalFailure("measure_for_velocity: LP failed (" + lp_status_name(sol.status) +
                           ")");
  const double slack = std::max(0.0, -sol.objective);
  if (slack > tol)
    throw NumericalFailure("measure_for_velocity: velocity outside V_g (slack " +
                           format_double(slack) + ")");
  std::vector<double> w(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(cells));
  double mass = 0.0;
  for (double x : w) mass += x;
  for (double& x : w) x = std::max(0.0, x / mass);
  return MeasureForVelocity{OccMeasure(std::move(w), MeasureKind::expectation), slack};
}

PolicyTable policy_from_measure(const OccMeasure& gamma, const GridSpec& grid,
                                std::size_t filler_u) {
  return PolicyTable::from_conditional(gamma, grid.n_y(), grid.n_u(), filler_u);
}

namespace {

std::uint64_t digest_weights(std::span<const double> w) {
  std::uint64_t h = 1469598103934665603ull;
  for (double x : w) {
    const auto q = static_cast<std::uint64_t>(
        static_cast<std::int64_t>(std::llround(x * 1e12)));
    for (int b = 0; b < 8; ++b) {
      h ^= (q >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

std::string SynthesizedPlan::provenance_csv() const {
  const std::size_t n = windows.empty() ? 0 : windows[0].target_v.size();
  std::vector<std::string> header{"window"};
  for (std::size_t k = 0; k < n; ++k) header.push_back("v_" + std::to_string(k + 1));
  header.push_back("measure_slack");
  header.push_back("gamma_digest");
  header.push_back("nu_g_estimate");
  header.push_back("nu_g_stderr");
  CsvWriter csv(header);
  for (const auto& w : windows) {
    std::vector<std::string> row{csv_cell(w.window)};
    for (double v : w.target_v) row.push_back(csv_cell(v));
    row.push_back(csv_cell(w.measure_slack));
    row.push_back(std::to_string(w.gamma_digest));
    row.push_back(csv_cell(w.nu_g_estimate));
    row.push_back(csv_cell(w.nu_g_stderr));
    csv.row(row);
  }
  return csv.full_text();
}

SynthesizedPlan assemble_plan(const InclusionSolution& zbar, const VelocityOracle& oracle,
                              const SystemSpec& sysspec, const TimeGrid& grid,
                              const SynthesisConfig& config, std::size_t y0,
                              std::uint64_t seed) {
  const GridSpec& g = sysspec.grid();
  if (config.filler_u >= g.n_u()) throw std::invalid_argument("assemble_plan: bad filler");
  if (grid.K == 0) throw std::invalid_argument("assemble_plan: empty fast blocks");
  if (config.burn_in >= grid.K)
    throw std::invalid_argument("assemble_plan: burn-in must be below K(eps)");
  if (zbar.windows() < grid.N) throw std::invalid_argument("assemble_plan: zbar too short");

  const auto length = static_cast<std::size_t>(std::floor(1.0 / grid.epsilon)) + 1;

  SynthesizedPlan out;
  out.epsilon = grid.epsilon;
  out.K = grid.K;

  std::vector<PolicyTable> tables;
  std::vector<std::size_t> u_filler(g.n_y(), config.filler_u);
  tables.push_back(PolicyTable::deterministic(u_filler, g.n_u()));  // table 0 = filler
  std::vector<std::size_t> table_of_t(length, 0);

  std::vector<OccMeasure> gammas;
  gammas.reserve(grid.N);
  for (std::size_t t = 0; t < grid.N; ++t) {
    try {
      const std::vector<double> v_t = target_velocity(zbar, t, oracle);
      MeasureForVelocity mv =
          measure_for_velocity(oracle, zbar.steps[t].zeta, v_t, config.realization_tol);
      tables.push_back(policy_from_measure(mv.gamma, g, config.filler_u));
      const std::size_t start = grid.fast_start(t);
      for (std::size_t k = start; k < start + grid.K && k < length; ++k)
        table_of_t[k] = tables.size() - 1;

      WindowProvenance prov;
      prov.window = t;
      prov.target_v = v_t;
      prov.measure_slack = mv.slack;
      prov.gamma_digest = digest_weights(mv.gamma.weights());
      prov.nu_g_estimate = 0.0;
      prov.nu_g_stderr = 0.0;
      out.windows.push_back(std::move(prov));
      gammas.push_back(std::move(mv.gamma));
    } catch (const std::exception& e) {
      throw NumericalFailure("assemble_plan: window " + std::to_string(t) + ": " + e.what());
    }
  }
  out.plan = ControlPlan::markov_schedule(std::move(tables), std::move(table_of_t));

  // realized per-window nu_g: replicated runs of the assembled plan
  const std::size_t R = config.nu_g_replicates;
  if (R > 0) {
    std::vector<std::vector<std::vector<double>>> window_rows(grid.N);
    for (std::size_t t = 0; t < grid.N; ++t) window_rows[t] = oracle.g_rows(zbar.steps[t].zeta);
    struct Acc {
      std::vector<double> sum, sumsq;
    };
    const std::size_t N = grid.N;
    Acc total = par::blocked_reduce<Acc>(
        R,
        [N] { return Acc{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)}; },
        [&](Acc& acc, std::size_t r) {
          Trajectory traj = simulate(sysspec, out.plan, y0, length, seed, r);
          for (std::size_t t = 0; t < N; ++t) {
            const auto& rows = window_rows[t];
            std::vector<double> avg(oracle.dim(), 0.0);
            const std::size_t start = grid.fast_start(t);
            std::size_t used = 0;
            for (std::size_t k = start + config.burn_in; k < start + grid.K; ++k) {
              const std::size_t cell = g.cell_index(traj.y_path[k], traj.u_path[k]);
              for (std::size_t d = 0; d < avg.size(); ++d) avg[d] += rows[d][cell];
              ++used;
            }
            for (double& x : avg) x /= static_cast<double>(used);
            const double err = euclidean_distance(avg, out.windows[t].target_v);
            acc.sum[t] += err;
            acc.sumsq[t] += err * err;
          }
        },
        [N](Acc& a, const Acc& b) {
          for (std::size_t t = 0; t < N; ++t) {
            a.sum[t] += b.sum[t];
            a.sumsq[t] += b.sumsq[t];
          }
        });
    for (std::size_t t = 0; t < grid.N; ++t) {
      const double Rd = static_cast<double>(R);
      const double mean = total.sum[t] / Rd;
      out.windows[t].nu_g_estimate = mean;
      if (R > 1) {
        const double var = std::max(0.0, (total.sumsq[t] - Rd * mean * mean) / (Rd - 1.0));
        out.windows[t].nu_g_stderr = std::sqrt(var / Rd);
      }
    }
  }
  return out;
}

TrackingReport verify_tracking(const HybridSpec& hspec, const SystemSpec& sysspec,
                               const ControlPlan& plan, const InclusionSolution& zbar,
                               std::size_t y0, std::size_t replicates, std::uint64_t seed) {
  if (replicates < 30) throw StatGuardError("verify_tracking: need >= 30 replicates");

  // mesh from one probe run (mesh depends only on epsilon)
  HybridTrajectory probe = simulate_hybrid(hspec, sysspec, plan, y0, seed, 0);
  const std::size_t mesh_n = probe.mesh.size();

  struct Acc {
    std::vector<double> sum, sumsq;
  };
  Acc total = par::blocked_reduce<Acc>(
      replicates,
      [mesh_n] { return Acc{std::vector<double>(mesh_n, 0.0), std::vector<double>(mesh_n, 0.0)}; },
      [&](Acc& acc, std::size_t r) {
        HybridTrajectory traj = simulate_hybrid(hspec, sysspec, plan, y0, seed, r);
        for (std::size_t k = 0; k < mesh_n; ++k) {
          const double e = euclidean_distance(traj.z[k], zbar.z_at(traj.mesh[k]));
          acc.sum[k] += e;
          acc.sumsq[k] += e * e;
        }
      },
      [mesh_n](Acc& a, const Acc& b) {
        for (std::size_t k = 0; k < mesh_n; ++k) {
          a.sum[k] += b.sum[k];
          a.sumsq[k] += b.sumsq[k];
        }
      });

  TrackingReport report;
  report.mesh = probe.mesh;
  report.mean_error.resize(mesh_n);
  const double R = static_cast<double>(replicates);
  for (std::size_t k = 0; k < mesh_n; ++k) {
    const double mean = total.sum[k] / R;
    report.mean_error[k] = mean;
    if (mean > report.max_error) {
      report.max_error = mean;
      const double var = std::max(0.0, (total.sumsq[k] - R * mean * mean) / (R - 1.0));
      report.stderr_at_max = std::sqrt(var / R);
    }
  }
  return report;
}

GapReport optimality_gap(const HybridSpec& hspec, const SystemSpec& sysspec,
                         const ControlPlan& plan, double f0, std::size_t y0,
                         std::size_t replicates, std::uint64_t seed) {
  FEpsEstimate est = estimate_F_eps(hspec, sysspec, {plan}, y0, replicates, seed);
  GapReport report;
  report.expected_cost = est.values[0];
  report.cost_stderr = est.stderrs[0];
  report.f0 = f0;
  report.gap = est.values[0] - f0;
  return report;
}

}  // namespace occmeas
