#include "occmeas/hybrid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "occmeas/csv.hpp"
#include "occmeas/errors.hpp"
#include "occmeas/parallel.hpp"
#include "occmeas/rng.hpp"

namespace occmeas {

namespace {

std::vector<double> sample_box(const std::vector<std::pair<double, double>>& box,
                               RngStream& rng) {
  std::vector<double> z(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) z[i] = rng.uniform(box[i].first, box[i].second);
  return z;
}

}  // namespace

HybridSpec::HybridSpec(SlowField g, TerminalCost G, std::vector<double> z0, double epsilon,
                       double lipschitz_C, double bound_M, double lipschitz_CG,
                       std::vector<std::pair<double, double>> z_box, const GridSpec& grid)
    : g_(std::move(g)),
      G_(std::move(G)),
      z0_(std::move(z0)),
      epsilon_(epsilon),
      C_(lipschitz_C),
      M_(bound_M),
      CG_(lipschitz_CG),
      box_(std::move(z_box)) {
  if (epsilon_ <= 0.0 || epsilon_ >= 1.0)
    throw std::invalid_argument("HybridSpec: epsilon must be in (0, 1)");
  if (box_.size() != z0_.size()) throw std::invalid_argument("HybridSpec: z_box dimension");
  for (const auto& [lo, hi] : box_)
    if (lo >= hi) throw std::invalid_argument("HybridSpec: degenerate z_box side");
  if (!in_box(z0_)) throw std::invalid_argument("HybridSpec: z0 outside z_box");

  // declared constants checked by randomized sampling over z_box x grid
  RngStream rng(0x600dca11, make_stream(0, stream_channel::kMisc));
  for (int trial = 0; trial < 200; ++trial) {
    const auto z1 = sample_box(box_, rng);
    const auto z2 = sample_box(box_, rng);
    const double dz = euclidean_distance(z1, z2);
    if (std::abs(G_(z1) - G_(z2)) > CG_ * dz + 1e-9)
      throw std::invalid_argument("HybridSpec: declared C_G violated by sampling");
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy)
      for (std::size_t iu = 0; iu < grid.n_u(); ++iu) {
        const auto g1 = g_(z1, grid.y_point(iy), grid.u_point(iu));
        const auto g2 = g_(z2, grid.y_point(iy), grid.u_point(iu));
        if (g1.size() != dim() || g2.size() != dim())
          throw std::invalid_argument("HybridSpec: slow field dimension mismatch");
        if (euclidean_norm(g1) > M_ + 1e-9)
          throw std::invalid_argument("HybridSpec: declared M violated by sampling");
        if (euclidean_distance(g1, g2) > C_ * dz + 1e-9)
          throw std::invalid_argument("HybridSpec: declared C violated by sampling");
      }
  }
}

bool HybridSpec::in_box(std::span<const double> z) const {
  for (std::size_t i = 0; i < box_.size(); ++i)
    if (z[i] < box_[i].first - 1e-12 || z[i] > box_[i].second + 1e-12) return false;
  return true;
}

HybridSpec HybridSpec::with_epsilon(double eps, const GridSpec& grid) const {
  return HybridSpec(g_, G_, z0_, eps, C_, M_, CG_, box_, grid);
}

double DeltaSchedule::delta(double epsilon) const {
  switch (kind) {
    case DeltaScheduleKind::sqrt_eps: return std::sqrt(epsilon);
    case DeltaScheduleKind::power: return std::pow(epsilon, alpha);
    case DeltaScheduleKind::custom: return custom_delta;
  }
  return std::sqrt(epsilon);
}

TimeGrid make_time_grid(double epsilon, const DeltaSchedule& schedule) {
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("make_time_grid: epsilon must be in (0, 1)");
  const double delta = schedule.delta(epsilon);
  if (delta <= epsilon)
    throw std::invalid_argument("make_time_grid: Delta(eps) must exceed eps");
  if (delta >= 1.0) throw std::invalid_argument("make_time_grid: Delta(eps) must be < 1");

  TimeGrid grid;
  grid.epsilon = epsilon;
  grid.delta = delta;
  grid.N = static_cast<std::size_t>(std::floor(1.0 / delta));
  grid.tau.resize(grid.N + 1);
  for (std::size_t t = 0; t <= grid.N; ++t) grid.tau[t] = static_cast<double>(t) * delta;
  grid.Kt.resize(grid.N);
  for (std::size_t t = 0; t < grid.N; ++t) {
    const auto lo = static_cast<long long>(std::floor(grid.tau[t] / epsilon));
    const auto hi = static_cast<long long>(std::floor(grid.tau[t + 1] / epsilon));
    grid.Kt[t] = static_cast<std::size_t>(hi - lo);
  }
  grid.K = grid.Kt.empty() ? 0 : *std::min_element(grid.Kt.begin(), grid.Kt.end());
  return grid;
}

std::size_t TimeGrid::fast_start(std::size_t t) const {
  return static_cast<std::size_t>(std::floor(tau[t] / epsilon));
}

std::string HybridTrajectory::to_csv(const GridSpec& grid) const {
  (void)grid;
  std::vector<std::string> header{"s"};
  for (std::size_t i = 0; i < (z.empty() ? 0 : z[0].size()); ++i)
    header.push_back("z_" + std::to_string(i + 1));
  header.push_back("y_index");
  header.push_back("u_index");
  CsvWriter csv(header);
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    std::vector<std::string> row{csv_cell(mesh[k])};
    for (double v : z[k]) row.push_back(csv_cell(v));
    // mesh point k is the fast boundary eps*k; the pair active on [s, s+eps)
    const std::size_t t = std::min(k, fast.horizon() - 1);
    row.push_back(csv_cell(fast.y_path[t]));
    row.push_back(csv_cell(fast.u_path[t]));
    csv.row(row);
  }
  return csv.full_text();
}

HybridTrajectory simulate_hybrid(const HybridSpec& hspec, const SystemSpec& sysspec,
                                 const ControlPlan& plan, std::size_t y0, std::uint64_t seed,
                                 std::uint64_t replicate, std::size_t substeps) {
  const double eps = hspec.epsilon();
  const auto T_fast = static_cast<std::size_t>(std::floor(1.0 / eps));
  if (plan.horizon() < T_fast + 1)
    throw std::invalid_argument("simulate_hybrid: plan horizon < floor(1/eps) + 1");
  if (substeps < 4) throw std::invalid_argument("simulate_hybrid: need >= 4 substeps");

  const GridSpec& grid = sysspec.grid();
  Trajectory fast = simulate(sysspec, plan, y0, T_fast + 1, seed, replicate);

  HybridTrajectory out;
  out.fast = fast;
  out.seed = seed;
  std::vector<double> z = hspec.z0();
  out.mesh.push_back(0.0);
  out.z.push_back(z);

  std::vector<double> k1, k2, k3, k4, tmp(z.size());
  for (std::size_t t = 0; t <= T_fast; ++t) {
    const double s_lo = eps * static_cast<double>(t);
    const double s_hi = std::min(eps * static_cast<double>(t + 1), 1.0);
    if (s_hi <= s_lo) break;
    const Point& yp = grid.y_point(fast.y_path[t]);
    const Point& up = grid.u_point(fast.u_path[t]);
    auto field = [&](const std::vector<double>& zz) { return hspec.g()(zz, yp, up); };
    const double hstep = (s_hi - s_lo) / static_cast<double>(substeps);
    for (std::size_t sub = 0; sub < substeps; ++sub) {
      k1 = field(z);
      for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + 0.5 * hstep * k1[i];
      k2 = field(tmp);
      for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + 0.5 * hstep * k2[i];
      k3 = field(tmp);
      for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + hstep * k3[i];
      k4 = field(tmp);
      for (std::size_t i = 0; i < z.size(); ++i)
        z[i] += hstep / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!hspec.in_box(z)) {
      std::ostringstream dump;
      dump << "t=" << t << " s=" << s_hi << " z=";
      for (double v : z) dump << ' ' << format_double(v);
      dump << "\nfast trajectory:\n" << fast.to_csv();
      throw ModelViolation("simulate_hybrid: z left z_box", dump.str());
    }
    out.mesh.push_back(s_hi);
    out.z.push_back(z);
    if (s_hi >= 1.0) break;
  }
  out.terminal_cost = hspec.G()(out.z.back());
  return out;
}

FEpsEstimate estimate_F_eps(const HybridSpec& hspec, const SystemSpec& sysspec,
                            const std::vector<ControlPlan>& plans, std::size_t y0,
                            std::size_t replicates, std::uint64_t seed) {
  if (plans.empty()) throw std::invalid_argument("estimate_F_eps: empty plan list");
  if (replicates < 30) throw StatGuardError("estimate_F_eps: need >= 30 replicates");

  FEpsEstimate out;
  out.values.resize(plans.size());
  out.stderrs.resize(plans.size());
  for (std::size_t pi = 0; pi < plans.size(); ++pi) {
    struct Acc {
      double sum = 0.0, sumsq = 0.0;
    };
    Acc acc = par::blocked_reduce<Acc>(
        replicates, [] { return Acc{}; },
        [&](Acc& a, std::size_t r) {
          HybridTrajectory traj = simulate_hybrid(hspec, sysspec, plans[pi], y0, seed, r);
          a.sum += traj.terminal_cost;
          a.sumsq += traj.terminal_cost * traj.terminal_cost;
        },
        [](Acc& a, const Acc& b) {
          a.sum += b.sum;
          a.sumsq += b.sumsq;
        });
    const double R = static_cast<double>(replicates);
    const double mean = acc.sum / R;
    const double var = std::max(0.0, (acc.sumsq - R * mean * mean) / (R - 1.0));
    out.values[pi] = mean;
    out.stderrs[pi] = std::sqrt(var / R);
  }
  out.best_index = 0;
  for (std::size_t pi = 1; pi < plans.size(); ++pi)
    if (out.values[pi] < out.values[out.best_index]) out.best_index = pi;
  out.best_value = out.values[out.best_index];
  return out;
}

}  // namespace occmeas
