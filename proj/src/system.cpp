#include "occmeas/system.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "occmeas/csv.hpp"
#include "occmeas/parallel.hpp"
#include "occmeas/rng.hpp"

namespace occmeas {

SystemSpec::SystemSpec(GridSpec grid, Dynamics f) : grid_(std::move(grid)) {
  const std::size_t ny = grid_.n_y(), nu = grid_.n_u(), ns = grid_.n_s();
  table_.resize(ny * nu * ns);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t iu = 0; iu < nu; ++iu)
      for (std::size_t is = 0; is < ns; ++is) {
        const Point img = f(grid_.y_point(iy), grid_.u_point(iu), grid_.s_value(is));
        if (img.size() != grid_.y_dim())
          throw std::invalid_argument("SystemSpec: dynamics output dimension mismatch");
        table_[(iy * nu + iu) * ns + is] = grid_.project_y(img);
      }
}

SystemSpec::SystemSpec(GridSpec grid, std::vector<std::size_t> step_table)
    : grid_(std::move(grid)), table_(std::move(step_table)) {
  if (table_.size() != grid_.n_y() * grid_.n_u() * grid_.n_s())
    throw std::invalid_argument("SystemSpec: step table size mismatch");
  for (std::size_t v : table_)
    if (v >= grid_.n_y()) throw std::invalid_argument("SystemSpec: step table entry out of range");
}

std::size_t SystemSpec::step(std::size_t iy, std::size_t iu, std::size_t is) const {
  if (iy >= grid_.n_y() || iu >= grid_.n_u() || is >= grid_.n_s())
    throw std::invalid_argument("SystemSpec::step: index out of range");
  return table_[(iy * grid_.n_u() + iu) * grid_.n_s() + is];
}

PolicyTable PolicyTable::deterministic(const std::vector<std::size_t>& u_of_y, std::size_t n_u) {
  PolicyTable t;
  t.probs.resize(u_of_y.size());
  for (std::size_t y = 0; y < u_of_y.size(); ++y) {
    if (u_of_y[y] >= n_u) throw std::invalid_argument("PolicyTable: control index out of range");
    t.probs[y].assign(n_u, 0.0);
    t.probs[y][u_of_y[y]] = 1.0;
  }
  return t;
}

PolicyTable PolicyTable::from_conditional(const OccMeasure& gamma, std::size_t n_y,
                                          std::size_t n_u, std::size_t filler_u) {
  if (gamma.n_cells() != n_y * n_u)
    throw std::invalid_argument("PolicyTable::from_conditional: grid mismatch");
  if (filler_u >= n_u)
    throw std::invalid_argument("PolicyTable::from_conditional: filler out of range");
  PolicyTable t;
  t.probs.assign(n_y, std::vector<double>(n_u, 0.0));
  for (std::size_t y = 0; y < n_y; ++y) {
    double marginal = 0.0;
    for (std::size_t u = 0; u < n_u; ++u) marginal += gamma.weight(y * n_u + u);
    if (marginal > 0.0) {
      for (std::size_t u = 0; u < n_u; ++u) t.probs[y][u] = gamma.weight(y * n_u + u) / marginal;
    } else {
      t.probs[y][filler_u] = 1.0;
    }
  }
  return t;
}

bool PolicyTable::is_deterministic() const {
  for (const auto& row : probs) {
    for (double p : row)
      if (p != 0.0 && p != 1.0) return false;
  }
  return true;
}

std::size_t PolicyTable::arg_u(std::size_t y) const {
  const auto& row = probs.at(y);
  for (std::size_t u = 0; u < row.size(); ++u)
    if (row[u] == 1.0) return u;
  throw std::logic_error("PolicyTable::arg_u on randomized row");
}

ControlPlan ControlPlan::open_loop(std::vector<std::size_t> u_sequence) {
  if (u_sequence.empty()) throw std::invalid_argument("ControlPlan: empty open-loop sequence");
  ControlPlan p;
  p.kind_ = PlanKind::open_loop;
  p.horizon_ = u_sequence.size();
  p.open_loop_ = std::move(u_sequence);
  return p;
}

ControlPlan ControlPlan::markov_stationary(PolicyTable table, std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("ControlPlan: horizon must be >= 1");
  ControlPlan p;
  p.kind_ = PlanKind::markov;
  p.horizon_ = horizon;
  p.tables_.push_back(std::move(table));
  p.table_of_t_.assign(horizon, 0);
  return p;
}

ControlPlan ControlPlan::markov_schedule(std::vector<PolicyTable> tables,
                                         std::vector<std::size_t> table_of_t) {
  if (tables.empty() || table_of_t.empty())
    throw std::invalid_argument("ControlPlan: empty Markov schedule");
  for (std::size_t k : table_of_t)
    if (k >= tables.size()) throw std::invalid_argument("ControlPlan: table index out of range");
  ControlPlan p;
  p.kind_ = PlanKind::markov;
  p.horizon_ = table_of_t.size();
  p.tables_ = std::move(tables);
  p.table_of_t_ = std::move(table_of_t);
  return p;
}

ControlPlan ControlPlan::history(std::size_t window, std::size_t n_atoms,
                                 std::vector<std::vector<std::size_t>> entries) {
  if (entries.empty()) throw std::invalid_argument("ControlPlan: empty history plan");
  ControlPlan p;
  p.kind_ = PlanKind::history;
  p.horizon_ = entries.size();
  p.window_ = window;
  p.n_atoms_ = n_atoms;
  for (std::size_t t = 0; t < entries.size(); ++t) {
    std::size_t expect = 1;
    const std::size_t w = std::min(t, window);
    for (std::size_t k = 0; k < w; ++k) expect *= n_atoms;
    if (entries[t].size() != expect)
      throw std::invalid_argument("ControlPlan: history table size mismatch at t=" +
                                  std::to_string(t));
  }
  p.history_entries_ = std::move(entries);
  return p;
}

bool ControlPlan::randomized() const {
  if (kind_ != PlanKind::markov) return false;
  for (const auto& t : tables_)
    if (!t.is_deterministic()) return true;
  return false;
}

std::size_t ControlPlan::decide(std::size_t t, std::size_t y,
                                const std::vector<std::size_t>& history,
                                double policy_draw) const {
  if (t >= horizon_) throw std::invalid_argument("ControlPlan::decide: t beyond horizon");
  switch (kind_) {
    case PlanKind::open_loop:
      return open_loop_[t];
    case PlanKind::markov: {
      const PolicyTable& table = tables_[table_of_t_[t]];
      const auto& row = table.probs.at(y);
      double acc = 0.0;
      for (std::size_t u = 0; u + 1 < row.size(); ++u) {
        acc += row[u];
        if (policy_draw < acc) return u;
      }
      return row.size() - 1;
    }
    case PlanKind::history: {
      const std::size_t w = std::min(t, window_);
      std::size_t key = 0;
      for (std::size_t k = 0; k < w; ++k) key = key * n_atoms_ + history[t - w + k];
      return history_entries_[t][key];
    }
  }
  throw std::logic_error("ControlPlan::decide: bad kind");
}

std::string ControlPlan::serialize() const {
  std::ostringstream out;
  out << "plan v1\n";
  switch (kind_) {
    case PlanKind::open_loop: {
      out << "kind open-loop\nhorizon " << horizon_ << "\nu";
      for (std::size_t u : open_loop_) out << ' ' << u;
      out << "\n";
      break;
    }
    case PlanKind::markov: {
      out << "kind markov\nhorizon " << horizon_ << "\ntables " << tables_.size() << "\n";
      for (const auto& table : tables_) {
        out << "table " << table.probs.size() << ' '
            << (table.probs.empty() ? 0 : table.probs[0].size()) << "\n";
        for (const auto& row : table.probs) {
          out << " ";
          for (double p : row) out << ' ' << format_double(p);
          out << "\n";
        }
      }
      out << "assign";
      for (std::size_t k : table_of_t_) out << ' ' << k;
      out << "\n";
      break;
    }
    case PlanKind::history: {
      out << "kind history\nhorizon " << horizon_ << "\nwindow " << window_ << "\natoms "
          << n_atoms_ << "\n";
      for (std::size_t t = 0; t < history_entries_.size(); ++t) {
        out << "h " << t;
        for (std::size_t u : history_entries_[t]) out << ' ' << u;
        out << "\n";
      }
      break;
    }
  }
  return out.str();
}

ControlPlan ControlPlan::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  in >> tok;
  if (tok != "plan") throw std::invalid_argument("plan schema: bad magic");
  in >> tok;  // version
  in >> tok;
  if (tok != "kind") throw std::invalid_argument("plan schema: missing kind");
  std::string kind;
  in >> kind;
  in >> tok;
  if (tok != "horizon") throw std::invalid_argument("plan schema: missing horizon");
  std::size_t horizon = 0;
  in >> horizon;
  if (kind == "open-loop") {
    in >> tok;
    std::vector<std::size_t> seq(horizon);
    for (auto& u : seq) in >> u;
    return open_loop(std::move(seq));
  }
  if (kind == "markov") {
    in >> tok;
    std::size_t ntables = 0;
    in >> ntables;
    std::vector<PolicyTable> tables(ntables);
    for (auto& table : tables) {
      in >> tok;  // "table"
      std::size_t ny = 0, nu = 0;
      in >> ny >> nu;
      table.probs.assign(ny, std::vector<double>(nu, 0.0));
      for (auto& row : table.probs)
        for (auto& p : row) in >> p;
    }
    in >> tok;  // "assign"
    std::vector<std::size_t> assign(horizon);
    for (auto& k : assign) in >> k;
    return markov_schedule(std::move(tables), std::move(assign));
  }
  if (kind == "history") {
    std::size_t window = 0, atoms = 0;
    in >> tok >> window >> tok >> atoms;
    std::vector<std::vector<std::size_t>> entries(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
      std::size_t tt = 0;
      in >> tok >> tt;
      std::size_t expect = 1;
      for (std::size_t k = 0; k < std::min(tt, window); ++k) expect *= atoms;
      entries[tt].resize(expect);
      for (auto& u : entries[tt]) in >> u;
    }
    return history(window, atoms, std::move(entries));
  }
  throw std::invalid_argument("plan schema: unknown kind " + kind);
}

std::string Trajectory::to_csv() const {
  CsvWriter csv({"t", "y_index", "u_index", "s_index"});
  for (std::size_t t = 0; t < u_path.size(); ++t)
    csv.row({csv_cell(t), csv_cell(y_path[t]), csv_cell(u_path[t]), csv_cell(s_path[t])});
  csv.row({csv_cell(u_path.size()), csv_cell(y_path.back()), "", ""});
  return csv.full_text();
}

Trajectory simulate(const SystemSpec& spec, const ControlPlan& plan, std::size_t y0,
                    std::size_t T, std::uint64_t seed, std::uint64_t replicate) {
  if (T == 0) throw std::invalid_argument("simulate: T must be >= 1");
  if (plan.horizon() < T) throw std::invalid_argument("simulate: plan horizon < T");
  const GridSpec& grid = spec.grid();
  RngStream noise(seed, make_stream(replicate, stream_channel::kNoise));
  std::vector<std::size_t> s_path(T);
  for (std::size_t t = 0; t < T; ++t) s_path[t] = noise.sample_index_at(t, grid.s_probs());
  return simulate_with_noise(spec, plan, y0, s_path, seed, replicate);
}

Trajectory simulate_with_noise(const SystemSpec& spec, const ControlPlan& plan, std::size_t y0,
                               const std::vector<std::size_t>& s_path, std::uint64_t seed,
                               std::uint64_t replicate) {
  const GridSpec& grid = spec.grid();
  const std::size_t T = s_path.size();
  if (T == 0) throw std::invalid_argument("simulate: T must be >= 1");
  if (plan.horizon() < T) throw std::invalid_argument("simulate: plan horizon < T");
  if (y0 >= grid.n_y()) throw std::invalid_argument("simulate: y0 out of range");

  RngStream policy(seed, make_stream(replicate, stream_channel::kPolicy));
  Trajectory traj;
  traj.seed = seed;
  traj.y_path.resize(T + 1);
  traj.u_path.resize(T);
  traj.s_path = s_path;
  traj.y_path[0] = y0;
  std::vector<std::size_t> history;
  history.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double draw = policy.uniform_at(t);
    const std::size_t u = plan.decide(t, traj.y_path[t], history, draw);
    if (u >= grid.n_u()) throw std::invalid_argument("simulate: plan returned bad control");
    traj.u_path[t] = u;
    traj.y_path[t + 1] = spec.step(traj.y_path[t], u, s_path[t]);
    history.push_back(s_path[t]);
  }
  return traj;
}

bool replay_consistent(const SystemSpec& spec, const Trajectory& traj) {
  for (std::size_t t = 0; t < traj.horizon(); ++t)
    if (spec.step(traj.y_path[t], traj.u_path[t], traj.s_path[t]) != traj.y_path[t + 1])
      return false;
  return true;
}

OccMeasure random_occupation(const Trajectory& traj, const GridSpec& grid) {
  std::vector<double> w(grid.n_cells(), 0.0);
  const std::size_t T = traj.horizon();
  if (T == 0) throw std::invalid_argument("random_occupation: empty trajectory");
  const double inc = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (traj.y_path[t] >= grid.n_y() || traj.u_path[t] >= grid.n_u())
      throw std::invalid_argument("random_occupation: trajectory inconsistent with grid");
    w[grid.cell_index(traj.y_path[t], traj.u_path[t])] += inc;
  }
  return OccMeasure(std::move(w), MeasureKind::empirical_random);
}

ExpectedOccupation expected_occupation(const SystemSpec& spec, const ControlPlan& plan,
                                       std::size_t y0, std::size_t T, std::size_t replicates,
                                       std::uint64_t seed) {
  if (replicates == 0) throw std::invalid_argument("expected_occupation: replicates must be >= 1");
  const std::size_t cells = spec.grid().n_cells();

  struct Acc {
    std::vector<double> sum, sumsq;
  };
  Acc total = par::blocked_reduce<Acc>(
      replicates,
      [cells] { return Acc{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0)}; },
      [&](Acc& acc, std::size_t r) {
        Trajectory traj = simulate(spec, plan, y0, T, seed, r);
        OccMeasure occ = random_occupation(traj, spec.grid());
        for (std::size_t c = 0; c < cells; ++c) {
          const double w = occ.weight(c);
          acc.sum[c] += w;
          acc.sumsq[c] += w * w;
        }
      },
      [cells](Acc& a, const Acc& b) {
        for (std::size_t c = 0; c < cells; ++c) {
          a.sum[c] += b.sum[c];
          a.sumsq[c] += b.sumsq[c];
        }
      });

  const double R = static_cast<double>(replicates);
  std::vector<double> mean(cells), se(cells, 0.0);
  double mass = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    mean[c] = total.sum[c] / R;
    mass += mean[c];
    if (replicates > 1) {
      const double var = std::max(0.0, (total.sumsq[c] - R * mean[c] * mean[c]) / (R - 1.0));
      se[c] = std::sqrt(var / R);
    }
  }
  // Renormalize away the last-bit float drift so mass is exactly 1.
  for (double& w : mean) w /= mass;
  return ExpectedOccupation{OccMeasure(std::move(mean), MeasureKind::expectation), std::move(se)};
}

OccMeasure exact_expected_occupation(const SystemSpec& spec, const ControlPlan& plan,
                                     std::size_t y0, std::size_t T) {
  if (plan.randomized())
    throw std::invalid_argument("exact_expected_occupation: deterministic plans only");
  const GridSpec& grid = spec.grid();
  double branches = std::pow(static_cast<double>(grid.n_s()), static_cast<double>(T));
  if (branches > 1e6)
    throw std::runtime_error("exact_expected_occupation: |S|^T exceeds the 1e6 guard");

  std::vector<double> acc(grid.n_cells(), 0.0);
  std::vector<std::size_t> s_path(T, 0);
  const std::size_t ns = grid.n_s();
  bool done = false;
  while (!done) {
    double prob = 1.0;
    for (std::size_t t = 0; t < T; ++t) prob *= grid.s_prob(s_path[t]);
    Trajectory traj = simulate_with_noise(spec, plan, y0, s_path);
    OccMeasure occ = random_occupation(traj, grid);
    for (std::size_t c = 0; c < grid.n_cells(); ++c) acc[c] += prob * occ.weight(c);
    // next noise sequence, lexicographic
    done = true;
    for (std::size_t t = T; t-- > 0;) {
      if (++s_path[t] < ns) {
        done = false;
        break;
      }
      s_path[t] = 0;
    }
  }
  double mass = 0.0;
  for (double w : acc) mass += w;
  for (double& w : acc) w /= mass;
  return OccMeasure(std::move(acc), MeasureKind::expectation);
}

VarianceCheck telescoping_variance_check(const SystemSpec& spec, const ControlPlan& plan,
                                         std::size_t y0, std::size_t T,
                                         const std::function<double(const Point&)>& phi,
                                         std::size_t replicates, std::uint64_t seed) {
  if (replicates < 30)
    throw std::invalid_argument("telescoping_variance_check: need >= 30 replicates");
  const GridSpec& grid = spec.grid();

  std::vector<double> phi_of_y(grid.n_y());
  double phi_max = 0.0;
  for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
    phi_of_y[iy] = phi(grid.y_point(iy));
    phi_max = std::max(phi_max, std::abs(phi_of_y[iy]));
  }
  // psi(y,u) = E_s phi(step(y,u,s)), exact from the atoms
  std::vector<double> psi(grid.n_cells(), 0.0);
  for (std::size_t iy = 0; iy < grid.n_y(); ++iy)
    for (std::size_t iu = 0; iu < grid.n_u(); ++iu) {
      double v = 0.0;
      for (std::size_t is = 0; is < grid.n_s(); ++is)
        v += grid.s_prob(is) * phi_of_y[spec.step(iy, iu, is)];
      psi[grid.cell_index(iy, iu)] = v;
    }

  struct Acc {
    double sum = 0.0, sumsq = 0.0, sum4 = 0.0;
  };
  Acc total = par::blocked_reduce<Acc>(
      replicates, [] { return Acc{}; },
      [&](Acc& acc, std::size_t r) {
        Trajectory traj = simulate(spec, plan, y0, T, seed, r);
        double s = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          s += phi_of_y[traj.y_path[t + 1]] -
               psi[grid.cell_index(traj.y_path[t], traj.u_path[t])];
        }
        s /= static_cast<double>(T);
        acc.sum += s;
        acc.sumsq += s * s;
        acc.sum4 += s * s * s * s;
      },
      [](Acc& a, const Acc& b) {
        a.sum += b.sum;
        a.sumsq += b.sumsq;
        a.sum4 += b.sum4;
      });

  const double R = static_cast<double>(replicates);
  const double mean = total.sum / R;
  const double var = std::max(0.0, (total.sumsq - R * mean * mean) / (R - 1.0));
  const double mean_se = std::sqrt(var / R);
  // Standard error of the sample variance from the fourth moment.
  const double m2 = total.sumsq / R - mean * mean;
  const double m4 = total.sum4 / R;  // mean is near zero; this is adequate at desk scale
  const double var_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / R);

  return VarianceCheck{mean, var, 2.0 * phi_max * phi_max / static_cast<double>(T), mean_se,
                       var_se};
}

}  // namespace occmeas
