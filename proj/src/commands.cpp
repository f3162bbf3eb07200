#include "occmeas/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "occmeas/csv.hpp"
#include "occmeas/errors.hpp"
#include "occmeas/happrox.hpp"
#include "occmeas/instances.hpp"
#include "occmeas/parallel.hpp"
#include "occmeas/rng.hpp"
#include "occmeas/report.hpp"
#include "occmeas/synthesis.hpp"

namespace occmeas {

namespace {

DeltaSchedule schedule_from(const ExperimentConfig& cfg) {
  DeltaSchedule s;
  if (cfg.schedule == "sqrt") s.kind = DeltaScheduleKind::sqrt_eps;
  else if (cfg.schedule == "power") {
    s.kind = DeltaScheduleKind::power;
    s.alpha = cfg.schedule_alpha;
  } else {
    s.kind = DeltaScheduleKind::custom;
    s.custom_delta = cfg.schedule_delta;
  }
  return s;
}

std::string join(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  const double den = static_cast<double>(n) * sxx - sx * sx;
  return den != 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / den : 0.0;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

void cmd_compute_w(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  Timer timer;
  Instance inst = make_instance(cfg);
  RecordSink sink(inst.id, cfg.seed, cfg.hash());

  TransitionKernel kernel = build_kernel(inst.system);
  MeasurePolytope poly = stationary_polytope(kernel);

  write_text_atomic(out / "w_constraints.txt", poly.export_lp());
  sink.add("w_cells", static_cast<double>(poly.n_cells()));
  sink.add("w_rows", static_cast<double>(poly.n_rows()));

  if (poly.vertices()) {
    CsvWriter csv({"vertex", "cell_y_index", "cell_u_index", "weight"});
    const GridSpec& g = inst.system.grid();
    for (std::size_t v = 0; v < poly.vertices()->size(); ++v)
      for (std::size_t c = 0; c < poly.n_cells(); ++c)
        csv.row({csv_cell(v), csv_cell(g.cell_y(c)), csv_cell(g.cell_u(c)),
                 csv_cell((*poly.vertices())[v][c])});
    csv.write_file(out / "w_vertices.csv");
    sink.add("w_vertex_count", static_cast<double>(poly.vertices()->size()));
  }

  // audit log of a seeded support sweep
  RngStream rng(cfg.seed, make_stream(0, stream_channel::kDirections));
  CsvWriter sweep({"direction", "value", "basis"});
  for (std::size_t k = 0; k < 64; ++k) {
    std::vector<double> c(poly.n_cells());
    for (double& x : c) x = rng.uniform(-1.0, 1.0);
    SupportResult s = support(poly, c);
    std::string basis;
    for (std::size_t i = 0; i < s.basis.size(); ++i) {
      if (i) basis += ';';
      basis += std::to_string(s.basis[i]);
    }
    sweep.row({join(c), csv_cell(s.value), basis});
  }
  sweep.write_file(out / "w_support_sweep.csv");
  sink.write(out / "records.csv", timer.seconds());
}

void cmd_loms(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  Timer timer;
  if (cfg.loms_replicates < 1) throw StatGuardError("loms: replicates must be >= 1");
  if (cfg.loms_horizons.empty()) throw ConfigError("loms: empty horizon list");
  Instance inst = make_instance(cfg);
  RecordSink sink(inst.id, cfg.seed, cfg.hash());

  MetricBasis basis = build_metric_basis(inst.system.grid(), cfg.basis_J, cfg.basis_seed);
  MeasurePolytope poly = stationary_polytope(build_kernel(inst.system));

  LomsOptions opt;
  opt.n_plans = cfg.loms_plans;
  opt.replicates = cfg.loms_replicates;
  opt.directions = cfg.loms_directions;
  opt.w_vertex_sample = cfg.loms_w_vertices;
  opt.linear_contraction = inst.linear_contraction;

  ConvergenceReport report =
      loms_report(inst.system, basis, poly, inst.default_y0, cfg.loms_horizons, cfg.seed, opt);

  write_text_atomic(out / "loms_report.csv", report.to_csv());
  std::ostringstream summary;
  summary << report.summary();
  summary << "rho_truncation_floor = " << format_double(std::pow(2.0, 1.0 - static_cast<double>(cfg.basis_J)))
          << "\n";
  write_text_atomic(out / "loms_summary.txt", summary.str());

  for (const auto& row : report.rows)
    sink.add(row.metric, row.estimate, row.stderr_, "T=" + std::to_string(row.T));
  for (const auto& [metric, slope] : report.slopes) sink.add("slope_" + metric, slope);
  sink.write(out / "records.csv", timer.seconds());
}

void cmd_happrox(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  Timer timer;
  if (cfg.happrox_replicates < 30) throw StatGuardError("happrox: need >= 30 replicates");
  Instance inst = make_instance(cfg);
  RecordSink sink(inst.id, cfg.seed, cfg.hash());

  const std::size_t J = std::max(cfg.basis_J, cfg.happrox_j);
  MetricBasis basis = build_metric_basis(inst.system.grid(), J, cfg.basis_seed);
  TestVector h = TestVector::from_basis_prefix(basis, cfg.happrox_j, /*weighted=*/false);
  const auto dirs = make_directions(cfg.happrox_j, cfg.happrox_directions, cfg.seed);

  CsvWriter csv({"T", "nu_weak", "nu_strong", "nu_strong_stderr", "example3_bound"});
  std::vector<double> weak_values;
  for (std::size_t T : cfg.happrox_T) {
    const double weak = weak_nu_estimate(inst.system, h, T, inst.y0_pairs, dirs);
    StrongNuOptions sopt;
    sopt.family_size = cfg.happrox_family;
    StrongNuResult strong = strong_nu_estimate(inst.system, h, T, inst.y0_pairs,
                                               cfg.happrox_replicates, cfg.seed, sopt);
    double bound = 0.0;
    if (inst.linear_contraction)
      bound = h.lipschitz_y * inst.system.grid().y_diameter() /
              (static_cast<double>(T) * (1.0 - *inst.linear_contraction));
    csv.row({csv_cell(T), csv_cell(weak), csv_cell(strong.value), csv_cell(strong.stderr_),
             csv_cell(bound)});
    sink.add("nu_weak", weak, 0.0, "T=" + std::to_string(T));
    sink.add("nu_strong", strong.value, strong.stderr_, "T=" + std::to_string(T));
    if (bound > 0) sink.add("example3_bound", bound, 0.0, "T=" + std::to_string(T));
    weak_values.push_back(weak);
  }
  csv.write_file(out / "nu_table.csv");

  std::ostringstream summary;
  summary << "h-approximation estimates over T:";
  for (std::size_t T : cfg.happrox_T) summary << ' ' << T;
  summary << "\n";
  const bool vanishing =
      weak_values.back() <= 0.5 * weak_values.front() || weak_values.back() < 1e-9;
  summary << "nu_weak_vanishing = " << (vanishing ? "yes" : "no") << "\n";
  if (!vanishing)
    summary << "flag: weak nu does not decay over the tested horizons; the instance appears "
               "to violate the h-approximation conditions (disconnected control structure).\n";
  write_text_atomic(out / "nu_summary.txt", summary.str());
  sink.add("nu_weak_vanishing", vanishing ? 1.0 : 0.0);
  sink.write(out / "records.csv", timer.seconds());
}

namespace {

struct AveragingOutcome {
  double epsilon = 0.0;
  double f0 = 0.0;
  double f0_refine_delta = 0.0;
  double tracking_max = 0.0;
  double tracking_stderr = 0.0;
  double expected_cost = 0.0;
  double cost_stderr = 0.0;
  double gap = 0.0;
  double f_eps_upper = 0.0;
};

AveragingOutcome run_averaging_once(const Instance& inst, const ExperimentConfig& cfg,
                                    double eps, const std::filesystem::path& out,
                                    std::size_t idx, RecordSink& sink) {
  const GridSpec& grid = inst.system.grid();
  if (!inst.make_hybrid)
    throw ConfigError("averaging: instance '" + inst.id + "' has no hybrid layer");
  HybridSpec hspec = inst.make_hybrid(eps, grid);
  TimeGrid tgrid = make_time_grid(eps, schedule_from(cfg));

  MeasurePolytope poly = stationary_polytope(build_kernel(inst.system));
  VelocityOracle oracle(std::move(poly), hspec.g(), grid, hspec.z_box(), hspec.lipschitz_C(),
                        hspec.bound_M());

  F0Options fopt;
  fopt.lattice = cfg.f0_lattice;
  fopt.refine_lattice = cfg.f0_refine;
  fopt.directions = cfg.f0_directions;
  fopt.seed = cfg.seed;
  if (oracle.dim() > 2) fopt.method = F0Method::extreme_point_search;
  F0Result f0 = optimize_F0(oracle, tgrid, hspec.G(), hspec.z0(), fopt);

  const std::string tag = "eps" + std::to_string(idx);
  write_text_atomic(out / ("inclusion_" + tag + ".csv"), f0.solution.to_csv());

  SynthesisConfig scfg;
  scfg.burn_in = cfg.burn_in;
  scfg.filler_u = cfg.filler_u;
  scfg.nu_g_replicates = cfg.nu_g_replicates;
  SynthesizedPlan plan =
      assemble_plan(f0.solution, oracle, inst.system, tgrid, scfg, inst.default_y0, cfg.seed);
  write_text_atomic(out / ("plan_" + tag + ".txt"), plan.plan.serialize());
  write_text_atomic(out / ("plan_provenance_" + tag + ".csv"), plan.provenance_csv());

  TrackingReport tracking = verify_tracking(hspec, inst.system, plan.plan, f0.solution,
                                            inst.default_y0, cfg.hybrid_replicates, cfg.seed);
  {
    CsvWriter csv({"s", "mean_error"});
    for (std::size_t k = 0; k < tracking.mesh.size(); ++k)
      csv.row({csv_cell(tracking.mesh[k]), csv_cell(tracking.mean_error[k])});
    csv.write_file(out / ("tracking_" + tag + ".csv"));
  }

  GapReport gap = optimality_gap(hspec, inst.system, plan.plan, f0.value, inst.default_y0,
                                 cfg.hybrid_replicates, cfg.seed);

  // baseline family plus the synthesized plan: empirical upper bound of F^eps
  const auto horizon = static_cast<std::size_t>(std::floor(1.0 / eps)) + 1;
  std::vector<ControlPlan> family = sample_plan_family(grid, 8, horizon, cfg.seed);
  family.push_back(plan.plan);
  FEpsEstimate feps =
      estimate_F_eps(hspec, inst.system, family, inst.default_y0, cfg.hybrid_replicates,
                     cfg.seed);

  {
    CsvWriter csv({"plan", "value", "stderr"});
    for (std::size_t pi = 0; pi < family.size(); ++pi)
      csv.row({pi + 1 == family.size() ? std::string("synthesized") : std::to_string(pi),
               csv_cell(feps.values[pi]), csv_cell(feps.stderrs[pi])});
    csv.write_file(out / ("f_eps_" + tag + ".csv"));
  }

  AveragingOutcome o;
  o.epsilon = eps;
  o.f0 = f0.value;
  o.f0_refine_delta = f0.refinement_delta;
  o.tracking_max = tracking.max_error;
  o.tracking_stderr = tracking.stderr_at_max;
  o.expected_cost = gap.expected_cost;
  o.cost_stderr = gap.cost_stderr;
  o.gap = gap.gap;
  o.f_eps_upper = feps.best_value;

  const std::string params = "eps=" + format_double(eps);
  sink.add("F0", o.f0, 0.0, params);
  sink.add("F0_refine_delta", o.f0_refine_delta, 0.0, params);
  sink.add("tracking_max", o.tracking_max, o.tracking_stderr, params);
  sink.add("expected_cost", o.expected_cost, o.cost_stderr, params);
  sink.add("gap", o.gap, o.cost_stderr, params);
  sink.add("F_eps_upper", o.f_eps_upper, 0.0, params);
  return o;
}

}  // namespace

void cmd_averaging(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  Timer timer;
  if (cfg.hybrid_replicates < 30) throw StatGuardError("averaging: need >= 30 replicates");
  if (cfg.epsilon_list.empty()) throw ConfigError("averaging: empty epsilon list");
  Instance inst = make_instance(cfg);
  RecordSink sink(inst.id, cfg.seed, cfg.hash());

  try {
    for (std::size_t i = 0; i < cfg.epsilon_list.size(); ++i)
      run_averaging_once(inst, cfg, cfg.epsilon_list[i], out, i, sink);
  } catch (const ModelViolation& e) {
    write_text_atomic(out / "model_violation_dump.txt", e.dump);
    throw;
  }
  sink.write(out / "records.csv", timer.seconds());
}

void cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  Timer timer;
  if (cfg.hybrid_replicates < 30) throw StatGuardError("sweep: need >= 30 replicates");
  if (cfg.epsilon_list.empty()) throw ConfigError("sweep: empty epsilon list");
  Instance inst = make_instance(cfg);
  RecordSink sink(inst.id, cfg.seed, cfg.hash());

  std::vector<AveragingOutcome> outcomes;
  for (std::size_t i = 0; i < cfg.epsilon_list.size(); ++i) {
    const std::filesystem::path part =
        out / ("sweep_part_" + std::to_string(cfg.hash()) + "_" + std::to_string(i) + ".csv");
    AveragingOutcome o;
    bool reused = false;
    if (std::filesystem::exists(part)) {
      // completed records are reusable by config hash (hash is in the name)
      std::ifstream in(part);
      std::string line;
      std::getline(in, line);  // header
      std::vector<double> vals;
      while (std::getline(in, line)) {
        const auto comma = line.rfind(',');
        if (comma != std::string::npos) vals.push_back(std::stod(line.substr(comma + 1)));
      }
      if (vals.size() == 9) {
        o.epsilon = vals[0];
        o.f0 = vals[1];
        o.f0_refine_delta = vals[2];
        o.tracking_max = vals[3];
        o.tracking_stderr = vals[4];
        o.expected_cost = vals[5];
        o.cost_stderr = vals[6];
        o.gap = vals[7];
        o.f_eps_upper = vals[8];
        reused = true;
        const std::string params = "eps=" + format_double(o.epsilon);
        sink.add("F0", o.f0, 0.0, params);
        sink.add("tracking_max", o.tracking_max, o.tracking_stderr, params);
        sink.add("gap", o.gap, o.cost_stderr, params);
      }
    }
    if (!reused) {
      o = run_averaging_once(inst, cfg, cfg.epsilon_list[i], out, i, sink);
      CsvWriter csv({"metric", "value"});
      csv.row({"epsilon", csv_cell(o.epsilon)});
      csv.row({"F0", csv_cell(o.f0)});
      csv.row({"F0_refine_delta", csv_cell(o.f0_refine_delta)});
      csv.row({"tracking_max", csv_cell(o.tracking_max)});
      csv.row({"tracking_stderr", csv_cell(o.tracking_stderr)});
      csv.row({"expected_cost", csv_cell(o.expected_cost)});
      csv.row({"cost_stderr", csv_cell(o.cost_stderr)});
      csv.row({"gap", csv_cell(o.gap)});
      csv.row({"F_eps_upper", csv_cell(o.f_eps_upper)});
      csv.write_file(part);
    }
    outcomes.push_back(o);
  }

  CsvWriter rates({"epsilon", "delta", "F0", "tracking_max", "tracking_stderr", "gap",
                   "F_eps_upper"});
  std::vector<double> eps_list, tracking, gaps;
  for (const auto& o : outcomes) {
    const double delta = schedule_from(cfg).delta(o.epsilon);
    rates.row({csv_cell(o.epsilon), csv_cell(delta), csv_cell(o.f0), csv_cell(o.tracking_max),
               csv_cell(o.tracking_stderr), csv_cell(o.gap), csv_cell(o.f_eps_upper)});
    eps_list.push_back(o.epsilon);
    tracking.push_back(o.tracking_max);
    gaps.push_back(std::abs(o.gap));
  }
  if (outcomes.size() >= 2) {
    sink.add("tracking_rate_slope", fit_slope(eps_list, tracking));
    sink.add("gap_rate_slope", fit_slope(eps_list, gaps));
  }
  rates.write_file(out / "sweep_rates.csv");
  sink.write(out / "records.csv", timer.seconds());
}

int run_command(const std::string& verb, const ExperimentConfig& cfg,
                const std::filesystem::path& out, std::string* error_message) {
  try {
    std::filesystem::create_directories(out);
    par::set_max_threads(cfg.threads);
    if (verb == "compute-w") cmd_compute_w(cfg, out);
    else if (verb == "loms") cmd_loms(cfg, out);
    else if (verb == "happrox") cmd_happrox(cfg, out);
    else if (verb == "averaging") cmd_averaging(cfg, out);
    else if (verb == "sweep") cmd_sweep(cfg, out);
    else throw ConfigError("unknown command: " + verb);
    return 0;
  } catch (const ConfigError& e) {
    if (error_message) *error_message = e.what();
    return 2;
  } catch (const StatGuardError& e) {
    if (error_message) *error_message = e.what();
    return 3;
  } catch (const ModelViolation& e) {
    if (error_message) *error_message = e.what();
    return 4;
  } catch (const std::invalid_argument& e) {
    if (error_message) *error_message = e.what();
    return 2;
  } catch (const std::exception& e) {
    if (error_message) *error_message = e.what();
    return 5;
  }
}

}  // namespace occmeas
