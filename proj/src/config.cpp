#include "occmeas/config.hpp"

#include <fstream>
#include <sstream>

#include "occmeas/csv.hpp"
#include "occmeas/errors.hpp"

namespace occmeas {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::size_t to_size(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (x < 0 || pos != v.size()) throw std::out_of_range("bad");
    return static_cast<std::size_t>(x);
  } catch (...) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::out_of_range("bad");
    return x;
  } catch (...) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_size(item, "list entry"));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, "list entry"));
  }
  return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("config: malformed section at line " +
                                             std::to_string(lineno));
      section = t.substr(1, t.size() - 2);
      if (section != "experiment" && section != "grid" && section != "basis" &&
          section != "loms" && section != "happrox" && section != "hybrid" &&
          section != "f0" && section != "synthesis" && section != "custom")
        throw ConfigError("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (qual == "experiment.instance") cfg.instance = value;
    else if (qual == "experiment.seed") cfg.seed = to_size(value, qual);
    else if (qual == "experiment.out_dir") cfg.out_dir = value;
    else if (qual == "experiment.threads") cfg.threads = static_cast<int>(to_size(value, qual));
    else if (qual == "grid.n_y") cfg.n_y = to_size(value, qual);
    else if (qual == "basis.J") cfg.basis_J = to_size(value, qual);
    else if (qual == "basis.seed") cfg.basis_seed = to_size(value, qual);
    else if (qual == "loms.horizons") cfg.loms_horizons = parse_size_list(value);
    else if (qual == "loms.plans") cfg.loms_plans = to_size(value, qual);
    else if (qual == "loms.replicates") cfg.loms_replicates = to_size(value, qual);
    else if (qual == "loms.directions") cfg.loms_directions = to_size(value, qual);
    else if (qual == "loms.w_vertices") cfg.loms_w_vertices = to_size(value, qual);
    else if (qual == "happrox.j") cfg.happrox_j = to_size(value, qual);
    else if (qual == "happrox.T_list") cfg.happrox_T = parse_size_list(value);
    else if (qual == "happrox.replicates") cfg.happrox_replicates = to_size(value, qual);
    else if (qual == "happrox.family") cfg.happrox_family = to_size(value, qual);
    else if (qual == "happrox.directions") cfg.happrox_directions = to_size(value, qual);
    else if (qual == "hybrid.epsilon_list") cfg.epsilon_list = parse_double_list(value);
    else if (qual == "hybrid.schedule") cfg.schedule = value;
    else if (qual == "hybrid.alpha") cfg.schedule_alpha = to_double(value, qual);
    else if (qual == "hybrid.delta") cfg.schedule_delta = to_double(value, qual);
    else if (qual == "hybrid.substeps") cfg.substeps = to_size(value, qual);
    else if (qual == "hybrid.replicates") cfg.hybrid_replicates = to_size(value, qual);
    else if (qual == "f0.lattice") cfg.f0_lattice = to_size(value, qual);
    else if (qual == "f0.refine") cfg.f0_refine = to_size(value, qual);
    else if (qual == "f0.directions") cfg.f0_directions = to_size(value, qual);
    else if (qual == "synthesis.burn_in") cfg.burn_in = to_size(value, qual);
    else if (qual == "synthesis.filler_u") cfg.filler_u = to_size(value, qual);
    else if (qual == "synthesis.nu_g_replicates") cfg.nu_g_replicates = to_size(value, qual);
    else if (qual == "custom.y_points") cfg.custom_y_points = value;
    else if (qual == "custom.u_points") cfg.custom_u_points = value;
    else if (qual == "custom.s_values") cfg.custom_s_values = value;
    else if (qual == "custom.s_probs") cfg.custom_s_probs = value;
    else if (qual == "custom.step_table") cfg.custom_step_table = value;
    else throw ConfigError("config: unknown key '" + qual + "'");
  }

  if (cfg.instance != "linear-benchmark" && cfg.instance != "two-state-mdp" &&
      cfg.instance != "disconnected-chain" && cfg.instance != "custom")
    throw ConfigError("config: unknown instance '" + cfg.instance + "'");
  if (cfg.schedule != "sqrt" && cfg.schedule != "power" && cfg.schedule != "custom")
    throw ConfigError("config: unknown schedule '" + cfg.schedule + "'");
  if (cfg.basis_J == 0) throw ConfigError("config: basis.J must be >= 1");
  if (cfg.n_y < 2) throw ConfigError("config: grid.n_y must be >= 2");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "[experiment]\n"
      << "instance = " << instance << "\nseed = " << seed << "\nout_dir = " << out_dir
      << "\nthreads = " << threads << "\n[grid]\nn_y = " << n_y
      << "\n[basis]\nJ = " << basis_J << "\nseed = " << basis_seed << "\n[loms]\nhorizons = ";
  for (std::size_t i = 0; i < loms_horizons.size(); ++i)
    out << (i ? "," : "") << loms_horizons[i];
  out << "\nplans = " << loms_plans << "\nreplicates = " << loms_replicates
      << "\ndirections = " << loms_directions << "\nw_vertices = " << loms_w_vertices
      << "\n[happrox]\nj = " << happrox_j << "\nT_list = ";
  for (std::size_t i = 0; i < happrox_T.size(); ++i) out << (i ? "," : "") << happrox_T[i];
  out << "\nreplicates = " << happrox_replicates << "\nfamily = " << happrox_family
      << "\ndirections = " << happrox_directions << "\n[hybrid]\nepsilon_list = ";
  for (std::size_t i = 0; i < epsilon_list.size(); ++i)
    out << (i ? "," : "") << format_double(epsilon_list[i]);
  out << "\nschedule = " << schedule << "\nalpha = " << format_double(schedule_alpha)
      << "\ndelta = " << format_double(schedule_delta) << "\nsubsteps = " << substeps
      << "\nreplicates = " << hybrid_replicates << "\n[f0]\nlattice = " << f0_lattice
      << "\nrefine = " << f0_refine << "\ndirections = " << f0_directions
      << "\n[synthesis]\nburn_in = " << burn_in << "\nfiller_u = " << filler_u
      << "\nnu_g_replicates = " << nu_g_replicates << "\n";
  if (instance == "custom") {
    out << "[custom]\ny_points = " << custom_y_points << "\nu_points = " << custom_u_points
        << "\ns_values = " << custom_s_values << "\ns_probs = " << custom_s_probs
        << "\nstep_table = " << custom_step_table << "\n";
  }
  return out.str();
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string text = canonical();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace occmeas
