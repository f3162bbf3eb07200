#include "occmeas/instances.hpp"

#include <sstream>

#include "occmeas/errors.hpp"

namespace occmeas {

namespace {

Instance linear_benchmark(std::size_t n_y) {
  std::vector<Point> y;
  for (std::size_t i = 0; i < n_y; ++i)
    y.push_back({static_cast<double>(i) / static_cast<double>(n_y - 1)});
  GridSpec grid(std::move(y), {{0.0}, {1.0}}, {{0.0}, {1.0}}, {0.5, 0.5});
  SystemSpec system(std::move(grid), [](const Point& yy, const Point& uu, const Point& ss) {
    return Point{0.5 * yy[0] + 0.25 * uu[0] + 0.25 * ss[0]};
  });

  Instance inst{
      "linear-benchmark",
      std::move(system),
      {},
      {},
      0,
      0.5,
  };
  // pairs at half-diameter: the Example-3 bound uses the full diameter, the
  // leftover factor absorbs the grid-projection wobble of the coupled paths
  const std::size_t q = (n_y - 1) / 4;
  inst.y0_pairs = {{0, 2 * q}, {q, 3 * q}, {2 * q, n_y - 1}};
  inst.make_hybrid = [](double eps, const GridSpec& g) {
    return HybridSpec(
        [](std::span<const double> z, const Point& yy, const Point& uu) {
          return std::vector<double>{-z[0] + yy[0] * uu[0]};
        },
        [](std::span<const double> z) { return (z[0] - 0.4) * (z[0] - 0.4); },
        {0.9}, eps, 1.0, 1.7, 1.8, {{-0.3, 1.3}}, g);
  };
  return inst;
}

Instance two_state_mdp() {
  GridSpec grid({{0.0}, {1.0}}, {{0.0}, {1.0}}, {{0.0}, {1.0}}, {0.3, 0.7});
  std::vector<std::size_t> table = {
      0, 1,  // (y0,a0)
      1, 0,  // (y0,a1)
      1, 0,  // (y1,a0)
      0, 1,  // (y1,a1)
  };
  Instance inst{"two-state-mdp", SystemSpec(std::move(grid), std::move(table)), {}, {{0, 1}},
                0,               std::nullopt};
  return inst;
}

Instance disconnected_chain() {
  GridSpec grid({{0.0}, {1.0}}, {{0.0}, {1.0}}, {{0.0}}, {1.0});
  std::vector<std::size_t> table = {0, 0, 1, 1};  // both states absorbing
  Instance inst{"disconnected-chain", SystemSpec(std::move(grid), std::move(table)), {},
                {{0, 1}},             0,
                std::nullopt};
  return inst;
}

std::vector<Point> parse_points(const std::string& text, const std::string& key) {
  // points separated by ';', coordinates by spaces
  std::vector<Point> pts;
  std::stringstream ss(text);
  std::string chunk;
  while (std::getline(ss, chunk, ';')) {
    Point p;
    std::stringstream cs(chunk);
    double x;
    while (cs >> x) p.push_back(x);
    if (!p.empty()) pts.push_back(std::move(p));
  }
  if (pts.empty()) throw ConfigError("config: [custom] " + key + " is empty");
  return pts;
}

Instance custom_instance(const ExperimentConfig& cfg) {
  auto y = parse_points(cfg.custom_y_points, "y_points");
  auto u = parse_points(cfg.custom_u_points, "u_points");
  auto s = parse_points(cfg.custom_s_values, "s_values");
  std::vector<double> probs = parse_double_list(cfg.custom_s_probs);
  std::vector<std::size_t> table;
  {
    std::stringstream ts(cfg.custom_step_table);
    std::size_t v;
    while (ts >> v) table.push_back(v);
  }
  const std::size_t expect = y.size() * u.size() * s.size();
  if (table.size() != expect)
    throw ConfigError("config: [custom] step_table needs " + std::to_string(expect) +
                      " entries (y-major, then u, then s)");
  GridSpec grid(std::move(y), std::move(u), std::move(s), std::move(probs));
  Instance inst{"custom", SystemSpec(std::move(grid), std::move(table)), {}, {}, 0,
                std::nullopt};
  const std::size_t ny = inst.system.grid().n_y();
  inst.y0_pairs = {{0, ny - 1}};
  return inst;
}

}  // namespace

Instance make_instance(const ExperimentConfig& cfg) {
  if (cfg.instance == "linear-benchmark") return linear_benchmark(cfg.n_y);
  if (cfg.instance == "two-state-mdp") return two_state_mdp();
  if (cfg.instance == "disconnected-chain") return disconnected_chain();
  if (cfg.instance == "custom") return custom_instance(cfg);
  throw ConfigError("make_instance: unknown instance " + cfg.instance);
}

}  // namespace occmeas
