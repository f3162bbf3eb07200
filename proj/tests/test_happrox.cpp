#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "occmeas/happrox.hpp"
#include "occmeas/rng.hpp"

using namespace occmeas;

namespace {

SystemSpec linear_system(std::size_t ny) {
  std::vector<Point> y;
  for (std::size_t i = 0; i < ny; ++i)
    y.push_back({static_cast<double>(i) / static_cast<double>(ny - 1)});
  GridSpec grid(std::move(y), {{0.0}, {1.0}}, {{0.0}, {1.0}}, {0.5, 0.5});
  return SystemSpec(std::move(grid), [](const Point& yy, const Point& uu, const Point& ss) {
    return Point{0.5 * yy[0] + 0.25 * uu[0] + 0.25 * ss[0]};
  });
}

// Exact sup over ALL history-dependent plans of E[(1/T) sum p.h] by brute
// force: one decision per (t, noise history) slot, all assignments, exact
// expectation over every noise sequence.
double enumerate_plans_psi(const SystemSpec& spec, const TestVector& h,
                           std::span<const double> p, std::size_t T, std::size_t y0) {
  const GridSpec& g = spec.grid();
  const std::size_t nu = g.n_u(), ns = g.n_s();
  std::vector<std::size_t> offset(T + 1, 0);
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t hists = 1;
    for (std::size_t k = 0; k < t; ++k) hists *= ns;
    offset[t + 1] = offset[t] + hists;
  }
  const std::size_t slots = offset[T];
  std::vector<double> reward(g.n_cells(), 0.0);
  for (std::size_t k = 0; k < h.dim(); ++k)
    for (std::size_t c = 0; c < g.n_cells(); ++c) reward[c] += p[k] * h.components[k][c];

  std::vector<std::size_t> assign(slots, 0);
  double best = -1e300;
  while (true) {
    // expectation over all noise sequences for this assignment
    double value = 0.0;
    std::vector<std::size_t> s_path(T, 0);
    while (true) {
      double prob = 1.0;
      std::size_t y = y0, hist = 0;
      double acc = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t u = assign[offset[t] + hist];
        acc += reward[g.cell_index(y, u)];
        y = spec.step(y, u, s_path[t]);
        prob *= g.s_prob(s_path[t]);
        hist = hist * ns + s_path[t];
      }
      value += prob * acc / static_cast<double>(T);
      std::size_t t = T;
      bool carried = false;
      while (t-- > 0) {
        if (++s_path[t] < ns) {
          carried = true;
          break;
        }
        s_path[t] = 0;
      }
      if (!carried) break;
    }
    best = std::max(best, value);
    std::size_t i = slots;
    bool carried = false;
    while (i-- > 0) {
      if (++assign[i] < nu) {
        carried = true;
        break;
      }
      assign[i] = 0;
    }
    if (!carried) break;
  }
  return best;
}

SystemSpec random_tiny_system(std::size_t ny, std::size_t nu, std::size_t ns, RngStream& rng) {
  std::vector<Point> y, u, s;
  for (std::size_t i = 0; i < ny; ++i) y.push_back({static_cast<double>(i)});
  for (std::size_t i = 0; i < nu; ++i) u.push_back({static_cast<double>(i)});
  std::vector<double> probs;
  double mass = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    s.push_back({static_cast<double>(i)});
    probs.push_back(rng.uniform() + 0.2);
    mass += probs.back();
  }
  for (double& q : probs) q /= mass;
  GridSpec grid(std::move(y), std::move(u), std::move(s), std::move(probs));
  std::vector<std::size_t> table(ny * nu * ns);
  for (auto& v : table) v = static_cast<std::size_t>(rng.uniform() * ny) % ny;
  return SystemSpec(std::move(grid), std::move(table));
}

TestVector random_test_vector(const GridSpec& grid, std::size_t j, RngStream& rng) {
  std::vector<std::vector<double>> rows(j, std::vector<double>(grid.n_cells()));
  for (auto& row : rows)
    for (double& v : row) v = rng.uniform(-1.0, 1.0);
  return TestVector::from_rows(std::move(rows), grid);
}

}  // namespace

TEST_CASE("psi_h_dp: T = 1 closed form and zero direction") {
  SystemSpec sys = linear_system(5);
  MetricBasis basis = build_metric_basis(sys.grid(), 3, 7);
  TestVector h = TestVector::from_basis_prefix(basis, 3, false);

  std::vector<double> p{0.4, -0.9, 0.2};
  double expect = -1e300;
  for (std::size_t u = 0; u < 2; ++u) {
    const auto hv = h.at(sys.grid().cell_index(2, u));
    expect = std::max(expect, p[0] * hv[0] + p[1] * hv[1] + p[2] * hv[2]);
  }
  CHECK(psi_h_dp(sys, h, p, 1, 2) == doctest::Approx(expect).epsilon(1e-14));

  std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK(psi_h_dp(sys, h, zero, 5, 0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(psi_h_dp(sys, h, p, 0, 0), std::invalid_argument);
}

TEST_CASE("psi_h_dp equals exhaustive history-plan enumeration on tiny instances") {
  RngStream rng(3141, 0);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t ny = 2 + static_cast<std::size_t>(rng.uniform() * 2);  // 2..3
    const std::size_t nu = 2, ns = 2;
    SystemSpec sys = random_tiny_system(ny, nu, ns, rng);
    TestVector h = random_test_vector(sys.grid(), 2, rng);
    std::vector<double> p{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (std::size_t T = 1; T <= 3; ++T) {
      const double dp = psi_h_dp(sys, h, p, T, 0);
      const double brute = enumerate_plans_psi(sys, h, p, T, 0);
      CHECK(dp == doctest::Approx(brute).epsilon(1e-12));
    }
  }
  // one full-depth case at T = 4
  RngStream rng2(99, 0);
  SystemSpec sys = random_tiny_system(3, 2, 2, rng2);
  TestVector h = random_test_vector(sys.grid(), 2, rng2);
  std::vector<double> p{0.8, -0.5};
  CHECK(psi_h_dp(sys, h, p, 4, 1) ==
        doctest::Approx(enumerate_plans_psi(sys, h, p, 4, 1)).epsilon(1e-12));
}

TEST_CASE("psi_h_dp: homogeneity, c_h Lipschitz in p, horizon stitching") {
  SystemSpec sys = linear_system(9);
  MetricBasis basis = build_metric_basis(sys.grid(), 4, 13);
  TestVector h = TestVector::from_basis_prefix(basis, 4, false);
  RngStream rng(55, 0);

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(4), q(4);
    for (std::size_t k = 0; k < 4; ++k) {
      p[k] = rng.uniform(-1, 1);
      q[k] = rng.uniform(-1, 1);
    }
    const double alpha = 0.25 + 2.0 * rng.uniform();
    std::vector<double> ap(4);
    for (std::size_t k = 0; k < 4; ++k) ap[k] = alpha * p[k];

    CHECK(psi_h_dp(sys, h, ap, 7, 3) ==
          doctest::Approx(alpha * psi_h_dp(sys, h, p, 7, 3)).epsilon(1e-10));

    std::vector<double> diff(4);
    for (std::size_t k = 0; k < 4; ++k) diff[k] = p[k] - q[k];
    CHECK(std::abs(psi_h_dp(sys, h, p, 7, 3) - psi_h_dp(sys, h, q, 7, 3)) <=
          h.c_h * euclidean_norm(diff) + 1e-12);
  }

  // |Psi(p,T') - Psi(p,T'')| <= 2 c_h ||p|| |T'' - T'| / max(T', T'')
  for (const auto [t1, t2] : std::vector<std::pair<std::size_t, std::size_t>>{
           {3, 5}, {5, 20}, {10, 11}, {4, 16}}) {
    std::vector<double> p{0.3, -0.7, 0.5, 0.1};
    const double v1 = psi_h_dp(sys, h, p, t1, 0);
    const double v2 = psi_h_dp(sys, h, p, t2, 0);
    const double bound = 2.0 * h.c_h * euclidean_norm(p) *
                         std::abs(static_cast<double>(t2) - static_cast<double>(t1)) /
                         static_cast<double>(std::max(t1, t2));
    CHECK(std::abs(v1 - v2) <= bound + 1e-12);
  }
}

TEST_CASE("value_set_VhT: singleton for uncontrolled deterministic system, ball bound") {
  // one control, one atom: exactly one plan is feasible
  GridSpec grid({{0.0}, {1.0}, {2.0}}, {{0.0}}, {{0.0}}, {1.0});
  SystemSpec sys(std::move(grid), std::vector<std::size_t>{1, 2, 0});
  MetricBasis basis = build_metric_basis(sys.grid(), 2, 3);
  TestVector h = TestVector::from_basis_prefix(basis, 2, false);

  ValueSet vs = value_set_VhT(sys, h, 6, 0, make_directions(2, 16, 1));
  for (const auto& pt : vs.points) {
    CHECK(euclidean_distance(pt, vs.points[0]) <= 1e-12);
    CHECK(euclidean_norm(pt) <= h.c_h + 1e-12);
  }
}

TEST_CASE("value cloud hull equals enumerated plan hull on a tiny instance at T = 2") {
  RngStream rng(2718, 0);
  SystemSpec sys = random_tiny_system(2, 2, 2, rng);
  TestVector h = random_test_vector(sys.grid(), 2, rng);
  const auto dirs = make_directions(2, 32, 4);
  ValueSet cloud = value_set_VhT(sys, h, 2, 0, dirs);

  for (const auto& p : dirs) {
    const double cloud_support = point_cloud_support(cloud.points)(p);
    CHECK(cloud_support == doctest::Approx(enumerate_plans_psi(sys, h, p, 2, 0)).epsilon(1e-10));
  }
}

TEST_CASE("weak nu: identical pair vanishes; disconnected chain does not") {
  SystemSpec sys = linear_system(9);
  MetricBasis basis = build_metric_basis(sys.grid(), 3, 5);
  TestVector h = TestVector::from_basis_prefix(basis, 3, false);
  const auto dirs = make_directions(3, 32, 9);

  CHECK(weak_nu_estimate(sys, h, 10, {{4, 4}}, dirs) == doctest::Approx(0.0));
  CHECK_THROWS_AS(weak_nu_estimate(sys, h, 10, {}, dirs), std::invalid_argument);

  // two absorbing states: V_h(T, 0) and V_h(T, 1) stay apart as T grows
  GridSpec g2({{0.0}, {1.0}}, {{0.0}, {1.0}}, {{0.0}}, {1.0});
  SystemSpec split(std::move(g2), std::vector<std::size_t>{0, 0, 1, 1});
  MetricBasis b2 = build_metric_basis(split.grid(), 3, 5);
  TestVector h2 = TestVector::from_basis_prefix(b2, 3, false);
  const double nu10 = weak_nu_estimate(split, h2, 10, {{0, 1}}, dirs);
  const double nu80 = weak_nu_estimate(split, h2, 80, {{0, 1}}, dirs);
  CHECK(nu10 > 0.05);
  CHECK(nu80 > 0.05);
  CHECK(std::abs(nu80 - nu10) < 0.02);  // gap does not vanish
}

TEST_CASE("weak nu on the linear benchmark stays below the closed-form rate") {
  SystemSpec sys = linear_system(21);
  MetricBasis basis = build_metric_basis(sys.grid(), 3, 5);
  TestVector h = TestVector::from_basis_prefix(basis, 3, false);
  const auto dirs = make_directions(3, 32, 9);
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 10}, {5, 15}, {10, 20}};

  for (std::size_t T : {20u, 80u}) {
    const double nu_hat = weak_nu_estimate(sys, h, T, pairs, dirs);
    const double bound =
        h.lipschitz_y * sys.grid().y_diameter() / (static_cast<double>(T) * (1.0 - 0.5));
    CHECK(nu_hat <= bound);
  }
}

TEST_CASE("strong nu: coupled identical pair is exactly zero; degenerate noise has no spread") {
  SystemSpec sys = linear_system(9);
  MetricBasis basis = build_metric_basis(sys.grid(), 2, 5);
  TestVector h = TestVector::from_basis_prefix(basis, 2, false);

  StrongNuOptions opt;
  opt.family_size = 6;
  StrongNuResult same = strong_nu_estimate(sys, h, 12, {{3, 3}}, 30, 77, opt);
  CHECK(same.value == 0.0);

  GridSpec g({{0.0}, {1.0}, {2.0}}, {{0.0}, {1.0}}, {{0.0}}, {1.0});
  SystemSpec det(std::move(g), std::vector<std::size_t>{1, 2, 2, 0, 0, 1});
  MetricBasis b2 = build_metric_basis(det.grid(), 2, 5);
  TestVector h2 = TestVector::from_basis_prefix(b2, 2, false);
  StrongNuResult d = strong_nu_estimate(det, h2, 8, {{0, 2}}, 30, 77, opt);
  CHECK(d.stderr_ == doctest::Approx(0.0));  // no noise, no spread

  CHECK_THROWS_AS(strong_nu_estimate(sys, h, 12, {{0, 1}}, 5, 1, opt), std::invalid_argument);
}

TEST_CASE("strong nu on the linear benchmark meets the Example-3 coupling bound") {
  SystemSpec sys = linear_system(21);
  MetricBasis basis = build_metric_basis(sys.grid(), 3, 5);
  TestVector h = TestVector::from_basis_prefix(basis, 3, false);
  StrongNuOptions opt;
  opt.family_size = 24;

  const std::size_t T = 20;
  StrongNuResult r = strong_nu_estimate(sys, h, T, {{0, 10}, {5, 15}}, 60, 2024, opt);
  const double bound =
      h.lipschitz_y * sys.grid().y_diameter() / (static_cast<double>(T) * 0.5);
  CHECK(r.value <= bound + 3.0 * r.stderr_);
}

TEST_CASE("loms_report: deterministic rerun and decreasing embedded distance") {
  SystemSpec sys = linear_system(9);
  MetricBasis basis = build_metric_basis(sys.grid(), 8, 21);
  MeasurePolytope poly = stationary_polytope(build_kernel(sys));

  LomsOptions opt;
  opt.n_plans = 8;
  opt.replicates = 8;
  opt.directions = 32;
  opt.w_vertex_sample = 4;
  opt.linear_contraction = 0.5;

  ConvergenceReport r1 = loms_report(sys, basis, poly, 0, {10, 40, 160}, 5, opt);
  ConvergenceReport r2 = loms_report(sys, basis, poly, 0, {10, 40, 160}, 5, opt);
  CHECK(r1.to_csv() == r2.to_csv());

  CHECK(r1.value(160, kMetricDhGammaW) < r1.value(10, kMetricDhGammaW));
  CHECK(r1.slopes.at(kMetricDhGammaW) < 0.0);
  CHECK(r1.value(10, "example3_bound") > 0.0);
  CHECK(r1.summary().find("slopes") != std::string::npos);

  CHECK_THROWS_AS(loms_report(sys, basis, poly, 0, {40, 10}, 5, opt), std::invalid_argument);
}
