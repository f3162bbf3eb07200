#include <cmath>

#include "doctest.h"
#include "occmeas/csv.hpp"
#include "occmeas/grid.hpp"
#include "occmeas/measure.hpp"
#include "occmeas/metric.hpp"
#include "occmeas/rng.hpp"

using namespace occmeas;

namespace {

GridSpec small_grid(std::size_t ny = 5, std::size_t nu = 2) {
  std::vector<Point> y, u;
  for (std::size_t i = 0; i < ny; ++i)
    y.push_back({static_cast<double>(i) / static_cast<double>(ny - 1)});
  for (std::size_t i = 0; i < nu; ++i) u.push_back({static_cast<double>(i)});
  return GridSpec(std::move(y), std::move(u), {{0.0}, {1.0}}, {0.5, 0.5});
}

OccMeasure random_measure(const GridSpec& grid, RngStream& rng) {
  std::vector<double> w(grid.n_cells());
  double mass = 0.0;
  for (double& x : w) {
    x = rng.uniform();
    mass += x;
  }
  for (double& x : w) x /= mass;
  return OccMeasure(std::move(w), MeasureKind::expectation);
}

}  // namespace

TEST_CASE("grid validates noise law and rejects duplicates") {
  CHECK_THROWS_AS(GridSpec({{0.0}, {0.0}}, {{0.0}}, {{0.0}}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec({{0.0}}, {{0.0}}, {{0.0}, {1.0}}, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec({{0.0}}, {{0.0}}, {{0.0}, {1.0}}, {-0.5, 1.5}), std::invalid_argument);
}

TEST_CASE("projection snaps to nearest point with lower-index ties") {
  GridSpec g = small_grid(5, 1);  // y = 0, .25, .5, .75, 1
  CHECK(g.project_y({0.3}) == 1);
  CHECK(g.project_y({0.375}) == 1);  // exact midpoint between .25 and .5
  CHECK(g.project_y({2.0}) == 4);
}

TEST_CASE("metric basis is normalized, deterministic, and Lipschitz-recorded") {
  GridSpec grid = small_grid();
  CHECK_THROWS_AS(build_metric_basis(grid, 0, 7), std::invalid_argument);

  MetricBasis b1 = build_metric_basis(grid, 8, 1);
  MetricBasis b2 = build_metric_basis(grid, 8, 1);
  CHECK(b1.serialize() == b2.serialize());

  MetricBasis other = build_metric_basis(grid, 8, 2);
  CHECK(b1.serialize() != other.serialize());

  for (std::size_t j = 0; j < b1.size(); ++j) {
    for (std::size_t c = 0; c < grid.n_cells(); ++c)
      CHECK(std::abs(b1.values(j)[c]) <= 1.0 + 1e-12);

    // finite-difference scan over all grid pairs reproduces the stored bound
    double lip = 0.0;
    for (std::size_t a = 0; a < grid.n_cells(); ++a)
      for (std::size_t c = a + 1; c < grid.n_cells(); ++c) {
        const double d = euclidean_distance(grid.cell_coords(a), grid.cell_coords(c));
        if (d > 0) lip = std::max(lip, std::abs(b1.values(j)[a] - b1.values(j)[c]) / d);
      }
    CHECK(b1.lipschitz_bound(j) == doctest::Approx(lip).epsilon(1e-12));
    CHECK(b1.lipschitz_bound_y(j) <= b1.lipschitz_bound(j) + 1e-15);
  }
}

TEST_CASE("integrate: normalization, Dirac, uniform hand sum") {
  GridSpec grid = small_grid();
  MetricBasis basis = build_metric_basis(grid, 4, 3);

  OccMeasure uni = OccMeasure::uniform(grid.n_cells());
  CHECK(integrate([](std::size_t) { return 1.0; }, uni) == doctest::Approx(1.0));

  OccMeasure dirac = OccMeasure::point_mass(3, grid.n_cells());
  CHECK(integrate(basis.values(0), dirac) == doctest::Approx(basis.values(0)[3]));

  // uniform over 4 cells, q = first state coordinate
  std::vector<double> w(grid.n_cells(), 0.0);
  w[0] = w[2] = w[4] = w[6] = 0.25;
  OccMeasure four(std::move(w), MeasureKind::expectation);
  std::vector<double> q(grid.n_cells());
  for (std::size_t c = 0; c < grid.n_cells(); ++c) q[c] = grid.cell_coords(c)[0];
  const double expect = 0.25 * (q[0] + q[2] + q[4] + q[6]);
  CHECK(integrate(q, four) == doctest::Approx(expect));

  std::vector<double> bad(grid.n_cells() + 1, 0.0);
  CHECK_THROWS_AS(integrate(bad, uni), std::invalid_argument);
}

TEST_CASE("rho: identity, bound, hand-computed two point masses") {
  GridSpec grid = small_grid();
  MetricBasis basis = build_metric_basis(grid, 2, 5);

  OccMeasure a = OccMeasure::point_mass(0, grid.n_cells());
  OccMeasure b = OccMeasure::point_mass(7, grid.n_cells());
  CHECK(rho(a, a, basis) == 0.0);

  const double expect = 0.5 * std::abs(basis.values(0)[0] - basis.values(0)[7]) +
                        0.25 * std::abs(basis.values(1)[0] - basis.values(1)[7]);
  CHECK(rho(a, b, basis) == doctest::Approx(expect));
  CHECK(rho(a, b, basis) == doctest::Approx(rho(b, a, basis)));
  CHECK(rho(a, b, basis) <= 2.0 * (1.0 - std::pow(2.0, -2.0)));
}

TEST_CASE("rho is a pseudometric on random measures") {
  GridSpec grid = small_grid();
  MetricBasis basis = build_metric_basis(grid, 16, 11);
  RngStream rng(99, 0);
  for (int trial = 0; trial < 200; ++trial) {
    OccMeasure x = random_measure(grid, rng);
    OccMeasure y = random_measure(grid, rng);
    OccMeasure z = random_measure(grid, rng);
    const double dxy = rho(x, y, basis);
    const double dyz = rho(y, z, basis);
    const double dxz = rho(x, z, basis);
    CHECK(dxy >= 0.0);
    CHECK(dxy == doctest::Approx(rho(y, x, basis)).epsilon(1e-14));
    CHECK(dxz <= dxy + dyz + 1e-12);
    CHECK(dxy <= 2.0);
  }
}

TEST_CASE("embedded moments reproduce rho") {
  GridSpec grid = small_grid();
  MetricBasis basis = build_metric_basis(grid, 6, 17);
  RngStream rng(4, 0);
  for (int trial = 0; trial < 20; ++trial) {
    OccMeasure x = random_measure(grid, rng);
    OccMeasure y = random_measure(grid, rng);
    CHECK(embedded_rho(moment_embedding(x, basis), moment_embedding(y, basis)) ==
          doctest::Approx(rho(x, y, basis)).epsilon(1e-12));
  }
}

TEST_CASE("rho_hausdorff hand cases") {
  GridSpec grid = small_grid();
  MetricBasis basis = build_metric_basis(grid, 4, 23);
  OccMeasure a = OccMeasure::point_mass(0, grid.n_cells());
  OccMeasure b = OccMeasure::point_mass(3, grid.n_cells());
  OccMeasure c = OccMeasure::point_mass(8, grid.n_cells());

  CHECK(rho_hausdorff({a}, {a}, basis) == 0.0);

  // S1 subset of S2: only the S2-side supremum remains
  const double expect = std::min(rho(c, a, basis), rho(c, b, basis));
  CHECK(rho_hausdorff({a, b}, {a, b, c}, basis) == doctest::Approx(expect));

  // 2 vs 3 element sets against a pairwise enumeration
  std::vector<OccMeasure> s1{a, b}, s2{b, c, OccMeasure::uniform(grid.n_cells())};
  double side1 = 0.0;
  for (const auto& x : s1) {
    double inf = 1e300;
    for (const auto& y : s2) inf = std::min(inf, rho(x, y, basis));
    side1 = std::max(side1, inf);
  }
  double side2 = 0.0;
  for (const auto& y : s2) {
    double inf = 1e300;
    for (const auto& x : s1) inf = std::min(inf, rho(y, x, basis));
    side2 = std::max(side2, inf);
  }
  CHECK(rho_hausdorff(s1, s2, basis) == doctest::Approx(std::max(side1, side2)));
  CHECK_THROWS_AS(rho_hausdorff({}, s2, basis), std::invalid_argument);
}

TEST_CASE("vec_hausdorff: singletons, brute force, metric axioms") {
  CHECK(vec_hausdorff({{0.0, 0.0}}, {{1.0, 0.0}}) == doctest::Approx(1.0));
  CHECK(vec_hausdorff({{1.0, 2.0}, {3.0, 4.0}}, {{1.0, 2.0}, {3.0, 4.0}}) == 0.0);

  RngStream rng(7, 1);
  auto random_cloud = [&](std::size_t n) {
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(), rng.uniform()});
    return pts;
  };
  for (int trial = 0; trial < 50; ++trial) {
    auto v1 = random_cloud(4);
    auto v2 = random_cloud(5);
    auto v3 = random_cloud(3);
    double side1 = 0.0, side2 = 0.0;
    for (const auto& p : v1) {
      double inf = 1e300;
      for (const auto& q : v2) inf = std::min(inf, euclidean_distance(p, q));
      side1 = std::max(side1, inf);
    }
    for (const auto& q : v2) {
      double inf = 1e300;
      for (const auto& p : v1) inf = std::min(inf, euclidean_distance(q, p));
      side2 = std::max(side2, inf);
    }
    const double d12 = vec_hausdorff(v1, v2);
    CHECK(d12 == doctest::Approx(std::max(side1, side2)));
    CHECK(d12 <= vec_hausdorff(v1, v3) + vec_hausdorff(v3, v2) + 1e-12);
  }
  CHECK_THROWS_AS(vec_hausdorff({{1.0}}, {{1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("expected_set_distance: degenerate, exact zero, hand average") {
  // deterministic ensemble reduces to the plain distance
  std::vector<double> v{0.0, 0.0};
  std::vector<std::vector<std::vector<double>>> det{
      {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}},
      {{0.0, 2.0}, {0.0, 2.0}, {0.0, 2.0}},
  };
  auto r = expected_set_distance(v, det);
  CHECK(std::abs(r.value - 1.0) <= 1e-12);
  CHECK(r.stderr_ == doctest::Approx(0.0));
  CHECK(r.argmin_candidate == 0);

  std::vector<std::vector<std::vector<double>>> same{{{0.0, 0.0}, {0.0, 0.0}}};
  CHECK(expected_set_distance(v, same).value == 0.0);

  // 2 candidates x 3 hand-written replicates
  std::vector<std::vector<std::vector<double>>> ens{
      {{1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}},   // mean distance 2
      {{0.0, 2.5}, {0.0, 2.5}, {0.0, 1.0}},   // mean distance 2
  };
  auto h = expected_set_distance(v, ens);
  CHECK(h.value == doctest::Approx(2.0));
  CHECK_THROWS_AS(expected_set_distance(v, {{}}), std::invalid_argument);
}

TEST_CASE("csv formatting round-trips and normalizes") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1.0 / 3.0) == format_double(1.0 / 3.0));
  double x = 0.1 + 0.2;
  double back = 0.0;
  std::sscanf(format_double(x).c_str(), "%lf", &back);
  CHECK(back == x);
}
