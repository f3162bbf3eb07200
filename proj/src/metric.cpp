#include "occmeas/metric.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "occmeas/csv.hpp"
#include "occmeas/rng.hpp"

namespace occmeas {

MetricBasis build_metric_basis(const GridSpec& grid, std::size_t J, std::uint64_t seed) {
  if (J == 0) throw std::invalid_argument("build_metric_basis: J must be >= 1");

  MetricBasis basis;
  basis.seed_ = seed;
  const std::size_t cells = grid.n_cells();
  const std::size_t dim = grid.y_dim() + grid.u_dim();

  std::vector<Point> coords(cells);
  for (std::size_t c = 0; c < cells; ++c) coords[c] = grid.cell_coords(c);

  RngStream rng(seed, make_stream(0, stream_channel::kBasis));
  for (std::size_t j = 0; j < J; ++j) {
    MetricBasis::Coefficients cf;
    cf.offset = rng.uniform(-0.5, 0.5);
    cf.linear.resize(dim);
    cf.amplitude.resize(dim);
    cf.frequency.resize(dim);
    cf.phase.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      cf.linear[k] = rng.uniform(-1.0, 1.0);
      cf.amplitude[k] = rng.uniform(-1.0, 1.0);
      cf.frequency[k] = rng.uniform(0.5, 3.0);
      cf.phase[k] = rng.uniform(0.0, 6.283185307179586);
    }
    cf.scale = 1.0;

    std::vector<double> vals(cells);
    double sup = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      double v = cf.offset;
      for (std::size_t k = 0; k < dim; ++k) {
        v += cf.linear[k] * coords[c][k];
        v += cf.amplitude[k] * std::sin(cf.frequency[k] * coords[c][k] + cf.phase[k]);
      }
      vals[c] = v;
      sup = std::max(sup, std::abs(v));
    }
    if (sup > 1.0) {
      cf.scale = 1.0 / sup;
      for (double& v : vals) v *= cf.scale;
    }

    basis.coeffs_.push_back(cf);
    basis.values_.push_back(std::move(vals));
  }

  // Lipschitz bounds by exhaustive pairwise scan over grid cells.
  basis.lipschitz_.assign(J, 0.0);
  basis.lipschitz_y_.assign(J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    double lip = 0.0, lip_y = 0.0;
    for (std::size_t a = 0; a < cells; ++a) {
      for (std::size_t b = a + 1; b < cells; ++b) {
        const double dist = euclidean_distance(coords[a], coords[b]);
        if (dist == 0.0) continue;
        const double slope = std::abs(basis.values_[j][a] - basis.values_[j][b]) / dist;
        lip = std::max(lip, slope);
        if (grid.cell_u(a) == grid.cell_u(b)) lip_y = std::max(lip_y, slope);
      }
    }
    basis.lipschitz_[j] = lip;
    basis.lipschitz_y_[j] = lip_y;
  }
  return basis;
}

std::string MetricBasis::serialize() const {
  std::ostringstream out;
  out << "metric-basis v1\n";
  out << "seed " << seed_ << "\n";
  out << "J " << coeffs_.size() << "\n";
  for (std::size_t j = 0; j < coeffs_.size(); ++j) {
    const auto& cf = coeffs_[j];
    out << "q " << j << " offset " << format_double(cf.offset) << " scale "
        << format_double(cf.scale) << "\n";
    auto dump = [&](const char* tag, const std::vector<double>& v) {
      out << "  " << tag;
      for (double x : v) out << ' ' << format_double(x);
      out << "\n";
    };
    dump("linear", cf.linear);
    dump("amplitude", cf.amplitude);
    dump("frequency", cf.frequency);
    dump("phase", cf.phase);
  }
  return out.str();
}

double rho(const OccMeasure& g1, const OccMeasure& g2, const MetricBasis& basis) {
  if (g1.n_cells() != g2.n_cells() || g1.n_cells() != basis.n_cells())
    throw std::invalid_argument("rho: grid mismatch between measures and basis");
  double sum = 0.0;
  double w = 1.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    w *= 0.5;
    sum += w * std::abs(integrate(basis.values(j), g1) - integrate(basis.values(j), g2));
  }
  return sum;
}

std::vector<double> moment_embedding(const OccMeasure& gamma, const MetricBasis& basis) {
  if (gamma.n_cells() != basis.n_cells())
    throw std::invalid_argument("moment_embedding: grid mismatch");
  std::vector<double> m(basis.size());
  double w = 1.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    w *= 0.5;
    m[j] = w * integrate(basis.values(j), gamma);
  }
  return m;
}

double embedded_rho(std::span<const double> m1, std::span<const double> m2) {
  if (m1.size() != m2.size()) throw std::invalid_argument("embedded_rho: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < m1.size(); ++j) s += std::abs(m1[j] - m2[j]);
  return s;
}

double rho_hausdorff(const std::vector<OccMeasure>& s1, const std::vector<OccMeasure>& s2,
                     const MetricBasis& basis) {
  if (s1.empty() || s2.empty()) throw std::invalid_argument("rho_hausdorff: empty set");
  auto one_sided = [&](const std::vector<OccMeasure>& a, const std::vector<OccMeasure>& b) {
    double sup = 0.0;
    for (const auto& ga : a) {
      double inf = std::numeric_limits<double>::infinity();
      for (const auto& gb : b) inf = std::min(inf, rho(ga, gb, basis));
      sup = std::max(sup, inf);
    }
    return sup;
  };
  return std::max(one_sided(s1, s2), one_sided(s2, s1));
}

double vec_hausdorff(const std::vector<std::vector<double>>& v1,
                     const std::vector<std::vector<double>>& v2) {
  if (v1.empty() || v2.empty()) throw std::invalid_argument("vec_hausdorff: empty set");
  const std::size_t dim = v1.front().size();
  for (const auto& v : v1)
    if (v.size() != dim) throw std::invalid_argument("vec_hausdorff: dimension mismatch");
  for (const auto& v : v2)
    if (v.size() != dim) throw std::invalid_argument("vec_hausdorff: dimension mismatch");
  auto one_sided = [](const std::vector<std::vector<double>>& a,
                      const std::vector<std::vector<double>>& b) {
    double sup = 0.0;
    for (const auto& pa : a) {
      double inf = std::numeric_limits<double>::infinity();
      for (const auto& pb : b) inf = std::min(inf, euclidean_distance(pa, pb));
      sup = std::max(sup, inf);
    }
    return sup;
  };
  return std::max(one_sided(v1, v2), one_sided(v2, v1));
}

namespace {

ExpectedDistance reduce_candidate_means(const std::vector<std::vector<double>>& dists) {
  ExpectedDistance best{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (std::size_t c = 0; c < dists.size(); ++c) {
    const auto& d = dists[c];
    if (d.empty()) throw std::invalid_argument("expected_set_distance: zero replicates");
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    const double se = d.size() > 1
                          ? std::sqrt(var / (static_cast<double>(d.size() - 1) *
                                             static_cast<double>(d.size())))
                          : 0.0;
    if (mean < best.value) best = {mean, se, c};
  }
  return best;
}

}  // namespace

ExpectedDistance expected_set_distance(
    const std::vector<double>& v,
    const std::vector<std::vector<std::vector<double>>>& ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("expected_set_distance: empty ensemble");
  std::vector<std::vector<double>> dists(ensemble.size());
  for (std::size_t c = 0; c < ensemble.size(); ++c) {
    for (const auto& rep : ensemble[c]) dists[c].push_back(euclidean_distance(v, rep));
  }
  return reduce_candidate_means(dists);
}

ExpectedDistance expected_set_distance(const OccMeasure& gamma,
                                       const std::vector<std::vector<OccMeasure>>& ensemble,
                                       const MetricBasis& basis) {
  if (ensemble.empty()) throw std::invalid_argument("expected_set_distance: empty ensemble");
  std::vector<std::vector<double>> dists(ensemble.size());
  for (std::size_t c = 0; c < ensemble.size(); ++c) {
    for (const auto& rep : ensemble[c]) dists[c].push_back(rho(gamma, rep, basis));
  }
  return reduce_candidate_means(dists);
}

std::vector<std::vector<double>> make_directions(std::size_t dim, std::size_t count,
                                                 std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("make_directions: dimension 0");
  std::vector<std::vector<double>> dirs;
  dirs.reserve(count);
  if (dim == 1) {
    if (count >= 1) dirs.push_back({1.0});
    if (count >= 2) dirs.push_back({-1.0});
    return dirs;
  }
  if (dim == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 6.283185307179586 * static_cast<double>(k) / static_cast<double>(count);
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  for (std::size_t k = 0; k < dim && dirs.size() < count; ++k) {
    std::vector<double> e(dim, 0.0);
    e[k] = 1.0;
    dirs.push_back(e);
    if (dirs.size() < count) {
      e[k] = -1.0;
      dirs.push_back(e);
    }
  }
  RngStream rng(seed, make_stream(0, stream_channel::kDirections));
  while (dirs.size() < count) {
    std::vector<double> d(dim);
    double norm2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      // Box-Muller from two counter draws keeps the sequence platform-stable.
      const double u1 = std::max(rng.uniform(), 1e-300);
      const double u2 = rng.uniform();
      d[k] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
      norm2 += d[k] * d[k];
    }
    if (norm2 < 1e-20) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : d) x *= inv;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

}  // namespace occmeas
