#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "occmeas/measure.hpp"
#include "occmeas/simplex.hpp"
#include "occmeas/system.hpp"

namespace occmeas {

/// P[(y,u) -> y'], exact from the noise atoms. Rows indexed by cell, columns
/// by y index; every row sums to 1.
class TransitionKernel {
 public:
  explicit TransitionKernel(const SystemSpec& spec);

  std::size_t n_cells() const { return probs_.size(); }
  std::size_t n_y() const { return probs_.empty() ? 0 : probs_[0].size(); }
  double prob(std::size_t cell, std::size_t y_next) const { return probs_[cell][y_next]; }
  const std::vector<double>& row(std::size_t cell) const { return probs_[cell]; }

 private:
  std::vector<std::vector<double>> probs_;
};

TransitionKernel build_kernel(const SystemSpec& spec);

/// The stationary-measure set W in equality form: balance equations with the
/// y-cell indicators as test functions (a complete family on a finite grid),
/// plus the unit-mass row; nonnegativity is implicit. Feasibility is asserted
/// at construction.
class MeasurePolytope {
 public:
  MeasurePolytope(std::vector<std::vector<double>> A, std::vector<double> b,
                  std::size_t n_y, std::size_t n_u);

  std::size_t n_cells() const { return A_.empty() ? 0 : A_[0].size(); }
  std::size_t n_rows() const { return A_.size(); }
  std::size_t n_y() const { return n_y_; }
  std::size_t n_u() const { return n_u_; }
  const std::vector<std::vector<double>>& A() const { return A_; }
  const std::vector<double>& b() const { return b_; }

  /// Cached vertex list; only populated when n_cells() <= 12.
  const std::optional<std::vector<std::vector<double>>>& vertices() const { return vertices_; }

  /// Plain-text LP interchange block (fixed column order: the cell weights
  /// in cell-index order).
  std::string export_lp() const;

  friend MeasurePolytope stationary_polytope(const TransitionKernel& kernel);

 private:
  std::vector<std::vector<double>> A_;
  std::vector<double> b_;
  std::size_t n_y_ = 0, n_u_ = 0;
  std::optional<std::vector<std::vector<double>>> vertices_;
};

MeasurePolytope stationary_polytope(const TransitionKernel& kernel);

struct SupportResult {
  double value;
  OccMeasure maximizer;
  std::vector<std::size_t> basis;
};

/// max c^T gamma over the polytope; deterministic tie-breaking inherited from
/// the simplex pivot rules.
SupportResult support(const MeasurePolytope& poly, std::span<const double> c);

bool contains(const MeasurePolytope& poly, const OccMeasure& gamma, double tol);

struct ImageSupportResult {
  double value;
  std::vector<double> argmax;  // H * gamma*
  OccMeasure maximizer;
};

/// Support of the linear image H * W in direction p, i.e. support(poly, H^T p).
ImageSupportResult image_support(const MeasurePolytope& poly,
                                 const std::vector<std::vector<double>>& H,
                                 std::span<const double> p);

/// Convex sets presented through their support functions. The sampled
/// estimate max_p |h1(p) - h2(p)| is a lower bound of the Hausdorff distance
/// that becomes exact as the direction fan densifies.
using SupportOracle = std::function<double(std::span<const double>)>;

double polytope_set_hausdorff(const SupportOracle& s1, const SupportOracle& s2,
                              const std::vector<std::vector<double>>& directions);

SupportOracle point_cloud_support(const std::vector<std::vector<double>>& points);

/// Exact l1 distance from `target` to the linear image H * poly, solved as an
/// LP with slack splittings. With H the 2^-j-weighted basis rows this is the
/// (J-truncated) rho distance from a measure's moment embedding to the set.
double l1_projection_distance(const MeasurePolytope& poly,
                              const std::vector<std::vector<double>>& H,
                              std::span<const double> target);

/// All vertices of {A x = b, x >= 0} by basis enumeration; guard n <= 12.
std::vector<std::vector<double>> enumerate_vertices(const std::vector<std::vector<double>>& A,
                                                    const std::vector<double>& b);

/// Distinct optimal basic solutions discovered by a seeded support sweep;
/// the vertex sample used when exact enumeration is out of reach.
std::vector<OccMeasure> sample_vertices(const MeasurePolytope& poly, std::size_t directions,
                                        std::uint64_t seed);

}  // namespace occmeas
