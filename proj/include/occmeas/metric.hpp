#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occmeas/grid.hpp"
#include "occmeas/measure.hpp"

namespace occmeas {

/// Seeded family q_1..q_J of Lipschitz functions on the cell grid with
/// sup-norm <= 1, standing in for a dense sequence in the unit ball of
/// C(Y x U). Each q_j is a clipped affine + low-frequency trigonometric
/// combination of the (y, u) coordinates, scaled so its max absolute value on
/// the grid is exactly <= 1. Identical (grid shape, J, seed) reproduce the
/// same coefficients and values.
class MetricBasis {
 public:
  std::size_t size() const { return values_.size(); }
  std::size_t n_cells() const { return values_.empty() ? 0 : values_[0].size(); }

  /// q_j evaluated on every cell, row-major by cell index.
  std::span<const double> values(std::size_t j) const { return values_[j]; }

  /// Lipschitz bound over all grid cell pairs (joint (y,u) Euclidean metric).
  double lipschitz_bound(std::size_t j) const { return lipschitz_[j]; }

  /// Lipschitz bound in y alone (pairs sharing the control coordinate).
  double lipschitz_bound_y(std::size_t j) const { return lipschitz_y_[j]; }

  std::uint64_t seed() const { return seed_; }

  /// Structured text block with the seed and raw coefficients for exact replay.
  std::string serialize() const;

  struct Coefficients {
    double offset;
    std::vector<double> linear;     // one per coordinate
    std::vector<double> amplitude;  // one per coordinate
    std::vector<double> frequency;
    std::vector<double> phase;
    double scale;  // applied after combination so sup-norm <= 1 on the grid
  };
  const Coefficients& coefficients(std::size_t j) const { return coeffs_[j]; }

  friend MetricBasis build_metric_basis(const GridSpec&, std::size_t, std::uint64_t);

 private:
  std::uint64_t seed_ = 0;
  std::vector<Coefficients> coeffs_;
  std::vector<std::vector<double>> values_;  // J x cells
  std::vector<double> lipschitz_;
  std::vector<double> lipschitz_y_;
};

MetricBasis build_metric_basis(const GridSpec& grid, std::size_t J, std::uint64_t seed);

/// rho(gamma1, gamma2) = sum_j 2^-j |int q_j d gamma1 - int q_j d gamma2|,
/// truncated at J; the tail of the series is bounded by 2^{-J+1}.
double rho(const OccMeasure& g1, const OccMeasure& g2, const MetricBasis& basis);

/// Moment embedding m_j = 2^-j int q_j d gamma; rho equals the l1 distance of
/// the embeddings, so set computations can work on these vectors directly.
std::vector<double> moment_embedding(const OccMeasure& gamma, const MetricBasis& basis);
double embedded_rho(std::span<const double> m1, std::span<const double> m2);

double rho_hausdorff(const std::vector<OccMeasure>& s1, const std::vector<OccMeasure>& s2,
                     const MetricBasis& basis);

double vec_hausdorff(const std::vector<std::vector<double>>& v1,
                     const std::vector<std::vector<double>>& v2);

/// Monte Carlo estimate of the expected distance between a fixed
/// element and a collection of random elements sampled under common random
/// numbers. `ensemble[c][r]` is replicate r of candidate c; the result is the
/// minimum over candidates of the replicate-average distance, with the
/// standard error of the winning candidate's average.
struct ExpectedDistance {
  double value;
  double stderr_;
  std::size_t argmin_candidate;
};

ExpectedDistance expected_set_distance(const std::vector<double>& v,
                                       const std::vector<std::vector<std::vector<double>>>& ensemble);
ExpectedDistance expected_set_distance(const OccMeasure& gamma,
                                       const std::vector<std::vector<OccMeasure>>& ensemble,
                                       const MetricBasis& basis);

/// Deterministic fan of unit directions; axis-aligned pairs first, then
/// seeded random unit vectors (equally spaced angles in dimension 2).
std::vector<std::vector<double>> make_directions(std::size_t dim, std::size_t count,
                                                 std::uint64_t seed);

}  // namespace occmeas
