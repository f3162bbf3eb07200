#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "occmeas/grid.hpp"

namespace occmeas {

enum class MeasureKind { empirical_random, expectation };

/// Probability measure on the (y, u) cell grid, stored dense. Weights are
/// nonnegative and sum to one (checked at construction within 1e-10).
class OccMeasure {
 public:
  OccMeasure(std::vector<double> weights, MeasureKind kind);

  static OccMeasure point_mass(std::size_t cell, std::size_t n_cells,
                               MeasureKind kind = MeasureKind::expectation);
  static OccMeasure uniform(std::size_t n_cells,
                            MeasureKind kind = MeasureKind::expectation);

  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t cell) const { return weights_[cell]; }
  std::size_t n_cells() const { return weights_.size(); }
  MeasureKind kind() const { return kind_; }

  std::string to_csv(const GridSpec& grid) const;
  void write_csv(const GridSpec& grid, const std::filesystem::path& path) const;

 private:
  std::vector<double> weights_;
  MeasureKind kind_;
};

/// Exact finite sum of q against the measure; q receives the cell index.
double integrate(const std::function<double(std::size_t)>& q, const OccMeasure& gamma);

/// Same against an explicit value table indexed by cell.
double integrate(std::span<const double> q_values, const OccMeasure& gamma);

double l1_distance(const OccMeasure& a, const OccMeasure& b);

}  // namespace occmeas
