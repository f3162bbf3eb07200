#include "occmeas/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "occmeas/csv.hpp"

namespace occmeas {

OccMeasure::OccMeasure(std::vector<double> weights, MeasureKind kind)
    : weights_(std::move(weights)), kind_(kind) {
  if (weights_.empty()) throw std::invalid_argument("OccMeasure: empty weight vector");
  double mass = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw std::invalid_argument("OccMeasure: negative weight");
    mass += w;
  }
  if (std::abs(mass - 1.0) > 1e-10)
    throw std::invalid_argument("OccMeasure: total mass must be 1");
}

OccMeasure OccMeasure::point_mass(std::size_t cell, std::size_t n_cells, MeasureKind kind) {
  if (cell >= n_cells) throw std::invalid_argument("OccMeasure::point_mass: cell out of range");
  std::vector<double> w(n_cells, 0.0);
  w[cell] = 1.0;
  return OccMeasure(std::move(w), kind);
}

OccMeasure OccMeasure::uniform(std::size_t n_cells, MeasureKind kind) {
  std::vector<double> w(n_cells, 1.0 / static_cast<double>(n_cells));
  return OccMeasure(std::move(w), kind);
}

std::string OccMeasure::to_csv(const GridSpec& grid) const {
  if (grid.n_cells() != n_cells())
    throw std::invalid_argument("OccMeasure::to_csv: grid mismatch");
  CsvWriter csv({"cell_y_index", "cell_u_index", "weight"});
  for (std::size_t c = 0; c < n_cells(); ++c)
    csv.row({csv_cell(grid.cell_y(c)), csv_cell(grid.cell_u(c)), csv_cell(weights_[c])});
  return csv.full_text();
}

void OccMeasure::write_csv(const GridSpec& grid, const std::filesystem::path& path) const {
  write_text_atomic(path, to_csv(grid));
}

double integrate(const std::function<double(std::size_t)>& q, const OccMeasure& gamma) {
  double s = 0.0;
  for (std::size_t c = 0; c < gamma.n_cells(); ++c) s += gamma.weight(c) * q(c);
  return s;
}

double integrate(std::span<const double> q_values, const OccMeasure& gamma) {
  if (q_values.size() != gamma.n_cells())
    throw std::invalid_argument("integrate: value table does not match measure grid");
  double s = 0.0;
  for (std::size_t c = 0; c < gamma.n_cells(); ++c) s += gamma.weight(c) * q_values[c];
  return s;
}

double l1_distance(const OccMeasure& a, const OccMeasure& b) {
  if (a.n_cells() != b.n_cells()) throw std::invalid_argument("l1_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < a.n_cells(); ++c) s += std::abs(a.weight(c) - b.weight(c));
  return s;
}

}  // namespace occmeas
