#include "occmeas/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace occmeas {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double euclidean_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

GridSpec::GridSpec(std::vector<Point> y_points, std::vector<Point> u_points,
                   std::vector<Point> s_values, std::vector<double> s_probs)
    : y_points_(std::move(y_points)),
      u_points_(std::move(u_points)),
      s_values_(std::move(s_values)),
      s_probs_(std::move(s_probs)) {
  if (y_points_.empty()) throw std::invalid_argument("GridSpec: empty y grid");
  if (u_points_.empty()) throw std::invalid_argument("GridSpec: empty u grid");
  if (s_values_.size() != s_probs_.size() || s_probs_.empty())
    throw std::invalid_argument("GridSpec: noise atoms and probabilities mismatch");
  const std::size_t m = y_points_.front().size();
  for (const auto& p : y_points_)
    if (p.size() != m) throw std::invalid_argument("GridSpec: inconsistent y dimension");
  const std::size_t du = u_points_.front().size();
  for (const auto& p : u_points_)
    if (p.size() != du) throw std::invalid_argument("GridSpec: inconsistent u dimension");
  for (std::size_t i = 0; i < y_points_.size(); ++i)
    for (std::size_t j = i + 1; j < y_points_.size(); ++j)
      if (euclidean_distance(y_points_[i], y_points_[j]) == 0.0)
        throw std::invalid_argument("GridSpec: duplicate y grid points");
  double mass = 0.0;
  for (double p : s_probs_) {
    if (p <= 0.0) throw std::invalid_argument("GridSpec: noise probabilities must be positive");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12)
    throw std::invalid_argument("GridSpec: noise probabilities must sum to 1");
}

std::size_t GridSpec::project_y(const Point& x) const {
  std::size_t best = 0;
  double best_d = euclidean_distance(x, y_points_[0]);
  for (std::size_t i = 1; i < y_points_.size(); ++i) {
    const double d = euclidean_distance(x, y_points_[i]);
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = i;
    }
  }
  return best;
}

Point GridSpec::cell_coords(std::size_t cell) const {
  const Point& y = y_points_[cell_y(cell)];
  const Point& u = u_points_[cell_u(cell)];
  Point out;
  out.reserve(y.size() + u.size());
  out.insert(out.end(), y.begin(), y.end());
  out.insert(out.end(), u.begin(), u.end());
  return out;
}

double GridSpec::y_diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < y_points_.size(); ++i)
    for (std::size_t j = i + 1; j < y_points_.size(); ++j)
      d = std::max(d, euclidean_distance(y_points_[i], y_points_[j]));
  return d;
}

}  // namespace occmeas
