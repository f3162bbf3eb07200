#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace occmeas {

using Point = std::vector<double>;

/// Finite discretization of the state space Y, the control set and the noise
/// law. Immutable after construction; all downstream objects index into it.
class GridSpec {
 public:
  GridSpec(std::vector<Point> y_points, std::vector<Point> u_points,
           std::vector<Point> s_values, std::vector<double> s_probs);

  std::size_t n_y() const { return y_points_.size(); }
  std::size_t n_u() const { return u_points_.size(); }
  std::size_t n_s() const { return s_probs_.size(); }
  std::size_t n_cells() const { return n_y() * n_u(); }

  std::size_t y_dim() const { return y_points_.front().size(); }
  std::size_t u_dim() const { return u_points_.front().size(); }

  const Point& y_point(std::size_t i) const { return y_points_[i]; }
  const Point& u_point(std::size_t i) const { return u_points_[i]; }
  const Point& s_value(std::size_t i) const { return s_values_[i]; }
  double s_prob(std::size_t i) const { return s_probs_[i]; }
  std::span<const double> s_probs() const { return s_probs_; }

  std::size_t cell_index(std::size_t iy, std::size_t iu) const { return iy * n_u() + iu; }
  std::size_t cell_y(std::size_t cell) const { return cell / n_u(); }
  std::size_t cell_u(std::size_t cell) const { return cell % n_u(); }

  /// Nearest y grid point in Euclidean norm; ties break toward the lower index.
  std::size_t project_y(const Point& x) const;

  /// Concatenated (y, u) coordinates of a cell; domain of the metric basis.
  Point cell_coords(std::size_t cell) const;

  double y_diameter() const;

  bool same_shape(const GridSpec& other) const {
    return n_y() == other.n_y() && n_u() == other.n_u();
  }

 private:
  std::vector<Point> y_points_;
  std::vector<Point> u_points_;
  std::vector<Point> s_values_;
  std::vector<double> s_probs_;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);
double euclidean_norm(std::span<const double> a);

}  // namespace occmeas
