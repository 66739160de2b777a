#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace extwm {

/// Uniform radial grid r_i = r_min + i h, i = 0..intervals.
class RadialGrid {
 public:
  RadialGrid() = default;

  /// Throws ConfigError unless r_max > r_min, h > 0 and (r_max - r_min)/h is
  /// an integer to within 1e-9 relative.
  RadialGrid(double r_max, double h, double r_min = 1.0);

  double r_min() const noexcept { return r_min_; }
  double r_max() const noexcept { return r_max_; }
  double h() const noexcept { return h_; }
  std::size_t intervals() const noexcept { return intervals_; }
  std::size_t size() const noexcept { return intervals_ + 1; }
  double r(std::size_t i) const noexcept { return r_min_ + static_cast<double>(i) * h_; }
  std::vector<double> nodes() const;

  /// Node index closest to r (clamped).
  std::size_t nearest(double r) const noexcept;

  friend bool operator==(const RadialGrid&, const RadialGrid&) = default;

 private:
  double r_min_ = 1.0;
  double r_max_ = 2.0;
  double h_ = 1.0;
  std::size_t intervals_ = 1;
};

namespace fd {

/// Fourth-order first derivative at every node: centered in the interior,
/// off-centered next to the ends, one-sided at the ends.
void first_derivative(std::span<const double> f, double h, std::span<double> out);
std::vector<double> first_derivative(std::span<const double> f, double h);

/// Fourth-order second derivative at nodes 1..N-1 (ends left untouched).
void second_derivative_interior(std::span<const double> f, double h, std::span<double> out);

/// d/dr at a single node.
double first_derivative_at(std::span<const double> f, double h, std::size_t i);
/// d^2/dr^2 at a single node 1 <= i <= N-1.
double second_derivative_at(std::span<const double> f, double h, std::size_t i);

}  // namespace fd

namespace quad {

/// Integral of the nodal function f over [lo, hi] ∩ [r_min, r_max]. Every cell
/// uses the cubic through the four nearest nodes, so full cells reduce to the
/// fourth-order rule h(-f_{i-1} + 13 f_i + 13 f_{i+1} - f_{i+2})/24 and partial
/// cells at moving boundaries are integrated exactly against the same cubic.
double integrate(const RadialGrid& grid, std::span<const double> f, double lo, double hi);

/// Integral over the whole grid.
double integrate(const RadialGrid& grid, std::span<const double> f);

/// Fourth-order value of the nodal function at an arbitrary r.
double interpolate(const RadialGrid& grid, std::span<const double> f, double r);

/// out[i] = integral of f over [r_i, r_max], accumulated inward.
std::vector<double> cumulative_from_right(const RadialGrid& grid, std::span<const double> f);

}  // namespace quad

}  // namespace extwm
