#include "extwm/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "extwm/errors.hpp"

namespace extwm {

RadialGrid::RadialGrid(double r_max, double h, double r_min)
    : r_min_(r_min), r_max_(r_max), h_(h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError(fmt::format("grid: h = {} must be positive", h));
  if (!(r_max > r_min)) {
    throw ConfigError(fmt::format("grid: r_max = {} must exceed r_min = {}", r_max, r_min));
  }
  const double cells = (r_max - r_min) / h;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
    throw ConfigError(fmt::format("grid: (r_max - r_min)/h = {} is not an integer", cells));
  }
  if (rounded < 6) throw ConfigError("grid: need at least 6 cells for the 4th-order stencils");
  intervals_ = static_cast<std::size_t>(rounded);
}

std::vector<double> RadialGrid::nodes() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r(i);
  return out;
}

std::size_t RadialGrid::nearest(double r) const noexcept {
  const double x = std::round((r - r_min_) / h_);
  if (x <= 0) return 0;
  return std::min(static_cast<std::size_t>(x), intervals_);
}

namespace fd {

double first_derivative_at(std::span<const double> f, double h, std::size_t i) {
  const std::size_t n = f.size() - 1;
  const double c = 1.0 / (12.0 * h);
  if (i >= 2 && i + 2 <= n) return c * (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]);
  if (i == 0) return c * (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]);
  if (i == 1) return c * (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]);
  if (i == n) return -c * (-25 * f[n] + 48 * f[n - 1] - 36 * f[n - 2] + 16 * f[n - 3] - 3 * f[n - 4]);
  return -c * (-3 * f[n] - 10 * f[n - 1] + 18 * f[n - 2] - 6 * f[n - 3] + f[n - 4]);
}

double second_derivative_at(std::span<const double> f, double h, std::size_t i) {
  const std::size_t n = f.size() - 1;
  const double c = 1.0 / (12.0 * h * h);
  if (i >= 2 && i + 2 <= n) {
    return c * (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]);
  }
  if (i == 1) return c * (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]);
  // i == n - 1
  return c * (10 * f[n] - 15 * f[n - 1] - 4 * f[n - 2] + 14 * f[n - 3] - 6 * f[n - 4] + f[n - 5]);
}

void first_derivative(std::span<const double> f, double h, std::span<double> out) {
  const std::size_t n = f.size() - 1;
  const double c = 1.0 / (12.0 * h);
  for (std::size_t i = 2; i + 2 <= n; ++i) {
    out[i] = c * (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]);
  }
  for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 1, n}) out[i] = first_derivative_at(f, h, i);
}

std::vector<double> first_derivative(std::span<const double> f, double h) {
  std::vector<double> out(f.size());
  first_derivative(f, h, out);
  return out;
}

void second_derivative_interior(std::span<const double> f, double h, std::span<double> out) {
  const std::size_t n = f.size() - 1;
  const double c = 1.0 / (12.0 * h * h);
  for (std::size_t i = 2; i + 2 <= n; ++i) {
    out[i] = c * (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]);
  }
  out[1] = second_derivative_at(f, h, 1);
  out[n - 1] = second_derivative_at(f, h, n - 1);
}

}  // namespace fd

namespace quad {
namespace {

// Cubic through nodes j0..j0+3 integrated over [r_cell + x0 h, r_cell + x1 h]
// for cell i (0 <= x0 < x1 <= 1); 2-point Gauss-Legendre is exact for cubics.
double cell_integral(std::span<const double> f, double h, std::size_t i, std::size_t n, double x0,
                     double x1) {
  std::size_t j0 = i == 0 ? 0 : i - 1;
  if (j0 + 3 > n) j0 = n - 3;
  const double off = static_cast<double>(i) - static_cast<double>(j0);  // cell start in stencil coords
  auto cubic = [&](double x) {
    // Lagrange basis on nodes 0,1,2,3 evaluated at off + x
    const double t = off + x;
    const double l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
    const double l1 = t * (t - 2) * (t - 3) / 2.0;
    const double l2 = -t * (t - 1) * (t - 3) / 2.0;
    const double l3 = t * (t - 1) * (t - 2) / 6.0;
    return l0 * f[j0] + l1 * f[j0 + 1] + l2 * f[j0 + 2] + l3 * f[j0 + 3];
  };
  if (x0 == 0.0 && x1 == 1.0) {
    if (i >= 1 && i + 2 <= n) return h * (-f[i - 1] + 13 * f[i] + 13 * f[i + 1] - f[i + 2]) / 24.0;
  }
  constexpr double g = 0.57735026918962576451;  // 1/sqrt(3)
  const double mid = 0.5 * (x0 + x1), half = 0.5 * (x1 - x0);
  return h * half * (cubic(mid - half * g) + cubic(mid + half * g));
}

}  // namespace

double integrate(const RadialGrid& grid, std::span<const double> f, double lo, double hi) {
  lo = std::max(lo, grid.r_min());
  hi = std::min(hi, grid.r_max());
  if (!(hi > lo)) return 0.0;
  const double h = grid.h();
  const std::size_t n = grid.intervals();
  const double xlo = (lo - grid.r_min()) / h, xhi = (hi - grid.r_min()) / h;
  auto ilo = static_cast<std::size_t>(std::floor(xlo));
  auto ihi = static_cast<std::size_t>(std::floor(xhi));
  if (ilo >= n) ilo = n - 1;
  if (ihi >= n) ihi = n - 1;
  double acc = 0.0;
  for (std::size_t i = ilo; i <= ihi; ++i) {
    const double x0 = std::clamp(xlo - static_cast<double>(i), 0.0, 1.0);
    const double x1 = std::clamp(xhi - static_cast<double>(i), 0.0, 1.0);
    if (x1 > x0) acc += cell_integral(f, h, i, n, x0, x1);
  }
  return acc;
}

double integrate(const RadialGrid& grid, std::span<const double> f) {
  return integrate(grid, f, grid.r_min(), grid.r_max());
}

double interpolate(const RadialGrid& grid, std::span<const double> f, double r) {
  const std::size_t n = grid.intervals();
  const double x = std::clamp((r - grid.r_min()) / grid.h(), 0.0, static_cast<double>(n));
  auto i = static_cast<std::size_t>(std::floor(x));
  if (i >= n) i = n - 1;
  std::size_t j0 = i == 0 ? 0 : i - 1;
  if (j0 + 3 > n) j0 = n - 3;
  const double t = x - static_cast<double>(j0);
  const double l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
  const double l1 = t * (t - 2) * (t - 3) / 2.0;
  const double l2 = -t * (t - 1) * (t - 3) / 2.0;
  const double l3 = t * (t - 1) * (t - 2) / 6.0;
  return l0 * f[j0] + l1 * f[j0 + 1] + l2 * f[j0 + 2] + l3 * f[j0 + 3];
}

std::vector<double> cumulative_from_right(const RadialGrid& grid, std::span<const double> f) {
  const std::size_t n = grid.intervals();
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) out[i] = out[i + 1] + cell_integral(f, grid.h(), i, n, 0.0, 1.0);
  return out;
}

}  // namespace quad

}  // namespace extwm
