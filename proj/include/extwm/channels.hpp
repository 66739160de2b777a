#pragma once

// Exterior-cone energy for free radial waves in five dimensions and the plane
// P(a) = span{(r^-3, 0), (0, r^-3)} of Newton-potential data.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "extwm/energy.hpp"
#include "extwm/grid.hpp"
#include "extwm/wave.hpp"

namespace extwm {

struct ProjectionSplit {
  double a = 0.0;
  double c1 = 0.0;  ///< a^3 f(a)
  double c2 = 0.0;  ///< a int_a^inf s g(s) ds
  double norm_total_sq = 0.0;
  double norm_pi_sq = 0.0;    ///< 3 a^-3 c1^2 + a^-1 c2^2
  double norm_perp_sq = 0.0;  ///< by quadrature of the remainder
  std::vector<double> f_perp;  ///< f - c1 r^-3 on the grid (meaningful for r >= a)
  std::vector<double> g_perp;  ///< g - c2 r^-3
};

/// Splits (f, g) restricted to r > a into its plane component and the
/// remainder. `tail` describes data continuing as c r^-3 beyond r_max.
/// Throws ConfigError if a is outside the grid.
ProjectionSplit project_plane(const RadialGrid& grid, std::span<const double> f, std::span<const double> g,
                              double a, const std::optional<NewtonTail>& tail = {});

/// Inner product <(f1,g1),(f2,g2)> in H^1 x L^2(r > a) by quadrature.
double exterior_inner_product(const RadialGrid& grid, std::span<const double> f1,
                              std::span<const double> g1, std::span<const double> f2,
                              std::span<const double> g2, double a);

/// Exterior energy of u - (c1 + c2 (t - t0)) r^-3, i.e. of the solution with
/// the plane component removed. On the exterior cone the plane data evolve
/// exactly as c1 r^-3 + c2 t r^-3.
double plane_subtracted_exterior_energy(const WaveState& u, double a, double c1, double c2);

struct ExteriorControl {
  double cfl = 0.5;
  double T = -1.0;  ///< run length; negative selects the longest clean window
  double sample_interval = 0.5;
  double plateau_tol = 1e-3;
  double trailing_fraction = 0.2;
  double plane_threshold = 1e-10;  ///< relative norm_perp_sq below which data count as plane data
  double margin = 2.0;
  std::optional<NewtonTail> tail{};  ///< data continue as c r^-3 beyond r_max
};

struct ExteriorSeries {
  std::vector<double> t;
  std::vector<double> raw;        ///< E_ext(t; a)
  std::vector<double> projected;  ///< plane-subtracted E_ext(t; a)
  double limit = 0.0;             ///< last projected value
  bool plateau = false;
};

struct ExteriorEstimate {
  double a = 0.0;
  double T = 0.0;
  ProjectionSplit split;
  double E_plus = 0.0;
  double E_minus = 0.0;
  bool plateau_plus = false;
  bool plateau_minus = false;
  bool plane_data = false;
  std::optional<double> c_ratio;  ///< empty for plane data
  ExteriorSeries forward;
  ExteriorSeries backward;
};

/// Longest T for which the exterior cone r > a + t, together with the
/// outgoing radiation of data supported in r <= support, stays inside the
/// clean region of `data`.
double clean_exterior_window(const WaveState& data, double a, double support, double margin);

/// Radius beyond which pos and vel vanish identically (r_max if they never do).
double numerical_support(const WaveState& data);

/// Evolves the free 5d exterior wave from U-form data forward and backward in
/// time (the backward run uses (f, -g)) and estimates lim E_ext(t; a) in both
/// directions from the plane-subtracted series. Throws ConfigError when no
/// clean window exists.
ExteriorEstimate asymptotic_exterior_energy(const WaveState& data, double a, const ExteriorControl& ctrl = {});

/// w = r^-1 (r^3 u)_r = 3 r u + r^2 u_r, which solves the 1d wave equation.
std::vector<double> transform_w(const WaveState& u);

/// Velocity tail u_t ~ coef r^-power beyond r_max.
struct PowerTail {
  double coef = 0.0;
  double power = 0.0;
};

/// v(r) = int_r^inf s u_t(s) ds, which solves the 3d radial wave equation.
/// Throws ConfigError for a tail with power <= 2 (not integrable).
std::vector<double> transform_v(const WaveState& u, const std::optional<PowerTail>& tail = {});

struct ReductionResidual {
  std::vector<double> field;     ///< transformed field at the middle snapshot
  std::vector<double> residual;  ///< zero outside [r_lo, r_hi]
  double norm = 0.0;             ///< sqrt(int residual^2 dr) over [r_lo, r_hi]
};

/// Residual w_tt - w_rr at the middle of three equally spaced snapshots; time
/// derivatives are second-order centered differences. Throws ConfigError if
/// fewer than three snapshots are given or the spacing is uneven.
ReductionResidual w_residual(std::span<const WaveState> history, double r_lo, double r_hi);

/// Residual v_tt - v_rr - (2/r) v_r, as above.
ReductionResidual v_residual(std::span<const WaveState> history, double r_lo, double r_hi);

struct IdentityControl {
  double h = 0.01;
  double x_max = 40.0;
  double T = 10.0;
  double cfl = 0.5;
  double flux_sample = 0.05;  ///< time spacing of the flux quadrature
};

struct IdentitySide {
  double energy_drop = 0.0;    ///< E_ext(0) - E_ext(T) along x > a + t
  double flux = 0.0;           ///< 1/2 int_0^T (w_t + w_x)^2 (t, a + t) dt
  double data_integral = 0.0;  ///< 1/4 int_a^{a+2T} (f_x + g)^2 dx
  double E_plus = 0.0;         ///< exterior energy at +T
  double E_minus = 0.0;        ///< exterior energy at -T
  double lower_bound = 0.0;    ///< 1/4 int_a^{a+2T} (f_x^2 + g^2) dx
};

struct IdentityReport {
  double a = 0.0;
  double T = 0.0;
  IdentitySide line;      ///< w_tt = w_xx on [0, x_max], Dirichlet at both ends
  IdentitySide radial3d;  ///< u_tt = u_rr + (2/r) u_r on [1, x_max]; w = r u
};

/// Checks the 1d exterior flux identity on a line and its 3d radial analogue
/// through w = r u. For the 3d part f, g are the data of u itself.
IdentityReport exterior_1d_identity_check(const std::function<double(double)>& f,
                                          const std::function<double(double)>& g, double a,
                                          const IdentityControl& ctrl = {});

}  // namespace extwm
