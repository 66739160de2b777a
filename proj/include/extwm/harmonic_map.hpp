#pragma once

// Exterior harmonic maps Q_n via the damped-pendulum phase plane.
//
// With s = log r and phi(s) = Q(r) the stationary equation
//   Q'' + (2/r) Q' = sin(2Q) / r^2
// becomes the autonomous system x' = y, y' = -y + sin(2x). Each (n pi, 0) is a
// saddle; Q_n is the branch of its stable manifold that approaches n pi from
// below, translated in s so that it vanishes at r = 1.

#include <array>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace extwm {

struct PendulumState {
  double s = 0.0;  ///< log-radius
  double x = 0.0;  ///< phi(s)
  double y = 0.0;  ///< d phi / ds
};

struct PhaseRate {
  double dx = 0.0;
  double dy = 0.0;
};

PhaseRate pendulum_vector_field(const PendulumState& p);

struct SaddleLinearization {
  std::array<double, 2> eigenvalues{};                 ///< (unstable, stable)
  std::array<std::array<double, 2>, 2> directions{};  ///< matching eigenvectors
};

/// Linearization of the pendulum flow at the saddle (n pi, 0).
SaddleLinearization saddle_linearization(int n);

/// Coefficient c of e^{-6s} in phi(s) = n pi - alpha e^{-2s} + c e^{-6s} + ...,
/// obtained by matching the cubic term of sin(2 phi) against the
/// characteristic polynomial of the linearized equation.
double stable_manifold_e6_coefficient(double alpha);

/// Point on the stable manifold of (n pi, 0) from the truncated series.
/// order 1 keeps the e^{-2s} term, order 2 adds the e^{-6s} correction.
/// The caller picks s_start; shooting uses alpha e^{-2 s_start} = 1e-6.
PendulumState stable_manifold_ic(int n, double alpha, double s_start, int order);

/// Same as stable_manifold_ic, but returns x - n pi without rounding.
PendulumState stable_manifold_offset(double alpha, double s, int order);

struct StepControl {
  // Offsets start near 1e-6 and errors along the manifold grow like e^{2s}
  // backward, so the absolute tolerance has to sit well below that scale.
  double abs_tol = 1e-18;
  double rel_tol = 1e-12;
  double initial_step = 1e-2;
  double min_step = 1e-13;
  double max_abs_y = 1e6;  ///< divergence guard
};

/// Adaptive Dormand-Prince integration of the pendulum flow from p to s_end
/// (forward or backward). Returns every accepted step including both ends.
/// Throws NumericalError on step-size underflow or when |y| exceeds the guard.
std::vector<PendulumState> integrate_pendulum(const PendulumState& p, double s_end,
                                              const StepControl& ctrl = {});

struct ShootingOptions {
  StepControl ctrl{};
  double alpha_plus = 1.0;
  int series_order = 2;
  double series_smallness = 1e-6;  ///< alpha e^{-2 s_start}
  double backward_window = 40.0;   ///< max distance in s searched for the crossing
  double root_tol = 1e-13;         ///< tolerance in s
};

struct ZeroCrossing {
  double s0 = 0.0;
  PendulumState state{};  ///< state at the refined crossing
  double s_start = 0.0;   ///< where the series initial condition was placed
};

/// Backward shooting along the stable manifold of (n pi, 0) with alpha = alpha_plus
/// until phi changes sign; the crossing is bracketed then polished by secant steps.
ZeroCrossing find_zero_crossing(int n, const ShootingOptions& opts = {});

struct QValue {
  double Q = 0.0;
  double Qprime = 0.0;
};

/// Immutable tabulated harmonic map Q_n on [1, r_table_max] with its r^{-2} tail.
class HarmonicMapProfile {
 public:
  HarmonicMapProfile() = default;

  int degree() const noexcept { return n_; }
  double alpha0() const noexcept { return alpha0_; }
  double r_table_max() const noexcept { return r_table_max_; }
  int tail_order() const noexcept { return tail_order_; }
  const StepControl& control() const noexcept { return ctrl_; }

  /// Q and Q' at r >= 1. Throws ConfigError for r < 1.
  QValue evaluate(double r) const;
  /// n pi - Q(r), free of the cancellation in computing it from Q.
  double deficit(double r) const;

  /// Table nodes, uniform in s = log r.
  std::span<const double> s_nodes() const noexcept { return s_; }
  /// phi - n pi at the nodes.
  std::span<const double> offsets() const noexcept { return xi_; }
  /// d phi / ds at the nodes.
  std::span<const double> slopes() const noexcept { return y_; }
  double ds() const noexcept { return ds_; }

  /// Energy of (Q_n, 0), i.e. 1/2 int (Q_r^2 + 2 sin^2 Q / r^2) r^2 dr.
  double energy() const;

 private:
  friend HarmonicMapProfile build_harmonic_map(int n, const ShootingOptions& opts,
                                               double r_table_max, int tail_order);
  double tail_offset(double r) const;
  std::pair<double, double> interpolate(double s) const;  // (phi - n pi, phi')

  int n_ = 0;
  double alpha0_ = 0.0;
  double r_table_max_ = 1e3;
  int tail_order_ = 2;
  double ds_ = 0.0;
  StepControl ctrl_{};
  std::vector<double> s_;
  std::vector<double> xi_;
  std::vector<double> y_;
};

/// Builds Q_n. n = 0 yields the trivial profile Q = 0.
HarmonicMapProfile build_harmonic_map(int n, const ShootingOptions& opts = {},
                                      double r_table_max = 1e3, int tail_order = 2);

QValue evaluate_Q(const HarmonicMapProfile& profile, double r);

/// Largest |Q'' + (2/r) Q' - sin(2Q)/r^2| over table nodes with r in [r_lo, r_hi];
/// the second derivative comes from fourth-order differences of the table.
double stationary_residual_max(const HarmonicMapProfile& profile, double r_lo, double r_hi);

/// Least-squares slope of log|r^2 (n pi - Q) - alpha0| against log r over
/// `samples` log-spaced radii in [r_lo, r_hi].
double tail_residual_slope(const HarmonicMapProfile& profile, double r_lo, double r_hi, int samples = 64);

/// True when Q' > 0 at every table node.
bool is_monotone(const HarmonicMapProfile& profile);

/// Writes `r,Q,Qprime` for every table node plus a JSON sidecar.
void export_profile(const HarmonicMapProfile& profile, const std::filesystem::path& csv_path,
                    const std::filesystem::path& json_path);

}  // namespace extwm
