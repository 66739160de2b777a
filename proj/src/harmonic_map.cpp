#include "extwm/harmonic_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "extwm/errors.hpp"
#include "extwm/io.hpp"

namespace extwm {
namespace {

namespace odeint = boost::numeric::odeint;

using Phase = std::array<double, 2>;  // (x - anchor, y), anchor a multiple of pi

constexpr double kPi = std::numbers::pi;

// sin(2x) is pi-periodic, so the flow can be integrated in any frame shifted by
// a multiple of pi; relative tolerances then act on the offset from the saddle.
void pendulum_rhs(const Phase& z, Phase& dz, double /*s*/) {
  dz[0] = z[1];
  dz[1] = -z[1] + std::sin(2.0 * z[0]);
}

class Integrator {
 public:
  explicit Integrator(const StepControl& ctrl)
      : ctrl_(ctrl),
        stepper_(odeint::make_controlled(ctrl.abs_tol, ctrl.rel_tol,
                                         odeint::runge_kutta_dopri5<Phase>())),
        dt_(ctrl.initial_step) {}

  // Advances z from s to s_end exactly; `on_step` sees every accepted step
  // and may return false to stop early. Returns the final s.
  template <class Observer>
  double advance(Phase& z, double s, double s_end, Observer&& on_step) {
    const double dir = s_end >= s ? 1.0 : -1.0;
    dt_ = dir * std::abs(dt_);
    stepper_.reset();
    while (dir * (s_end - s) > 0.0) {
      const double remaining = s_end - s;
      bool last = false;
      double dt = dt_;
      if (std::abs(dt) >= std::abs(remaining)) {
        dt = remaining;
        last = true;
      }
      const double dt_try = dt;
      const auto res = stepper_.try_step(pendulum_rhs, z, s, dt);
      if (res == odeint::fail) {
        if (std::abs(dt) < ctrl_.min_step) {
          throw NumericalError(
              fmt::format("pendulum integration: step size underflow at s = {}", s));
        }
        dt_ = dt;
        continue;
      }
      if (last) s = s_end;
      // keep the controller's suggestion unless the step was clipped
      dt_ = last ? (std::abs(dt) > std::abs(dt_try) ? dt : dt_) : dt;
      if (!std::isfinite(z[0]) || !std::isfinite(z[1]) || std::abs(z[1]) > ctrl_.max_abs_y) {
        throw NumericalError(
            fmt::format("pendulum integration diverged at s = {} (y = {})", s, z[1]));
      }
      if (!on_step(s, z)) break;
    }
    return s;
  }

  void advance(Phase& z, double s, double s_end) {
    advance(z, s, s_end, [](double, const Phase&) { return true; });
  }

 private:
  StepControl ctrl_;
  odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<Phase>> stepper_;
  double dt_;
};

// Largest alpha e^{-2 s_start} whose truncation error stays below the integrator tolerance.
double series_smallness_limit(int order) { return order == 1 ? 1e-8 : 1e-6; }

double series_smallness(const ShootingOptions& opts) {
  return std::min(opts.series_smallness, series_smallness_limit(opts.series_order));
}

// Quintic Hermite interpolation on [0,1] from values, first and second derivatives.
double hermite5(double t, double h, double f0, double d0, double dd0, double f1, double d1,
                double dd1) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double h3 = 10 * t3 - 15 * t4 + 6 * t5;
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h5 = 0.5 * t3 - t4 + 0.5 * t5;
  return f0 * h0 + h * d0 * h1 + h * h * dd0 * h2 + f1 * h3 + h * d1 * h4 + h * h * dd1 * h5;
}

}  // namespace

PhaseRate pendulum_vector_field(const PendulumState& p) {
  return {p.y, -p.y + std::sin(2.0 * p.x)};
}

SaddleLinearization saddle_linearization(int n) {
  if (n < 0) throw ConfigError("saddle_linearization: degree must be nonnegative");
  // Jacobian at (n pi, 0) is [[0, 1], [2 cos(2 n pi), -1]]; cos(2 n pi) = 1
  // for integer n, so lambda^2 + lambda - 2 = 0 independently of n.
  constexpr double coupling = 2.0;
  constexpr double trace = -1.0;
  constexpr double det = -coupling;
  const double disc = std::sqrt(trace * trace - 4.0 * det);
  const double lp = (trace + disc) / 2.0;
  const double lm = (trace - disc) / 2.0;
  SaddleLinearization out;
  out.eigenvalues = {lp, lm};
  out.directions = {{{1.0, lp}, {1.0, lm}}};
  return out;
}

double stable_manifold_e6_coefficient(double alpha) {
  // Write phi = n pi - eps with eps = alpha e^{-2s} + b e^{-6s}; then
  // eps'' + eps' = sin(2 eps) = 2 eps - (4/3) eps^3 + ...
  // The e^{-6s} terms give (36 - 6 - 2) b = -(4/3) alpha^3, and the
  // coefficient of e^{-6s} in phi is -b.
  constexpr double lambda = -6.0;
  const double characteristic = lambda * lambda + lambda - 2.0;
  constexpr double cubic_taylor = 8.0 / 6.0;  // sin(2e) = 2e - (2e)^3/3! + ...
  const double b = -cubic_taylor * alpha * alpha * alpha / characteristic;
  return -b;
}

PendulumState stable_manifold_offset(double alpha, double s, int order) {
  if (order != 1 && order != 2) throw ConfigError("stable_manifold_ic: order must be 1 or 2");
  const double e2 = std::exp(-2.0 * s);
  PendulumState p;
  p.s = s;
  p.x = -alpha * e2;
  p.y = 2.0 * alpha * e2;
  if (order == 2) {
    const double c = stable_manifold_e6_coefficient(alpha);
    const double e6 = e2 * e2 * e2;
    p.x += c * e6;
    p.y += -6.0 * c * e6;
  }
  return p;
}

PendulumState stable_manifold_ic(int n, double alpha, double s_start, int order) {
  if (order != 1 && order != 2) throw ConfigError("stable_manifold_ic: order must be 1 or 2");
  PendulumState p = stable_manifold_offset(alpha, s_start, order);
  p.x += n * kPi;
  return p;
}

std::vector<PendulumState> integrate_pendulum(const PendulumState& p, double s_end,
                                              const StepControl& ctrl) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.s)) {
    throw ConfigError("integrate_pendulum: non-finite initial state");
  }
  const double anchor = std::round(p.x / kPi) * kPi;
  Phase z{p.x - anchor, p.y};
  std::vector<PendulumState> traj{p};
  Integrator integ(ctrl);
  integ.advance(z, p.s, s_end, [&](double s, const Phase& zz) {
    traj.push_back({s, anchor + zz[0], zz[1]});
    return true;
  });
  return traj;
}

ZeroCrossing find_zero_crossing(int n, const ShootingOptions& opts) {
  if (n < 1) throw ConfigError("find_zero_crossing: degree must be >= 1");
  const double anchor = n * kPi;
  const double s_start = 0.5 * std::log(opts.alpha_plus / series_smallness(opts));
  const PendulumState ic = stable_manifold_offset(opts.alpha_plus, s_start, opts.series_order);

  Phase z{ic.x, ic.y};
  double s_prev = s_start;
  Phase z_prev = z;
  bool found = false;
  double s_cross_lo = 0.0;
  {
    Integrator integ(opts.ctrl);
    integ.advance(z, s_start, s_start - opts.backward_window, [&](double s, const Phase& zz) {
      if (anchor + zz[0] <= 0.0) {
        found = true;
        s_cross_lo = s;
        return false;
      }
      s_prev = s;
      z_prev = zz;
      return true;
    });
  }
  if (!found) {
    throw NumericalError(fmt::format(
        "find_zero_crossing: no sign change of phi within {} units of s", opts.backward_window));
  }

  // x(s) on the bracket [s_cross_lo, s_prev], always integrated from the
  // last state with x > 0.
  auto x_at = [&](double s) {
    Phase w = z_prev;
    Integrator integ(opts.ctrl);
    integ.advance(w, s_prev, s);
    return anchor + w[0];
  };

  double lo = s_cross_lo, hi = s_prev;  // x(lo) <= 0 < x(hi)
  double x_lo = x_at(lo), x_hi = anchor + z_prev[0];
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    const double xm = x_at(mid);
    if (xm <= 0.0) {
      lo = mid;
      x_lo = xm;
    } else {
      hi = mid;
      x_hi = xm;
    }
  }
  // secant polish, safeguarded by the bracket
  double a = lo, fa = x_lo, b = hi, fb = x_hi;
  double s0 = 0.5 * (lo + hi);
  for (int it = 0; it < 60; ++it) {
    double cand = b - fb * (b - a) / (fb - fa);
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    const double fc = x_at(cand);
    if (fc <= 0.0) lo = cand; else hi = cand;
    const double step = std::abs(cand - b);
    a = b;
    fa = fb;
    b = cand;
    fb = fc;
    s0 = cand;
    if (step < opts.root_tol || fc == 0.0 || hi - lo < opts.root_tol) break;
  }

  Phase w = z_prev;
  Integrator integ(opts.ctrl);
  integ.advance(w, s_prev, s0);
  ZeroCrossing out;
  out.s0 = s0;
  out.state = {s0, anchor + w[0], w[1]};
  out.s_start = s_start;
  return out;
}

HarmonicMapProfile build_harmonic_map(int n, const ShootingOptions& opts, double r_table_max,
                                      int tail_order) {
  if (n < 0) throw ConfigError("build_harmonic_map: degree must be nonnegative");
  if (!(r_table_max > 1.0)) throw ConfigError("build_harmonic_map: r_table_max must exceed 1");
  if (tail_order != 1 && tail_order != 2) throw ConfigError("build_harmonic_map: tail_order 1 or 2");

  HarmonicMapProfile prof;
  prof.n_ = n;
  prof.r_table_max_ = r_table_max;
  prof.tail_order_ = tail_order;
  prof.ctrl_ = opts.ctrl;
  prof.ds_ = 1.0 / 2048.0;
  const double s_max = std::log(r_table_max);
  auto intervals = static_cast<std::size_t>(std::ceil(s_max / prof.ds_));
  if (intervals % 2 == 1) ++intervals;  // even, for Simpson in energy()
  prof.s_.resize(intervals + 1);
  prof.xi_.assign(intervals + 1, 0.0);
  prof.y_.assign(intervals + 1, 0.0);
  for (std::size_t i = 0; i <= intervals; ++i) prof.s_[i] = static_cast<double>(i) * prof.ds_;
  if (n == 0) return prof;

  const ZeroCrossing zc = find_zero_crossing(n, opts);
  prof.alpha0_ = opts.alpha_plus * std::exp(-2.0 * zc.s0);

  // Re-integrate the translated branch backward from the series region, which
  // is the contracting direction for deviations off the stable manifold.
  const double s_last = prof.s_.back();
  const double s_series =
      std::max(s_last + 1.0, 0.5 * std::log(prof.alpha0_ / series_smallness(opts)));
  const PendulumState ic = stable_manifold_offset(prof.alpha0_, s_series, opts.series_order);
  Phase z{ic.x, ic.y};
  Integrator integ(opts.ctrl);
  integ.advance(z, s_series, s_last);
  prof.xi_[intervals] = z[0];
  prof.y_[intervals] = z[1];
  for (std::size_t i = intervals; i-- > 0;) {
    integ.advance(z, prof.s_[i + 1], prof.s_[i]);
    prof.xi_[i] = z[0];
    prof.y_[i] = z[1];
  }
  return prof;
}

double HarmonicMapProfile::tail_offset(double r) const {
  const double r2 = 1.0 / (r * r);
  double off = -alpha0_ * r2;
  if (tail_order_ == 2) off += stable_manifold_e6_coefficient(alpha0_) * r2 * r2 * r2;
  return off;
}

std::pair<double, double> HarmonicMapProfile::interpolate(double s) const {
  const auto last = s_.size() - 1;
  auto i = static_cast<std::size_t>(s / ds_);
  if (i >= last) i = last - 1;
  const double t = (s - s_[i]) / ds_;
  const double x0 = xi_[i], x1 = xi_[i + 1], y0 = y_[i], y1 = y_[i + 1];
  const double a0 = -y0 + std::sin(2 * x0), a1 = -y1 + std::sin(2 * x1);
  const double j0 = -a0 + 2 * std::cos(2 * x0) * y0, j1 = -a1 + 2 * std::cos(2 * x1) * y1;
  return {hermite5(t, ds_, x0, y0, a0, x1, y1, a1), hermite5(t, ds_, y0, a0, j0, y1, a1, j1)};
}

QValue HarmonicMapProfile::evaluate(double r) const {
  if (!(r >= 1.0)) throw ConfigError(fmt::format("evaluate_Q: r = {} lies inside the unit ball", r));
  if (n_ == 0) return {0.0, 0.0};
  const double npi = n_ * kPi;
  if (r > r_table_max_) {
    const double r2 = 1.0 / (r * r);
    double dQ = 2.0 * alpha0_ * r2 / r;
    if (tail_order_ == 2) dQ += -6.0 * stable_manifold_e6_coefficient(alpha0_) * r2 * r2 * r2 / r;
    return {npi + tail_offset(r), dQ};
  }
  const auto [xi, y] = interpolate(std::log(r));
  return {npi + xi, y / r};
}

double HarmonicMapProfile::deficit(double r) const {
  if (!(r >= 1.0)) throw ConfigError(fmt::format("deficit: r = {} lies inside the unit ball", r));
  if (n_ == 0) return 0.0;
  if (r > r_table_max_) return -tail_offset(r);
  return -interpolate(std::log(r)).first;
}

double HarmonicMapProfile::energy() const {
  if (n_ == 0) return 0.0;
  // 1/2 int (phi'^2 + 2 sin^2 phi) e^s ds, Simpson on the uniform s table
  const std::size_t m = s_.size() - 1;
  auto f = [&](std::size_t i) {
    const double sn = std::sin(xi_[i]);
    return 0.5 * (y_[i] * y_[i] + 2.0 * sn * sn) * std::exp(s_[i]);
  };
  double acc = f(0) + f(m);
  for (std::size_t i = 1; i < m; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(i);
  double e = acc * ds_ / 3.0;
  // r^{-2} tail beyond the table: 1/2 int (4 + 2) alpha^2 r^{-4} dr
  const double R = std::exp(s_.back());
  e += alpha0_ * alpha0_ / (R * R * R);
  return e;
}

QValue evaluate_Q(const HarmonicMapProfile& profile, double r) { return profile.evaluate(r); }

double stationary_residual_max(const HarmonicMapProfile& profile, double r_lo, double r_hi) {
  if (profile.degree() == 0) return 0.0;
  const auto s = profile.s_nodes();
  const auto xi = profile.offsets();
  const auto y = profile.slopes();
  const double c = 1.0 / (12.0 * profile.ds());
  const double s_lo = std::log(r_lo), s_hi = std::log(r_hi);
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < s.size(); ++i) {
    if (s[i] < s_lo - 1e-12 || s[i] > s_hi + 1e-12) continue;
    // with s = log r: Q'' + (2/r) Q' - sin(2Q)/r^2 = (phi'' + phi' - sin 2 phi) / r^2
    const double ydot = c * (y[i - 2] - 8 * y[i - 1] + 8 * y[i + 1] - y[i + 2]);
    const double res = (ydot + y[i] - std::sin(2.0 * xi[i])) * std::exp(-2.0 * s[i]);
    worst = std::max(worst, std::abs(res));
  }
  // the first two nodes use the one-sided form
  if (s_lo <= s[1]) {
    for (std::size_t i : {std::size_t{0}, std::size_t{1}}) {
      const double ydot = i == 0 ? c * (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4])
                                 : c * (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]);
      const double res = (ydot + y[i] - std::sin(2.0 * xi[i])) * std::exp(-2.0 * s[i]);
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

double tail_residual_slope(const HarmonicMapProfile& profile, double r_lo, double r_hi, int samples) {
  if (samples < 2 || !(r_hi > r_lo)) throw ConfigError("tail_residual_slope: bad sampling range");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < samples; ++k) {
    const double x = std::log(r_lo) + (std::log(r_hi) - std::log(r_lo)) * k / (samples - 1);
    const double r = std::exp(x);
    const double yv = std::log(std::abs(r * r * profile.deficit(r) - profile.alpha0()));
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
  }
  const double m = samples;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

bool is_monotone(const HarmonicMapProfile& profile) {
  for (double y : profile.slopes()) {
    if (!(y > 0.0)) return false;
  }
  return true;
}

void export_profile(const HarmonicMapProfile& profile, const std::filesystem::path& csv_path,
                    const std::filesystem::path& json_path) {
  CsvWriter csv(csv_path, {"r", "Q", "Qprime"});
  const auto s = profile.s_nodes();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = std::exp(s[i]);
    const QValue q = profile.evaluate(r);
    csv.row({r, q.Q, q.Qprime});
  }
  csv.close();

  nlohmann::ordered_json j;
  j["n"] = profile.degree();
  j["alpha0"] = profile.alpha0();
  j["energy"] = profile.energy();
  j["r_table_max"] = profile.r_table_max();
  j["tail_order"] = profile.tail_order();
  j["tolerances"] = {{"abs_tol", profile.control().abs_tol},
                     {"rel_tol", profile.control().rel_tol},
                     {"table_ds", profile.ds()}};
  write_json(json_path, j);
}

}  // namespace extwm
