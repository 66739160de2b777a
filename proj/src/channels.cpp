#include "extwm/channels.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "extwm/errors.hpp"

namespace extwm {
namespace {

void require_u(const WaveState& s, const char* who) {
  if (s.form != Formulation::U) throw ConfigError(fmt::format("{}: expected U form", who));
}

void check_radius(const RadialGrid& grid, double a, const char* who) {
  if (!(a >= grid.r_min()) || !(a < grid.r_max())) {
    throw ConfigError(fmt::format("{}: a = {} outside the grid [{}, {}]", who, a, grid.r_min(), grid.r_max()));
  }
}

// Composite Simpson on equally spaced samples; trapezoid for the last panel
// when the count of intervals is odd.
double simpson(std::span<const double> y, double dt) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  std::size_t m = n - 1;
  double acc = 0.0;
  const std::size_t even = m - (m % 2);
  for (std::size_t i = 0; i + 2 <= even; i += 2) acc += dt / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
  if (m % 2) acc += 0.5 * dt * (y[m - 1] + y[m]);
  return acc;
}

bool trailing_plateau(const std::vector<double>& t, const std::vector<double>& e, double T, double frac,
                      double tol, double floor) {
  if (e.empty()) return false;
  const double t_from = t.front() + (1.0 - frac) * T;
  double lo = e.back(), hi = e.back();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (t[i] + 1e-12 >= t_from) {
      lo = std::min(lo, e[i]);
      hi = std::max(hi, e[i]);
    }
  }
  if (std::abs(e.back()) <= floor) return true;
  return hi - lo <= tol * std::abs(e.back());
}

ExteriorSeries run_direction(WaveState state, double a, double c1, double c2, double T,
                             const ExteriorControl& ctrl, double floor) {
  const UOperator op(state.grid, PotentialPack{}, UModel::Free);
  ExteriorSeries out;
  EvolveOptions opts;
  opts.cfl = ctrl.cfl;
  opts.sample_interval = ctrl.sample_interval;
  opts.required_radius = std::min(state.grid.r_max(), a + T);
  evolve(state, T, op, opts, [&](const WaveState& s) {
    out.t.push_back(s.t);
    out.raw.push_back(exterior_energy(s, a, s.t0));
    out.projected.push_back(plane_subtracted_exterior_energy(s, a, c1, c2));
  });
  out.limit = out.projected.back();
  out.plateau = trailing_plateau(out.t, out.projected, T, ctrl.trailing_fraction, ctrl.plateau_tol, floor);
  return out;
}

}  // namespace

ProjectionSplit project_plane(const RadialGrid& grid, std::span<const double> f_in, std::span<const double> g_in,
                              double a, const std::optional<NewtonTail>& tail) {
  check_radius(grid, a, "project_plane");
  if (f_in.size() != grid.size() || g_in.size() != grid.size()) throw ConfigError("project_plane: size mismatch");
  const std::size_t m = grid.size();
  const double R = grid.r_max();

  // With a declared tail the last node belongs to it; the pinned outer
  // boundary zeroes the velocity there.
  std::vector<double> f(f_in.begin(), f_in.end()), g(g_in.begin(), g_in.end());
  if (tail) {
    f.back() = tail->c_pos / (R * R * R);
    g.back() = tail->c_vel / (R * R * R);
  }

  ProjectionSplit p;
  p.a = a;
  p.c1 = a * a * a * quad::interpolate(grid, f, a);
  std::vector<double> sg(m);
  for (std::size_t i = 0; i < m; ++i) sg[i] = grid.r(i) * g[i];
  double moment = quad::integrate(grid, sg, a, R);
  if (tail) moment += tail->c_vel / R;
  p.c2 = a * moment;
  p.norm_pi_sq = 3.0 * p.c1 * p.c1 / (a * a * a) + p.c2 * p.c2 / a;

  const auto fr = fd::first_derivative(f, grid.h());
  std::vector<double> total(m), perp(m);
  p.f_perp.resize(m);
  p.g_perp.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = grid.r(i), r2 = r * r, r4 = r2 * r2;
    const double r3inv = 1.0 / (r2 * r);
    p.f_perp[i] = f[i] - p.c1 * r3inv;
    p.g_perp[i] = g[i] - p.c2 * r3inv;
    const double dperp = fr[i] + 3.0 * p.c1 * r3inv / r;
    total[i] = (fr[i] * fr[i] + g[i] * g[i]) * r4;
    perp[i] = (dperp * dperp + p.g_perp[i] * p.g_perp[i]) * r4;
  }
  p.norm_total_sq = quad::integrate(grid, total, a, R);
  p.norm_perp_sq = quad::integrate(grid, perp, a, R);
  if (tail) {
    p.norm_total_sq += newton_tail_norm_sq(*tail, R);
    p.norm_perp_sq += newton_tail_norm_sq({tail->c_pos - p.c1, tail->c_vel - p.c2}, R);
  }
  return p;
}

double exterior_inner_product(const RadialGrid& grid, std::span<const double> f1, std::span<const double> g1,
                              std::span<const double> f2, std::span<const double> g2, double a) {
  const auto d1 = fd::first_derivative(f1, grid.h());
  const auto d2 = fd::first_derivative(f2, grid.h());
  std::vector<double> dens(grid.size());
  for (std::size_t i = 0; i < dens.size(); ++i) {
    const double r2 = grid.r(i) * grid.r(i);
    dens[i] = (d1[i] * d2[i] + g1[i] * g2[i]) * r2 * r2;
  }
  return quad::integrate(grid, dens, a, grid.r_max());
}

double plane_subtracted_exterior_energy(const WaveState& u, double a, double c1, double c2) {
  require_u(u, "plane_subtracted_exterior_energy");
  const double lo = a + std::abs(u.t - u.t0);
  const double hi = u.causal_horizon();
  if (!(lo < hi)) {
    throw ConfigError(fmt::format("exterior cone r > {} lies outside the clean region (horizon {})", lo, hi));
  }
  const double c = c1 + c2 * (u.t - u.t0);
  const auto ur = fd::first_derivative(u.pos, u.grid.h());
  std::vector<double> dens(u.pos.size());
  for (std::size_t i = 0; i < dens.size(); ++i) {
    const double r = u.grid.r(i), r2 = r * r;
    const double r3inv = 1.0 / (r2 * r);
    const double dr = ur[i] + 3.0 * c * r3inv / r;
    const double dt = u.vel[i] - c2 * r3inv;
    dens[i] = (dr * dr + dt * dt) * r2 * r2;
  }
  return quad::integrate(u.grid, dens, lo, hi);
}

double numerical_support(const WaveState& data) {
  for (std::size_t i = data.pos.size(); i-- > 0;) {
    if (data.pos[i] != 0.0 || data.vel[i] != 0.0) {
      return std::min(data.grid.r_max(), data.grid.r(i) + data.grid.h());
    }
  }
  return data.grid.r_min();
}

double clean_exterior_window(const WaveState& data, double a, double support, double margin) {
  const bool compact = support >= 0.0 && support < data.horizon_base;
  const double X = (compact ? std::max(a, support) : a) + margin;
  const double base = data.horizon_base - std::abs(data.t - data.t0);
  return std::max(0.0, std::min(data.grid.r_max() - X, 0.5 * (base - X)));
}

ExteriorEstimate asymptotic_exterior_energy(const WaveState& data, double a, const ExteriorControl& ctrl) {
  require_u(data, "asymptotic_exterior_energy");
  check_radius(data.grid, a, "asymptotic_exterior_energy");
  if (std::abs(data.pos.front()) > 0.0) throw ConfigError("asymptotic_exterior_energy: need f(1) = 0");

  ExteriorEstimate est;
  est.a = a;
  est.split = project_plane(data.grid, data.pos, data.vel, a, ctrl.tail);
  const double window = clean_exterior_window(data, a, numerical_support(data), ctrl.margin);
  est.T = ctrl.T > 0.0 ? ctrl.T : window;
  if (!(est.T > 0.0)) throw ConfigError("asymptotic_exterior_energy: no clean exterior window; enlarge r_max");
  if (est.T > window + 1e-9) {
    throw ConfigError(fmt::format("asymptotic_exterior_energy: T = {} exceeds the clean window {}", est.T, window));
  }

  const double floor = 1e-12 * std::max(est.split.norm_total_sq, 1e-300);
  est.forward = run_direction(data, a, est.split.c1, est.split.c2, est.T, ctrl, floor);
  WaveState reversed = data;
  for (auto& v : reversed.vel) v = -v;
  est.backward = run_direction(reversed, a, est.split.c1, -est.split.c2, est.T, ctrl, floor);

  est.E_plus = est.forward.limit;
  est.E_minus = est.backward.limit;
  est.plateau_plus = est.forward.plateau;
  est.plateau_minus = est.backward.plateau;
  est.plane_data = !(est.split.norm_perp_sq > ctrl.plane_threshold * est.split.norm_total_sq);
  if (!est.plane_data) est.c_ratio = std::max(est.E_plus, est.E_minus) / est.split.norm_perp_sq;
  return est;
}

std::vector<double> transform_w(const WaveState& u) {
  require_u(u, "transform_w");
  const auto ur = fd::first_derivative(u.pos, u.grid.h());
  std::vector<double> w(u.pos.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = u.grid.r(i);
    w[i] = 3.0 * r * u.pos[i] + r * r * ur[i];
  }
  return w;
}

std::vector<double> transform_v(const WaveState& u, const std::optional<PowerTail>& tail) {
  require_u(u, "transform_v");
  const std::size_t m = u.pos.size();
  std::vector<double> su(m);
  for (std::size_t i = 0; i < m; ++i) su[i] = u.grid.r(i) * u.vel[i];
  auto v = quad::cumulative_from_right(u.grid, su);
  if (tail && tail->coef != 0.0) {
    if (!(tail->power > 2.0)) {
      throw ConfigError(fmt::format("velocity tail r^-{} is not integrable against r dr", tail->power));
    }
    const double R = u.grid.r_max();
    const double extra = tail->coef * std::pow(R, 2.0 - tail->power) / (tail->power - 2.0);
    for (auto& x : v) x += extra;
  }
  return v;
}

namespace {

template <class Transform, class Operator>
ReductionResidual reduction_residual(std::span<const WaveState> history, double r_lo, double r_hi,
                                     Transform transform, Operator spatial) {
  if (history.size() < 3) throw ConfigError("reduction residual: need three snapshots");
  const auto& s0 = history[history.size() - 3];
  const auto& s1 = history[history.size() - 2];
  const auto& s2 = history[history.size() - 1];
  const double dt = s1.t - s0.t;
  if (!(dt > 0.0) || std::abs((s2.t - s1.t) - dt) > 1e-9 * dt) {
    throw ConfigError("reduction residual: snapshots must be equally spaced in time");
  }
  if (!(s0.grid == s1.grid) || !(s1.grid == s2.grid)) throw ConfigError("reduction residual: grids differ");
  const auto f0 = transform(s0), f1 = transform(s1), f2 = transform(s2);
  const auto& grid = s1.grid;
  std::vector<double> lap(f1.size(), 0.0);
  spatial(grid, f1, lap);
  ReductionResidual out;
  out.field = f1;
  out.residual.assign(f1.size(), 0.0);
  for (std::size_t i = 1; i + 1 < f1.size(); ++i) {
    const double r = grid.r(i);
    if (r < r_lo - 1e-12 || r > r_hi + 1e-12) continue;
    out.residual[i] = (f2[i] - 2.0 * f1[i] + f0[i]) / (dt * dt) - lap[i];
  }
  std::vector<double> sq(f1.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = out.residual[i] * out.residual[i];
  out.norm = std::sqrt(quad::integrate(grid, sq, r_lo, r_hi));
  return out;
}

}  // namespace

ReductionResidual w_residual(std::span<const WaveState> history, double r_lo, double r_hi) {
  return reduction_residual(
      history, r_lo, r_hi, [](const WaveState& s) { return transform_w(s); },
      [](const RadialGrid& grid, const std::vector<double>& f, std::vector<double>& out) {
        fd::second_derivative_interior(f, grid.h(), out);
      });
}

ReductionResidual v_residual(std::span<const WaveState> history, double r_lo, double r_hi) {
  return reduction_residual(
      history, r_lo, r_hi, [](const WaveState& s) { return transform_v(s); },
      [](const RadialGrid& grid, const std::vector<double>& f, std::vector<double>& out) {
        fd::second_derivative_interior(f, grid.h(), out);
        const auto d1 = fd::first_derivative(f, grid.h());
        for (std::size_t i = 1; i + 1 < f.size(); ++i) out[i] += 2.0 * d1[i] / grid.r(i);
      });
}

namespace {

// One direction of the identity check: evolves `state` (whose w = weight * pos)
// and accumulates the energy drop and the flux through x = a + t.
struct LineRun {
  double E0 = 0.0, ET = 0.0, flux = 0.0;
};

LineRun line_run(WaveState state, const WaveOperator& op, double a, double T, const IdentityControl& ctrl,
                 bool weight_r) {
  const RadialGrid& grid = state.grid;
  const std::size_t m = grid.size();
  auto w_of = [&](const WaveState& s, std::vector<double>& w, std::vector<double>& wt) {
    for (std::size_t i = 0; i < m; ++i) {
      const double k = weight_r ? grid.r(i) : 1.0;
      w[i] = k * s.pos[i];
      wt[i] = k * s.vel[i];
    }
  };
  std::vector<double> w(m), wt(m), dens(m);
  auto exterior = [&](const WaveState& s) {
    w_of(s, w, wt);
    const auto wx = fd::first_derivative(w, grid.h());
    for (std::size_t i = 0; i < m; ++i) dens[i] = 0.5 * (wt[i] * wt[i] + wx[i] * wx[i]);
    const double lo = a + std::abs(s.t - s.t0);
    const double hi = s.causal_horizon();
    if (!(lo < hi)) throw ConfigError("identity check: cone left the clean region");
    return quad::integrate(grid, dens, lo, hi);
  };
  std::vector<double> incoming;
  LineRun out;
  out.E0 = exterior(state);
  EvolveOptions opts;
  opts.cfl = ctrl.cfl;
  const auto samples = static_cast<std::size_t>(2 * std::ceil(T / (2.0 * ctrl.flux_sample)));
  opts.sample_interval = T / static_cast<double>(samples);
  opts.required_radius = a + T;
  evolve(state, T, op, opts, [&](const WaveState& s) {
    w_of(s, w, wt);
    const double x = a + (s.t - s.t0);
    const auto wx = fd::first_derivative(w, grid.h());
    const double q = quad::interpolate(grid, wt, x) + quad::interpolate(grid, wx, x);
    incoming.push_back(q * q);
  });
  out.ET = exterior(state);
  out.flux = 0.5 * simpson(incoming, opts.sample_interval);
  return out;
}

IdentitySide identity_side(const WaveState& data, const WaveOperator& op, double a, double T,
                           const IdentityControl& ctrl, bool weight_r) {
  const RadialGrid& grid = data.grid;
  const std::size_t m = grid.size();
  std::vector<double> w(m), wt(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double k = weight_r ? grid.r(i) : 1.0;
    w[i] = k * data.pos[i];
    wt[i] = k * data.vel[i];
  }
  const auto wx = fd::first_derivative(w, grid.h());
  std::vector<double> sum_sq(m), sq_sum(m);
  for (std::size_t i = 0; i < m; ++i) {
    sum_sq[i] = (wx[i] + wt[i]) * (wx[i] + wt[i]);
    sq_sum[i] = wx[i] * wx[i] + wt[i] * wt[i];
  }
  IdentitySide side;
  side.data_integral = 0.25 * quad::integrate(grid, sum_sq, a, a + 2.0 * T);
  side.lower_bound = 0.25 * quad::integrate(grid, sq_sum, a, a + 2.0 * T);

  const LineRun fwd = line_run(data, op, a, T, ctrl, weight_r);
  WaveState rev = data;
  for (auto& v : rev.vel) v = -v;
  const LineRun bwd = line_run(rev, op, a, T, ctrl, weight_r);
  side.energy_drop = fwd.E0 - fwd.ET;
  side.flux = fwd.flux;
  side.E_plus = fwd.ET;
  side.E_minus = bwd.ET;
  return side;
}

WaveState sample_data(const RadialGrid& grid, const std::function<double(double)>& f,
                      const std::function<double(double)>& g, double margin) {
  WaveState s = WaveState::zeros(grid, Formulation::U, 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s.pos[i] = f(grid.r(i));
    s.vel[i] = g(grid.r(i));
  }
  if (std::abs(s.pos.front()) > 1e-12 || std::abs(s.pos.back()) > 1e-12 || std::abs(s.vel.back()) > 1e-12) {
    throw ConfigError("identity check: data must vanish at both ends of the domain");
  }
  s.pos.front() = s.pos.back() = 0.0;
  s.vel.front() = s.vel.back() = 0.0;
  s.horizon_base = 2.0 * grid.r_max() - numerical_support(s) - margin;
  return s;
}

}  // namespace

IdentityReport exterior_1d_identity_check(const std::function<double(double)>& f,
                                          const std::function<double(double)>& g, double a,
                                          const IdentityControl& ctrl) {
  if (!(a >= 1.0)) throw ConfigError("identity check: a must be at least 1");
  if (!(ctrl.T > 0.0)) throw ConfigError("identity check: T must be positive");
  IdentityReport rep;
  rep.a = a;
  rep.T = ctrl.T;
  constexpr double margin = 2.0;

  const RadialGrid line(ctrl.x_max, ctrl.h, 0.0);
  const WaveState line_data = sample_data(line, f, g, margin);
  rep.line = identity_side(line_data, RadialWaveOperator(line, 1), a, ctrl.T, ctrl, false);

  const RadialGrid radial(ctrl.x_max, ctrl.h, 1.0);
  const WaveState radial_data = sample_data(radial, f, g, margin);
  rep.radial3d = identity_side(radial_data, RadialWaveOperator(radial, 3), a, ctrl.T, ctrl, true);
  return rep;
}

}  // namespace extwm
