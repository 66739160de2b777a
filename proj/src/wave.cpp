#include "extwm/wave.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "extwm/errors.hpp"

namespace extwm {

std::string_view to_string(Formulation f) { return f == Formulation::Psi ? "psi" : "u"; }

Formulation parse_formulation(std::string_view s) {
  if (s == "psi" || s == "PSI") return Formulation::Psi;
  if (s == "u" || s == "U") return Formulation::U;
  throw ConfigError(fmt::format("unknown formulation '{}'", s));
}

std::string_view to_string(UModel m) {
  switch (m) {
    case UModel::Full: return "full";
    case UModel::Linear: return "linear";
    case UModel::Free: return "free";
  }
  return "full";
}

UModel parse_umodel(std::string_view s) {
  if (s == "full") return UModel::Full;
  if (s == "linear") return UModel::Linear;
  if (s == "free") return UModel::Free;
  throw ConfigError(fmt::format("unknown u model '{}'", s));
}

double WaveState::causal_horizon() const {
  return std::min(grid.r_max(), horizon_base - std::abs(t - t0));
}

WaveState WaveState::zeros(const RadialGrid& grid, Formulation form, int n) {
  WaveState s;
  s.grid = grid;
  s.form = form;
  s.n = n;
  s.pos.assign(grid.size(), 0.0);
  s.vel.assign(grid.size(), 0.0);
  s.horizon_base = 2.0 * grid.r_max();
  return s;
}

PotentialPack PotentialPack::build(const RadialGrid& grid, const HarmonicMapProfile& profile) {
  PotentialPack p;
  const std::size_t m = grid.size();
  p.V.resize(m);
  p.sin2Q.resize(m);
  p.cos2Q.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = grid.r(i);
    // Q = n pi - d, so sin 2Q = -sin 2d and cos 2Q - 1 = -2 sin^2 d
    const double d = profile.deficit(r);
    const double sd = std::sin(d);
    p.V[i] = -4.0 * sd * sd / (r * r);
    p.sin2Q[i] = -std::sin(2.0 * d);
    p.cos2Q[i] = std::cos(2.0 * d);
  }
  return p;
}

double nonlinearity_F(double r, double u, double sin2Q) {
  const double s = std::sin(r * u);
  return 2.0 * sin2Q * s * s / (r * r * r);
}

double nonlinearity_G(double r, double u, double cos2Q) {
  const double y = 2.0 * r * u;
  double diff;
  if (std::abs(y) < 1e-2) {
    const double y2 = y * y;
    diff = y * y2 * (1.0 / 6.0 - y2 * (1.0 / 120.0 - y2 / 5040.0));
  } else {
    diff = y - std::sin(y);
  }
  return cos2Q * diff / (r * r * r);
}

namespace {

std::vector<double> inverse_radii(const RadialGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / grid.r(i);
  return out;
}

// acc[i] = f_rr + k f_r / r at interior nodes; centered loop inlined for speed
void radial_laplacian(std::span<const double> f, double h, double k, std::span<const double> inv_r,
                      std::span<double> acc) {
  const std::size_t n = f.size() - 1;
  const double c2 = 1.0 / (12.0 * h * h), c1 = k / (12.0 * h);
  for (std::size_t i = 2; i + 2 <= n; ++i) {
    const double d2 = c2 * (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]);
    const double d1 = c1 * (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]);
    acc[i] = d2 + d1 * inv_r[i];
  }
  for (std::size_t i : {std::size_t{1}, n - 1}) {
    acc[i] = fd::second_derivative_at(f, h, i) + k * fd::first_derivative_at(f, h, i) * inv_r[i];
  }
  acc[0] = 0.0;
  acc[n] = 0.0;
}

}  // namespace

PsiOperator::PsiOperator(RadialGrid grid) : grid_(grid), inv_r_(inverse_radii(grid)) {}

void PsiOperator::acceleration(std::span<const double> pos, std::span<double> acc) const {
  radial_laplacian(pos, grid_.h(), 2.0, inv_r_, acc);
  const std::size_t n = pos.size() - 1;
  for (std::size_t i = 1; i < n; ++i) acc[i] -= std::sin(2.0 * pos[i]) * inv_r_[i] * inv_r_[i];
}

UOperator::UOperator(RadialGrid grid, PotentialPack pack, UModel model)
    : grid_(grid), pack_(std::move(pack)), model_(model), inv_r_(inverse_radii(grid)) {
  if (model_ != UModel::Free && pack_.V.size() != grid_.size()) {
    throw ConfigError("UOperator: potential pack does not match the grid");
  }
}

void UOperator::acceleration(std::span<const double> pos, std::span<double> acc) const {
  radial_laplacian(pos, grid_.h(), 4.0, inv_r_, acc);
  if (model_ == UModel::Free) return;
  const std::size_t n = pos.size() - 1;
  for (std::size_t i = 1; i < n; ++i) {
    double a = -pack_.V[i] * pos[i];
    if (model_ == UModel::Full) {
      const double r = grid_.r(i);
      a += nonlinearity_F(r, pos[i], pack_.sin2Q[i]) + nonlinearity_G(r, pos[i], pack_.cos2Q[i]);
    }
    acc[i] += a;
  }
}

RadialWaveOperator::RadialWaveOperator(RadialGrid grid, int dim)
    : grid_(grid), dim_(dim), inv_r_(inverse_radii(grid)) {
  if (dim < 1) throw ConfigError("RadialWaveOperator: dimension must be >= 1");
  if (dim > 1 && grid.r_min() <= 0.0) throw ConfigError("RadialWaveOperator: radial grid must avoid r = 0");
}

void RadialWaveOperator::acceleration(std::span<const double> pos, std::span<double> acc) const {
  if (dim_ == 1) {
    fd::second_derivative_interior(pos, grid_.h(), acc);
    acc[0] = 0.0;
    acc[pos.size() - 1] = 0.0;
    return;
  }
  radial_laplacian(pos, grid_.h(), static_cast<double>(dim_ - 1), inv_r_, acc);
}

std::vector<double> rhs_psi(const WaveState& state) {
  if (state.form != Formulation::Psi) throw ConfigError("rhs_psi: state is not in PSI form");
  std::vector<double> acc(state.pos.size());
  PsiOperator(state.grid).acceleration(state.pos, acc);
  return acc;
}

std::vector<double> rhs_u(const WaveState& state, const PotentialPack& pack, UModel model) {
  if (state.form != Formulation::U) throw ConfigError("rhs_u: state is not in U form");
  std::vector<double> acc(state.pos.size());
  UOperator(state.grid, pack, model).acceleration(state.pos, acc);
  return acc;
}

Rk4Stepper::Rk4Stepper(std::size_t size)
    : k1p_(size), k1v_(size), k2p_(size), k2v_(size), k3p_(size), k3v_(size), k4p_(size),
      k4v_(size), tmp_p_(size) {}

void Rk4Stepper::step(WaveState& state, double dt, const WaveOperator& op) {
  const std::size_t m = state.pos.size();
  auto& p = state.pos;
  auto& v = state.vel;
  // stage 1
  for (std::size_t i = 0; i < m; ++i) k1p_[i] = v[i];
  op.acceleration(p, k1v_);
  // stage 2
  for (std::size_t i = 0; i < m; ++i) {
    tmp_p_[i] = p[i] + 0.5 * dt * k1p_[i];
    k2p_[i] = v[i] + 0.5 * dt * k1v_[i];
  }
  op.acceleration(tmp_p_, k2v_);
  // stage 3
  for (std::size_t i = 0; i < m; ++i) {
    tmp_p_[i] = p[i] + 0.5 * dt * k2p_[i];
    k3p_[i] = v[i] + 0.5 * dt * k2v_[i];
  }
  op.acceleration(tmp_p_, k3v_);
  // stage 4
  for (std::size_t i = 0; i < m; ++i) {
    tmp_p_[i] = p[i] + dt * k3p_[i];
    k4p_[i] = v[i] + dt * k3v_[i];
  }
  op.acceleration(tmp_p_, k4v_);
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < m; ++i) {
    p[i] += w * (k1p_[i] + 2.0 * k2p_[i] + 2.0 * k3p_[i] + k4p_[i]);
    v[i] += w * (k1v_[i] + 2.0 * k2v_[i] + 2.0 * k3v_[i] + k4v_[i]);
  }
  p.front() = state.inner_value;
  p.back() = state.outer_value;
  v.front() = 0.0;
  v.back() = 0.0;
  state.t += dt;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(p[i]) || !std::isfinite(v[i])) {
      throw NumericalAbort(fmt::format("non-finite field at node {} (r = {}) at t = {}", i,
                                       state.grid.r(i), state.t),
                           i, state.t);
    }
    if (std::abs(p[i]) > kBlowupAmplitude || std::abs(v[i]) > kBlowupAmplitude) {
      throw NumericalAbort(fmt::format("field exceeds {:g} at node {} (r = {}) at t = {}",
                                       kBlowupAmplitude, i, state.grid.r(i), state.t),
                           i, state.t);
    }
  }
}

void step_rk4(WaveState& state, double dt, const WaveOperator& op) {
  Rk4Stepper(state.pos.size()).step(state, dt, op);
}

void check_causal_window(const WaveState& state, double T, const EvolveOptions& opts) {
  const double required = opts.required_radius < 0.0 ? state.grid.r_max() : opts.required_radius;
  WaveState probe_time;
  probe_time.grid = state.grid;
  probe_time.t0 = state.t0;
  probe_time.t = state.t + T;
  probe_time.horizon_base = state.horizon_base;
  const double horizon = probe_time.causal_horizon();
  if (horizon < required - 1e-9) {
    throw ConfigError(fmt::format(
        "causal window violated: at t = {} the clean region ends at r = {} but diagnostics need r = {}",
        state.t + T, horizon, required));
  }
}

EvolveResult evolve(WaveState& state, double T, const WaveOperator& op, const EvolveOptions& opts,
                    const Observer& observer) {
  if (!(T >= 0.0)) throw ConfigError("evolve: duration must be nonnegative");
  if (!(opts.cfl > 0.0 && opts.cfl <= 1.0)) throw ConfigError("evolve: cfl must lie in (0, 1]");
  if (!(opts.sample_interval > 0.0)) throw ConfigError("evolve: sample interval must be positive");
  if (!(op.grid() == state.grid)) throw ConfigError("evolve: operator grid differs from state grid");
  check_causal_window(state, T, opts);

  const double h = state.grid.h();
  const double dt_max = opts.cfl * h;
  auto steps_for = [&](double len) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / dt_max - 1e-9)));
  };
  const std::size_t per_sample = steps_for(opts.sample_interval);
  const double dt = opts.sample_interval / static_cast<double>(per_sample);

  EvolveResult res;
  res.dt = dt;
  Rk4Stepper stepper(state.pos.size());
  if (observer) {
    observer(state);
    ++res.samples;
  }
  const double t_start = state.t;
  const auto full = static_cast<std::size_t>(std::floor(T / opts.sample_interval + 1e-9));
  for (std::size_t k = 1; k <= full; ++k) {
    for (std::size_t j = 0; j < per_sample; ++j) stepper.step(state, dt, op);
    res.steps += per_sample;
    state.t = t_start + static_cast<double>(k) * opts.sample_interval;
    if (observer) {
      observer(state);
      ++res.samples;
    }
  }
  const double rest = T - static_cast<double>(full) * opts.sample_interval;
  if (rest > 1e-12 * std::max(1.0, T)) {
    const std::size_t m = steps_for(rest);
    const double dt_rest = rest / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) stepper.step(state, dt_rest, op);
    res.steps += m;
    state.t = t_start + T;
    if (observer) {
      observer(state);
      ++res.samples;
    }
  }
  return res;
}

WaveState convert(const WaveState& state, const HarmonicMapProfile& profile) {
  if (profile.degree() != state.n) {
    throw ConfigError(fmt::format("convert: profile degree {} does not match state degree {}",
                                  profile.degree(), state.n));
  }
  if (state.grid.r_min() < 1.0) throw ConfigError("convert: grid must satisfy r >= 1");
  WaveState out = state;
  const std::size_t m = state.pos.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double r = state.grid.r(i);
    const double Q = profile.evaluate(r).Q;
    if (state.form == Formulation::Psi) {
      out.pos[i] = (state.pos[i] - Q) / r;
      out.vel[i] = state.vel[i] / r;
    } else {
      out.pos[i] = Q + r * state.pos[i];
      out.vel[i] = r * state.vel[i];
    }
  }
  const double r1 = state.grid.r_max();
  // Both problems carry a homogeneous Dirichlet condition at r = 1; Q_n(1)
  // vanishes only to root tolerance, so the inner value is pinned explicitly.
  out.inner_value = 0.0;
  if (state.form == Formulation::Psi) {
    out.form = Formulation::U;
    out.outer_value = (state.outer_value - profile.evaluate(r1).Q) / r1;
  } else {
    out.form = Formulation::Psi;
    out.outer_value = profile.evaluate(r1).Q + r1 * state.outer_value;
  }
  out.pos.front() = out.inner_value;
  out.pos.back() = out.outer_value;
  return out;
}

}  // namespace extwm
