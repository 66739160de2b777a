#include "extwm/energy.hpp"

#include <cmath>

#include <fmt/format.h>

#include "extwm/errors.hpp"

namespace extwm {
namespace {

void require(const WaveState& s, Formulation f, const char* who) {
  if (s.form != f) {
    throw ConfigError(fmt::format("{}: expected {} form, got {}", who, to_string(f), to_string(s.form)));
  }
}

std::vector<double> wave_map_density(const WaveState& psi) {
  const auto dr = fd::first_derivative(psi.pos, psi.grid.h());
  std::vector<double> dens(psi.pos.size());
  for (std::size_t i = 0; i < dens.size(); ++i) {
    const double r = psi.grid.r(i);
    const double s = std::sin(psi.pos[i]);
    dens[i] = 0.5 * (psi.vel[i] * psi.vel[i] * r * r + dr[i] * dr[i] * r * r + 2.0 * s * s);
  }
  return dens;
}

// (u_r^2 + u_t^2) r^4 at every node
std::vector<double> h_density(const WaveState& u) {
  const auto dr = fd::first_derivative(u.pos, u.grid.h());
  std::vector<double> dens(u.pos.size());
  for (std::size_t i = 0; i < dens.size(); ++i) {
    const double r2 = u.grid.r(i) * u.grid.r(i);
    dens[i] = (dr[i] * dr[i] + u.vel[i] * u.vel[i]) * r2 * r2;
  }
  return dens;
}

}  // namespace

double newton_tail_norm_sq(const NewtonTail& tail, double R) {
  // int_R^inf 9 c^2 r^{-4} dr = 3 c^2 R^{-3};  int_R^inf c^2 r^{-2} dr = c^2 / R
  return 3.0 * tail.c_pos * tail.c_pos / (R * R * R) + tail.c_vel * tail.c_vel / R;
}

double total_energy(const WaveState& psi) {
  require(psi, Formulation::Psi, "total_energy");
  return quad::integrate(psi.grid, wave_map_density(psi));
}

double local_energy(const WaveState& psi, double A) {
  require(psi, Formulation::Psi, "local_energy");
  return quad::integrate(psi.grid, wave_map_density(psi), psi.grid.r_min(), A);
}

double h_norm(const WaveState& u, double lo, double hi, const std::optional<NewtonTail>& tail) {
  require(u, Formulation::U, "h_norm");
  double sq = quad::integrate(u.grid, h_density(u), lo, hi);
  if (tail && hi >= u.grid.r_max()) sq += newton_tail_norm_sq(*tail, u.grid.r_max());
  return std::sqrt(std::max(sq, 0.0));
}

double h_norm(const WaveState& u) { return h_norm(u, u.grid.r_min(), u.grid.r_max()); }

LinearEnergy linear_energy_with_potential(const WaveState& u, const PotentialPack& pack) {
  require(u, Formulation::U, "linear_energy_with_potential");
  auto dens = h_density(u);
  std::vector<double> full(dens.size());
  for (std::size_t i = 0; i < dens.size(); ++i) {
    const double r2 = u.grid.r(i) * u.grid.r(i);
    full[i] = 0.5 * (dens[i] + pack.V[i] * u.pos[i] * u.pos[i] * r2 * r2);
  }
  LinearEnergy out;
  out.value = quad::integrate(u.grid, full);
  const double half_h2 = 0.5 * quad::integrate(u.grid, dens);
  out.ratio = half_h2 > 0.0 ? out.value / half_h2 : 0.0;
  return out;
}

double exterior_energy(const WaveState& u, double a, double t0) {
  require(u, Formulation::U, "exterior_energy");
  const double lo = a + std::abs(u.t - t0);
  const double hi = u.causal_horizon();
  if (!(lo < hi)) {
    throw ConfigError(fmt::format(
        "exterior_energy: cone boundary r = {} lies outside the clean region (horizon {})", lo, hi));
  }
  return quad::integrate(u.grid, h_density(u), lo, hi);
}

double l6_norm(const WaveState& u) {
  require(u, Formulation::U, "l6_norm");
  std::vector<double> dens(u.pos.size());
  for (std::size_t i = 0; i < dens.size(); ++i) {
    const double v = u.pos[i];
    const double r2 = u.grid.r(i) * u.grid.r(i);
    dens[i] = v * v * v * v * v * v * r2 * r2;
  }
  return std::pow(std::max(quad::integrate(u.grid, dens), 0.0), 1.0 / 6.0);
}

double local_distance_to_Q(const WaveState& state, const HarmonicMapProfile& profile, double A) {
  if (A > state.causal_horizon()) {
    throw ConfigError(fmt::format("local_distance_to_Q: A = {} beyond the causal horizon {}", A,
                                  state.causal_horizon()));
  }
  const std::size_t m = state.pos.size();
  std::vector<double> phi(m), phit(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = state.grid.r(i);
    if (state.form == Formulation::Psi) {
      phi[i] = state.pos[i] - profile.evaluate(r).Q;
      phit[i] = state.vel[i];
    } else {
      phi[i] = r * state.pos[i];
      phit[i] = r * state.vel[i];
    }
  }
  phi.front() = 0.0;
  const auto dphi = fd::first_derivative(phi, state.grid.h());
  std::vector<double> dens(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = state.grid.r(i);
    dens[i] = (dphi[i] * dphi[i] + phit[i] * phit[i]) * r * r;
  }
  return std::sqrt(std::max(quad::integrate(state.grid, dens, state.grid.r_min(), A), 0.0));
}

double conserved_energy(const WaveState& state, UModel model, const HarmonicMapProfile& profile,
                        const PotentialPack* pack) {
  if (state.form == Formulation::Psi) return total_energy(state);
  switch (model) {
    case UModel::Full: return total_energy(convert(state, profile));
    case UModel::Linear:
      if (!pack) throw ConfigError("conserved_energy: linear model needs the potential");
      return linear_energy_with_potential(state, *pack).value;
    case UModel::Free: {
      const double h = h_norm(state);
      return 0.5 * h * h;
    }
  }
  return 0.0;
}

EnergyReport& scattering_norm_update(EnergyReport& report, const WaveState& u, double dt_sample) {
  report.L6 = l6_norm(u);
  report.S_accum += report.L6 * report.L6 * report.L6 * dt_sample;
  return report;
}

double scattering_norm(const EnergyReport& report) { return std::cbrt(report.S_accum); }

DiagnosticsRecorder::DiagnosticsRecorder(const HarmonicMapProfile& profile, DiagnosticsConfig cfg,
                                         const PotentialPack* pack)
    : profile_(&profile), cfg_(std::move(cfg)), pack_(pack) {}

void DiagnosticsRecorder::operator()(const WaveState& state) {
  EnergyReport rep;
  rep.t = state.t;
  const WaveState psi = state.form == Formulation::Psi ? state : convert(state, *profile_);
  const WaveState u = state.form == Formulation::U ? state : convert(state, *profile_);
  const UModel model = state.form == Formulation::Psi ? UModel::Full : cfg_.model;

  rep.E_total = conserved_energy(state, model, *profile_, pack_);
  switch (model) {
    case UModel::Full: rep.E_local = local_energy(psi, cfg_.A_local); break;
    case UModel::Free: {
      const double h = h_norm(u, u.grid.r_min(), cfg_.A_local);
      rep.E_local = 0.5 * h * h;
      break;
    }
    case UModel::Linear: {
      WaveState clipped = u;
      for (std::size_t i = 0; i < clipped.pos.size(); ++i) {
        if (clipped.grid.r(i) > cfg_.A_local + clipped.grid.h()) {
          clipped.pos[i] = 0.0;
          clipped.vel[i] = 0.0;
        }
      }
      rep.E_local = linear_energy_with_potential(clipped, *pack_).value;
      break;
    }
  }
  rep.dist_Q_local = local_distance_to_Q(state, *profile_, cfg_.A_local);
  for (double a : cfg_.a_values) rep.E_ext.push_back(exterior_energy(u, a, state.t0));

  const double dt = reports_.empty() ? 0.0 : state.t - reports_.back().t;
  rep.S_accum = reports_.empty() ? 0.0 : reports_.back().S_accum;
  scattering_norm_update(rep, u, dt);
  reports_.push_back(std::move(rep));
}

}  // namespace extwm
