#pragma once

// Energies and norms evaluated on WaveState snapshots.

#include <optional>
#include <vector>

#include "extwm/harmonic_map.hpp"
#include "extwm/wave.hpp"

namespace extwm {

/// Data that continue as c r^{-3} beyond the end of the grid.
struct NewtonTail {
  double c_pos = 0.0;
  double c_vel = 0.0;
};

/// Closed-form int_R^inf ((d/dr c_pos r^{-3})^2 + (c_vel r^{-3})^2) r^4 dr.
double newton_tail_norm_sq(const NewtonTail& tail, double R);

/// Wave-map energy 1/2 int (psi_t^2 + psi_r^2 + 2 sin^2(psi)/r^2) r^2 dr on [1, r_max].
double total_energy(const WaveState& psi);

/// Same energy density restricted to r <= A.
double local_energy(const WaveState& psi, double A);

/// sqrt(int_lo^hi (u_r^2 + u_t^2) r^4 dr); the tail, when given, adds the
/// closed-form integral beyond r_max (only if hi >= r_max).
double h_norm(const WaveState& u, double lo, double hi, const std::optional<NewtonTail>& tail = {});
double h_norm(const WaveState& u);

struct LinearEnergy {
  double value = 0.0;  ///< 1/2 int (u_t^2 + u_r^2 + V u^2) r^4 dr
  double ratio = 0.0;  ///< value / (1/2 h_norm^2), or 0 for the zero state
};

LinearEnergy linear_energy_with_potential(const WaveState& u, const PotentialPack& pack);

/// int over r in [a + |t - t0|, causal horizon] of (u_t^2 + u_r^2) r^4 dr.
/// Throws ConfigError if the cone has left the clean region.
double exterior_energy(const WaveState& u, double a, double t0);

/// (int |u|^6 r^4 dr)^{1/6}
double l6_norm(const WaveState& u);

/// ||(psi - Q_n, psi_t)|| in the 3d energy norm over [1, A].
double local_distance_to_Q(const WaveState& psi, const HarmonicMapProfile& profile, double A);

/// Energy conserved by the evolution model: the wave-map energy for PSI
/// states and full U runs (after conversion), E_L for the linear model and
/// 1/2 h_norm^2 for the free model.
double conserved_energy(const WaveState& state, UModel model, const HarmonicMapProfile& profile,
                        const PotentialPack* pack = nullptr);

struct EnergyReport {
  double t = 0.0;
  double E_total = 0.0;
  double E_local = 0.0;
  double dist_Q_local = 0.0;
  std::vector<double> E_ext;  ///< one entry per requested a
  double L6 = 0.0;
  double S_accum = 0.0;
};

/// Adds L6(u)^3 dt_sample to the running scattering integral and stores L6.
EnergyReport& scattering_norm_update(EnergyReport& report, const WaveState& u, double dt_sample);

/// (int L6^3 dt)^{1/3} from the accumulator.
double scattering_norm(const EnergyReport& report);

struct DiagnosticsConfig {
  double A_local = 5.0;
  std::vector<double> a_values{};
  UModel model = UModel::Full;  ///< evolution model, for E_total
};

/// Observer that builds the EnergyReport time series of a run. The
/// scattering accumulator uses the spacing between consecutive samples.
class DiagnosticsRecorder {
 public:
  DiagnosticsRecorder(const HarmonicMapProfile& profile, DiagnosticsConfig cfg,
                      const PotentialPack* pack = nullptr);

  void operator()(const WaveState& state);
  const std::vector<EnergyReport>& reports() const { return reports_; }

 private:
  const HarmonicMapProfile* profile_;
  DiagnosticsConfig cfg_;
  const PotentialPack* pack_;
  std::vector<EnergyReport> reports_;
};

}  // namespace extwm
