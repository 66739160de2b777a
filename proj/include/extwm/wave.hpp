#pragma once

// Method-of-lines evolution of the exterior equivariant wave map.
//
//   PSI form:  psi_tt = psi_rr + (2/r) psi_r - sin(2 psi)/r^2,  psi(t,1) = 0
//   U form:    u_tt   = u_rr + (4/r) u_r - V u + F(r,u) + G(r,u), u(t,1) = 0
//
// with u = (psi - Q_n)/r. Both are discretized with fourth-order stencils on a
// uniform grid in r and advanced with classical RK4. The outer end of the grid
// is a Dirichlet boundary pinned to the initial value; results are trusted
// only inside the causal horizon, which shrinks at unit speed.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "extwm/grid.hpp"
#include "extwm/harmonic_map.hpp"

namespace extwm {

enum class Formulation { Psi, U };

std::string_view to_string(Formulation f);
Formulation parse_formulation(std::string_view s);

struct WaveState {
  RadialGrid grid;
  double t = 0.0;
  double t0 = 0.0;  ///< reference time of the initial data
  Formulation form = Formulation::Psi;
  int n = 0;
  std::vector<double> pos;
  std::vector<double> vel;
  double inner_value = 0.0;  ///< pinned pos at r_min
  double outer_value = 0.0;  ///< pinned pos at r_max
  /// Radius of the clean region at t = t0; boundary influence moves in at unit speed.
  double horizon_base = 0.0;

  /// Radius beyond which the outer boundary (or the truncation of the data)
  /// may have influenced the solution.
  double causal_horizon() const;

  static WaveState zeros(const RadialGrid& grid, Formulation form, int n);
};

/// Potential and cached trigonometric factors of Q_n on a grid.
struct PotentialPack {
  std::vector<double> V;      ///< 2 (cos 2Q - 1) / r^2
  std::vector<double> sin2Q;
  std::vector<double> cos2Q;

  static PotentialPack build(const RadialGrid& grid, const HarmonicMapProfile& profile);
};

/// Which terms of the u equation are active.
enum class UModel {
  Full,    ///< -V u + F + G
  Linear,  ///< -V u only
  Free,    ///< free 5d radial wave
};

std::string_view to_string(UModel m);
UModel parse_umodel(std::string_view s);

/// F(r,u) = 2 sin(2Q) sin^2(r u) / r^3
double nonlinearity_F(double r, double u, double sin2Q);
/// G(r,u) = cos(2Q) (2 r u - sin(2 r u)) / r^3
double nonlinearity_G(double r, double u, double cos2Q);

/// Semi-discrete right-hand side: acceleration as a function of position.
/// Boundary rows are zero.
class WaveOperator {
 public:
  virtual ~WaveOperator() = default;
  virtual void acceleration(std::span<const double> pos, std::span<double> acc) const = 0;
  virtual const RadialGrid& grid() const = 0;
};

class PsiOperator final : public WaveOperator {
 public:
  explicit PsiOperator(RadialGrid grid);
  void acceleration(std::span<const double> pos, std::span<double> acc) const override;
  const RadialGrid& grid() const override { return grid_; }

 private:
  RadialGrid grid_;
  std::vector<double> inv_r_;
};

class UOperator final : public WaveOperator {
 public:
  UOperator(RadialGrid grid, PotentialPack pack, UModel model);
  void acceleration(std::span<const double> pos, std::span<double> acc) const override;
  const RadialGrid& grid() const override { return grid_; }
  UModel model() const { return model_; }
  const PotentialPack& pack() const { return pack_; }

 private:
  RadialGrid grid_;
  PotentialPack pack_;
  UModel model_;
  std::vector<double> inv_r_;
};

/// Free radial wave f_tt = f_rr + ((dim - 1)/r) f_r; dim = 1 is the line.
class RadialWaveOperator final : public WaveOperator {
 public:
  RadialWaveOperator(RadialGrid grid, int dim);
  void acceleration(std::span<const double> pos, std::span<double> acc) const override;
  const RadialGrid& grid() const override { return grid_; }

 private:
  RadialGrid grid_;
  int dim_;
  std::vector<double> inv_r_;
};

std::vector<double> rhs_psi(const WaveState& state);
std::vector<double> rhs_u(const WaveState& state, const PotentialPack& pack,
                          UModel model = UModel::Full);

/// Classical RK4 on (pos, vel) with reusable stage buffers.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t size);
  /// Fields this large only arise from an unstable step size.
  static constexpr double kBlowupAmplitude = 1e10;

  /// One step; re-pins the Dirichlet values and throws NumericalAbort on
  /// non-finite values or on amplitudes above kBlowupAmplitude.
  void step(WaveState& state, double dt, const WaveOperator& op);

 private:
  std::vector<double> k1p_, k1v_, k2p_, k2v_, k3p_, k3v_, k4p_, k4v_, tmp_p_;
};

void step_rk4(WaveState& state, double dt, const WaveOperator& op);

struct EvolveOptions {
  double cfl = 0.5;
  double sample_interval = 0.5;  ///< time between observer calls
  /// Largest radius any diagnostic will read; it must stay inside the causal
  /// horizon up to the final time. Negative means the whole grid.
  double required_radius = -1.0;
};

struct EvolveResult {
  std::size_t steps = 0;
  double dt = 0.0;
  std::size_t samples = 0;
};

using Observer = std::function<void(const WaveState&)>;

/// Checks the causal-window inequality for a run of length T.
void check_causal_window(const WaveState& state, double T, const EvolveOptions& opts);

/// Advances `state` by T. The observer runs at t0 and then every
/// sample_interval (the last interval may be shorter). The step size is the
/// largest dt <= cfl h that divides the sample interval.
EvolveResult evolve(WaveState& state, double T, const WaveOperator& op,
                    const EvolveOptions& opts = {}, const Observer& observer = {});

/// Maps between the formulations: u = (psi - Q_n)/r, u_t = psi_t / r.
WaveState convert(const WaveState& state, const HarmonicMapProfile& profile);

}  // namespace extwm
