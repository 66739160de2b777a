#pragma once

// Orchestration of configured runs and their artifacts.

#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "extwm/channels.hpp"
#include "extwm/config.hpp"
#include "extwm/energy.hpp"
#include "extwm/harmonic_map.hpp"
#include "extwm/wave.hpp"

namespace extwm {

/// Harmonic map for the configured degree and integrator tolerance.
HarmonicMapProfile profile_for(const ExperimentConfig& cfg);

struct EvolutionRun {
  WaveState initial;
  WaveState final;
  std::vector<EnergyReport> reports;
  EvolveResult stats;
};

/// Builds the data, validates the causal window for the requested
/// diagnostics and evolves for cfg.T. `on_sample` sees every sampled state.
EvolutionRun run_evolution(const ExperimentConfig& cfg, const HarmonicMapProfile& profile,
                           const Observer& on_sample = {});

struct RelaxationMetrics {
  double dist_initial = 0.0;
  double dist_final = 0.0;
  double dist_ratio = 0.0;
  double data_norm_sq = 0.0;     ///< ||u(0)||^2 over the whole grid
  double ext_final = 0.0;        ///< E_ext at the first configured a, final time
  double ext_initial = 0.0;      ///< same at t0
  double ext_ratio = 0.0;        ///< ext_final / data_norm_sq
  double ext_ratio_literal = 0.0;  ///< ext_final / ext_initial (NaN when ext_initial = 0)
  bool ext_trend_down = false;
  double energy = 0.0;
  double energy_drift = 0.0;     ///< max |E(t) - E(0)| / E(0)
  double scattering = 0.0;
};

/// Summary numbers of a relaxation run; E_ext uses the first a-value.
RelaxationMetrics relaxation_metrics(const EvolutionRun& run, const HarmonicMapProfile& profile);

/// Windowed means of the series over `windows` equal time windows are
/// non-increasing up to `slack` relative (plus an absolute floor).
bool decreasing_in_trend(const std::vector<double>& t, const std::vector<double>& y, int windows,
                         double slack, double floor);

struct ChannelMember {
  std::uint64_t seed = 0;
  ExteriorEstimate estimate;
};

/// Random compactly supported U-form data for the channel ensemble.
WaveState channel_data(const ExperimentConfig& cfg, const RadialGrid& grid, std::uint64_t seed);

/// One ensemble (members consecutive seeds from data.seed) at grid spacing h.
std::vector<ChannelMember> run_channel_ensemble(const ExperimentConfig& cfg, double h);

/// Runs cfg.experiment, writing artifacts below `out`. Returns the JSON summary
/// that is also written to `out/summary.json`.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Runs one member per sweep value (cfg.sweep_key set to that value) on a
/// pool of `threads` workers, each below `out/member_<k>`, and writes
/// `out/sweep.csv`. Failed members are recorded, not fatal.
nlohmann::json run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out, unsigned threads);

/// Library version reported in summaries.
const char* version();

}  // namespace extwm
