#pragma once

// Rigidity observables v0 = r^3 u, v1 = r int_r^inf u_t rho d rho and the
// tail coefficient of v0.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "extwm/channels.hpp"
#include "extwm/wave.hpp"

namespace extwm {

std::vector<double> compute_v0(const WaveState& u);

/// Throws ConfigError for a declared tail that is not integrable (power <= 2).
std::vector<double> compute_v1(const WaveState& u, const std::optional<PowerTail>& tail = {});

struct TailFit {
  double ell0 = 0.0;
  double beta = 0.0;
  double p = 0.0;  ///< decay exponent of v0 - ell0
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual = 0.0;  ///< RMS misfit over the window nodes
  std::vector<std::string> flags;  ///< narrow_window, non_monotone, no_decay
};

struct FitOptions {
  double p_min = 0.25;
  double p_max = 10.0;
  double p_scan_step = 0.05;
  double p_tol = 1e-10;
  std::size_t min_nodes = 10;
  double min_ratio = 1.5;  ///< window_hi / window_lo below this is flagged narrow
};

/// Fits v0(r) = ell0 + beta r^{-p} by least squares over the window nodes.
/// For fixed p the problem is linear; p is found by a scan and golden-section
/// refinement. The window defaults to [r_max/3, 2 r_max/3] and is clipped to
/// the causal horizon. Throws ConfigError for an empty window.
TailFit estimate_ell0(const WaveState& u, std::optional<std::pair<double, double>> window = {},
                      const FitOptions& opts = {});

/// Same fit on explicit samples.
TailFit fit_power_tail(const std::vector<double>& r, const std::vector<double>& v0, const FitOptions& opts = {});

nlohmann::json to_json(const TailFit& fit);

}  // namespace extwm
