#pragma once

// Initial data families for the evolution experiments.

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "extwm/grid.hpp"
#include "extwm/harmonic_map.hpp"
#include "extwm/wave.hpp"

namespace extwm {

enum class DataFamily { StaticQPlusBump, DirectDegreeN, PlaneTail, RandomSmooth, CustomTable };

std::string_view to_string(DataFamily f);
DataFamily parse_data_family(std::string_view s);

struct BumpParams {
  double A = 1.0;  ///< position amplitude
  double B = 0.0;  ///< velocity amplitude
  double r_c = 3.0;
  double sigma = 0.5;
};

struct DirectParams {
  double k = 2.0;      ///< psi_0 = n pi (1 - r^{-2})^k
  double B = 0.0;      ///< amplitude of the compactly supported velocity
  double r_c = 3.0;
  double width = 1.5;  ///< half-width of the velocity support
};

struct PlaneTailParams {
  double c1 = 1.0;
  double c2 = 0.0;
  double a = 2.0;            ///< chi = 1 on r >= a, chi = 0 near r = 1
  double outer_cut = 0.0;    ///< > 0: data also cut off smoothly beyond this radius
  double outer_width = 5.0;
};

struct RandomParams {
  std::uint64_t seed = 0;
  int bumps = 3;  ///< per field
  double r_lo = 1.2;
  double r_hi = 6.0;
  double amp = 0.1;
  double width_min = 0.3;
  double width_max = 1.5;
};

struct DataParams {
  BumpParams bump{};
  DirectParams direct{};
  PlaneTailParams plane{};
  RandomParams random{};
  std::filesystem::path table{};  ///< CSV `r,pos,vel` for CustomTable
  double energy_cap = 0.0;        ///< > 0: reject data above this energy
  double margin = 2.0;            ///< safety distance subtracted from the clean region
};

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);

/// exp(1 - 1/(1 - x^2)) on |x| < 1, zero outside; peak value 1 at x = 0.
double compact_bump(double x);

/// Radius beyond which pos - (background) and vel vanish, or a negative value
/// when the data are not compactly perturbed. CustomTable reports -1 here;
/// make_initial_data measures where the table meets (Q_n, 0).
double data_support_radius(DataFamily family, const DataParams& params);

/// Builds the initial WaveState in the requested formulation. PSI data are
/// generated first and converted when `form` is U, except PlaneTail which is
/// defined directly in U form. `profile` is required for every family except
/// PlaneTail (and must have degree n).
/// Throws ConfigError on a nonzero value at r = 1, an energy above the cap,
/// missing profile or an unreadable table (IoError).
WaveState make_initial_data(DataFamily family, const DataParams& params, const RadialGrid& grid,
                            int n, Formulation form, const HarmonicMapProfile* profile);

}  // namespace extwm
