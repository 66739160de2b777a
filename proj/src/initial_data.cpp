#include "extwm/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "extwm/energy.hpp"
#include "extwm/errors.hpp"
#include "extwm/io.hpp"
#include "extwm/rng.hpp"

namespace extwm {

std::string_view to_string(DataFamily f) {
  switch (f) {
    case DataFamily::StaticQPlusBump: return "static_q_plus_bump";
    case DataFamily::DirectDegreeN: return "direct_degree_n";
    case DataFamily::PlaneTail: return "plane_tail";
    case DataFamily::RandomSmooth: return "random_smooth";
    case DataFamily::CustomTable: return "custom_table";
  }
  return "static_q_plus_bump";
}

DataFamily parse_data_family(std::string_view s) {
  for (auto f : {DataFamily::StaticQPlusBump, DataFamily::DirectDegreeN, DataFamily::PlaneTail,
                 DataFamily::RandomSmooth, DataFamily::CustomTable}) {
    if (s == to_string(f)) return f;
  }
  throw ConfigError(fmt::format("unknown data family '{}'", s));
}

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double compact_bump(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

namespace {

// Gaussian factor exp(-(r - r_c)^2 / sigma^2) is below 1e-15 beyond 6 sigma.
constexpr double kGaussianReach = 6.0;

struct Bump {
  double center, width, amp;
};

struct RandomBumps {
  std::vector<Bump> pos, vel;
};

RandomBumps draw_bumps(const RandomParams& p) {
  if (p.bumps < 0) throw ConfigError("random: bump count must be nonnegative");
  if (!(p.r_lo >= 1.0) || !(p.r_hi > p.r_lo)) throw ConfigError("random: need 1 <= r_lo < r_hi");
  if (!(p.width_min > 0.0) || p.width_max < p.width_min) {
    throw ConfigError("random: need 0 < width_min <= width_max");
  }
  if (2.0 * p.width_max > p.r_hi - p.r_lo) {
    throw ConfigError("random: support interval too short for the widest bump");
  }
  Rng rng(p.seed);
  RandomBumps out;
  auto draw = [&](std::vector<Bump>& into) {
    for (int k = 0; k < p.bumps; ++k) {
      Bump b;
      b.width = rng.uniform(p.width_min, p.width_max);
      b.center = rng.uniform(p.r_lo + b.width, p.r_hi - b.width);
      b.amp = rng.uniform(-p.amp, p.amp);
      into.push_back(b);
    }
  };
  draw(out.pos);
  draw(out.vel);
  return out;
}

double sum_bumps(const std::vector<Bump>& bumps, double r) {
  double acc = 0.0;
  for (const auto& b : bumps) acc += b.amp * compact_bump((r - b.center) / b.width);
  return acc;
}

// Cubic Lagrange interpolation on a strictly increasing, possibly nonuniform table.
double table_value(const std::vector<double>& x, const std::vector<double>& y, double r) {
  const std::size_t m = x.size();
  auto it = std::upper_bound(x.begin(), x.end(), r);
  std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  std::size_t j0 = i == 0 ? 0 : i - 1;
  if (j0 + 4 > m) j0 = m - 4;
  double acc = 0.0;
  for (std::size_t a = j0; a < j0 + 4; ++a) {
    double l = 1.0;
    for (std::size_t b = j0; b < j0 + 4; ++b) {
      if (b != a) l *= (r - x[b]) / (x[a] - x[b]);
    }
    acc += l * y[a];
  }
  return acc;
}

void fill_custom(WaveState& s, const std::filesystem::path& path) {
  const CsvTable tab = read_csv(path);
  const auto r = tab.column("r");
  const auto pos = tab.column("pos");
  const auto vel = tab.column("vel");
  if (r.size() < 4) throw ConfigError(fmt::format("{}: need at least 4 rows", path.string()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]) || !std::isfinite(pos[i]) || !std::isfinite(vel[i])) {
      throw ConfigError(fmt::format("{}:{}: empty or non-finite value", path.string(), tab.lines[i]));
    }
  }
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(r[i] > r[i - 1])) throw ConfigError(fmt::format("{}: r must increase strictly", path.string()));
  }
  const double tol = 1e-12 * s.grid.r_max();
  if (r.front() > s.grid.r_min() + tol || r.back() < s.grid.r_max() - tol) {
    throw ConfigError(fmt::format("{}: table covers [{}, {}] but the grid needs [{}, {}]", path.string(),
                                  r.front(), r.back(), s.grid.r_min(), s.grid.r_max()));
  }
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    s.pos[i] = table_value(r, pos, s.grid.r(i));
    s.vel[i] = table_value(r, vel, s.grid.r(i));
  }
}

}  // namespace

namespace {

// Radius beyond which a tabulated PSI state equals (Q_n, 0) to 1e-10
// relative; -1 when it never does.
double measured_support(const WaveState& s, const HarmonicMapProfile& profile) {
  std::vector<double> dev(s.pos.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    dev[i] = std::max(std::abs(s.pos[i] - profile.evaluate(s.grid.r(i)).Q), std::abs(s.vel[i]));
    scale = std::max(scale, dev[i]);
  }
  std::size_t last = 0;
  for (std::size_t i = 0; i < dev.size(); ++i)
    if (dev[i] > 1e-10 * scale) last = i;
  return last + 1 < dev.size() ? s.grid.r(last + 1) : -1.0;
}

}  // namespace

double data_support_radius(DataFamily family, const DataParams& p) {
  switch (family) {
    case DataFamily::StaticQPlusBump:
      return p.bump.r_c + kGaussianReach * p.bump.sigma;
    case DataFamily::DirectDegreeN:
    case DataFamily::CustomTable:
      return -1.0;
    case DataFamily::PlaneTail:
      return p.plane.outer_cut > 0.0 ? p.plane.outer_cut + p.plane.outer_width : -1.0;
    case DataFamily::RandomSmooth:
      return p.random.r_hi;
  }
  return -1.0;
}

WaveState make_initial_data(DataFamily family, const DataParams& p, const RadialGrid& grid, int n,
                            Formulation form, const HarmonicMapProfile* profile) {
  if (n < 0) throw ConfigError("initial data: degree must be nonnegative");
  if (family != DataFamily::PlaneTail) {
    if (!profile) throw ConfigError(fmt::format("initial data: {} needs a harmonic map", to_string(family)));
    if (profile->degree() != n) throw ConfigError("initial data: profile degree differs from n");
  }
  const std::size_t m = grid.size();
  const double npi = n * std::numbers::pi;

  WaveState s = WaveState::zeros(grid, family == DataFamily::PlaneTail ? Formulation::U : Formulation::Psi, n);
  switch (family) {
    case DataFamily::StaticQPlusBump: {
      const auto& b = p.bump;
      if (!(b.sigma > 0.0)) throw ConfigError("bump: sigma must be positive");
      for (std::size_t i = 0; i < m; ++i) {
        const double r = grid.r(i);
        const double z = (r - b.r_c) / b.sigma;
        const double shape = (r - 1.0) * std::exp(-z * z);
        s.pos[i] = profile->evaluate(r).Q + b.A * shape;
        s.vel[i] = b.B * shape;
      }
      break;
    }
    case DataFamily::DirectDegreeN: {
      const auto& d = p.direct;
      if (!(d.k >= 1.0)) throw ConfigError("direct: k must be at least 1");
      if (!(d.width > 0.0) || d.r_c - d.width < 1.0) {
        throw ConfigError("direct: velocity support must lie in r >= 1");
      }
      for (std::size_t i = 0; i < m; ++i) {
        const double r = grid.r(i);
        s.pos[i] = npi * std::pow(1.0 - 1.0 / (r * r), d.k);
        s.vel[i] = d.B * compact_bump((r - d.r_c) / d.width);
      }
      break;
    }
    case DataFamily::PlaneTail: {
      const auto& pl = p.plane;
      if (!(pl.a > grid.r_min())) throw ConfigError("plane tail: a must exceed r_min");
      for (std::size_t i = 0; i < m; ++i) {
        const double r = grid.r(i);
        double chi = smooth_step((r - grid.r_min()) / (pl.a - grid.r_min()));
        if (pl.outer_cut > 0.0) chi *= 1.0 - smooth_step((r - pl.outer_cut) / pl.outer_width);
        const double r3 = 1.0 / (r * r * r);
        s.pos[i] = pl.c1 * r3 * chi;
        s.vel[i] = pl.c2 * r3 * chi;
      }
      break;
    }
    case DataFamily::RandomSmooth: {
      const auto bumps = draw_bumps(p.random);
      for (std::size_t i = 0; i < m; ++i) {
        const double r = grid.r(i);
        s.pos[i] = profile->evaluate(r).Q + sum_bumps(bumps.pos, r);
        s.vel[i] = sum_bumps(bumps.vel, r);
      }
      break;
    }
    case DataFamily::CustomTable:
      fill_custom(s, p.table);
      break;
  }

  if (std::abs(s.pos.front()) > 1e-10) {
    throw ConfigError(fmt::format("initial data violate the Dirichlet condition: pos(1) = {}", s.pos.front()));
  }
  s.pos.front() = 0.0;
  s.vel.front() = 0.0;
  s.inner_value = 0.0;
  s.outer_value = s.pos.back();
  s.vel.back() = 0.0;

  double support = data_support_radius(family, p);
  if (family == DataFamily::CustomTable) support = measured_support(s, *profile);
  if (family == DataFamily::PlaneTail && p.plane.outer_cut > 0.0) {
    // The idealized data are the uncut tail; the cut itself is the truncation.
    s.horizon_base = p.plane.outer_cut - p.margin;
  } else if (support >= 0.0 && support < grid.r_max()) {
    // Outgoing perturbations reach r_max at t = r_max - support and reflect.
    s.horizon_base = 2.0 * grid.r_max() - support - p.margin;
  } else {
    s.horizon_base = grid.r_max() - p.margin;
  }

  if (p.energy_cap > 0.0) {
    const double E = s.form == Formulation::Psi ? total_energy(s) : 0.5 * std::pow(h_norm(s), 2);
    if (E > p.energy_cap) {
      throw ConfigError(fmt::format("initial data energy {} exceeds the cap {}", E, p.energy_cap));
    }
  }
  if (form != s.form) {
    if (!profile) throw ConfigError("initial data: conversion needs a harmonic map");
    s = convert(s, *profile);
  }
  return s;
}

}  // namespace extwm
