#include "extwm/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "extwm/errors.hpp"

namespace extwm {

std::vector<double> compute_v0(const WaveState& u) {
  if (u.form != Formulation::U) throw ConfigError("compute_v0: expected U form");
  std::vector<double> v(u.pos.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = u.grid.r(i);
    v[i] = r * r * r * u.pos[i];
  }
  return v;
}

std::vector<double> compute_v1(const WaveState& u, const std::optional<PowerTail>& tail) {
  auto v = transform_v(u, tail);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= u.grid.r(i);
  return v;
}

namespace {

struct LinearFit {
  double ell0, beta, sse;
};

// Least squares for v = ell0 + beta x with x = r^-p, in centered form.
LinearFit fit_at(const std::vector<double>& r, const std::vector<double>& v, double p) {
  const std::size_t n = r.size();
  std::vector<double> x(n);
  double xm = 0.0, vm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::pow(r[i], -p);
    xm += x[i];
    vm += v[i];
  }
  xm /= static_cast<double>(n);
  vm /= static_cast<double>(n);
  double sxx = 0.0, sxv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxv += (x[i] - xm) * (v[i] - vm);
  }
  LinearFit f;
  f.beta = sxx > 0.0 ? sxv / sxx : 0.0;
  f.ell0 = vm - f.beta * xm;
  f.sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = v[i] - f.ell0 - f.beta * x[i];
    f.sse += e * e;
  }
  return f;
}

}  // namespace

TailFit fit_power_tail(const std::vector<double>& r, const std::vector<double>& v0, const FitOptions& opts) {
  if (r.size() != v0.size()) throw ConfigError("fit_power_tail: size mismatch");
  if (r.size() < 3) throw ConfigError("fit_power_tail: need at least three samples");
  TailFit out;
  out.window_lo = r.front();
  out.window_hi = r.back();
  if (r.size() < opts.min_nodes || out.window_hi < opts.min_ratio * out.window_lo) {
    out.flags.emplace_back("narrow_window");
  }
  bool up = false, down = false;
  for (std::size_t i = 1; i < v0.size(); ++i) {
    if (v0[i] > v0[i - 1]) up = true;
    if (v0[i] < v0[i - 1]) down = true;
  }
  if (up && down) out.flags.emplace_back("non_monotone");

  // coarse scan, then golden section inside the best bracket
  double best_p = opts.p_min, best = fit_at(r, v0, opts.p_min).sse;
  for (double p = opts.p_min + opts.p_scan_step; p <= opts.p_max + 1e-12; p += opts.p_scan_step) {
    const double s = fit_at(r, v0, p).sse;
    if (s < best) {
      best = s;
      best_p = p;
    }
  }
  double lo = std::max(opts.p_min, best_p - opts.p_scan_step);
  double hi = std::min(opts.p_max, best_p + opts.p_scan_step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = fit_at(r, v0, x1).sse, f2 = fit_at(r, v0, x2).sse;
  while (hi - lo > opts.p_tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = fit_at(r, v0, x1).sse;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = fit_at(r, v0, x2).sse;
    }
  }
  out.p = 0.5 * (lo + hi);
  const LinearFit f = fit_at(r, v0, out.p);
  out.ell0 = f.ell0;
  out.beta = f.beta;
  out.residual = std::sqrt(f.sse / static_cast<double>(r.size()));

  double scale = 0.0;
  for (double v : v0) scale = std::max(scale, std::abs(v));
  if (std::abs(f.beta) * std::pow(out.window_lo, -out.p) <= 1e-12 * std::max(scale, 1e-300)) {
    out.flags.emplace_back("no_decay");
  }
  return out;
}

TailFit estimate_ell0(const WaveState& u, std::optional<std::pair<double, double>> window, const FitOptions& opts) {
  const double R = u.grid.r_max();
  auto [lo, hi] = window.value_or(std::pair{R / 3.0, 2.0 * R / 3.0});
  hi = std::min(hi, u.causal_horizon());
  lo = std::max(lo, u.grid.r_min());
  if (!(hi > lo)) throw ConfigError(fmt::format("estimate_ell0: empty fit window [{}, {}]", lo, hi));
  const auto v0 = compute_v0(u);
  std::vector<double> r, v;
  for (std::size_t i = 0; i < v0.size(); ++i) {
    const double x = u.grid.r(i);
    if (x >= lo - 1e-12 && x <= hi + 1e-12) {
      r.push_back(x);
      v.push_back(v0[i]);
    }
  }
  return fit_power_tail(r, v, opts);
}

nlohmann::json to_json(const TailFit& fit) {
  return {{"ell0", fit.ell0},
          {"beta", fit.beta},
          {"p", fit.p},
          {"window", {fit.window_lo, fit.window_hi}},
          {"residual", fit.residual},
          {"flags", fit.flags}};
}

}  // namespace extwm
