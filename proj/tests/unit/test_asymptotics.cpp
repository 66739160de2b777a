#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "extwm/asymptotics.hpp"
#include "extwm/errors.hpp"
#include "extwm/initial_data.hpp"

using namespace extwm;

namespace {

WaveState u_from(const RadialGrid& g, auto&& f, auto&& ft) {
  auto s = WaveState::zeros(g, Formulation::U, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.pos[i] = f(g.r(i));
    s.vel[i] = ft(g.r(i));
  }
  return s;
}

bool has_flag(const TailFit& f, const std::string& s) {
  return std::find(f.flags.begin(), f.flags.end(), s) != f.flags.end();
}

}  // namespace

TEST_CASE("v0 of the Newton potential is constant") {
  const RadialGrid g(50.0, 0.05);
  const auto u = u_from(g, [](double r) { return 2.5 * std::pow(r, -3.0); }, [](double) { return 0.0; });
  for (double v : compute_v0(u)) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
  for (double v : compute_v0(WaveState::zeros(g, Formulation::U, 1))) CHECK(v == 0.0);
  CHECK_THROWS_AS(compute_v0(WaveState::zeros(g, Formulation::Psi, 1)), ConfigError);
}

TEST_CASE("v1 of power velocities") {
  const RadialGrid g(40.0, 0.01);
  // u_t = r^-4: r int_r^inf s^-3 ds = 1/(2r)
  auto u = u_from(g, [](double) { return 0.0; }, [](double r) { return std::pow(r, -4.0); });
  auto v1 = compute_v1(u, PowerTail{1.0, 4.0});
  for (std::size_t i = 0; i < g.size(); i += 151) CHECK(v1[i] == doctest::Approx(0.5 / g.r(i)).epsilon(1e-8));
  // u_t = r^-3: r int_r^inf s^-2 ds = 1
  u = u_from(g, [](double) { return 0.0; }, [](double r) { return std::pow(r, -3.0); });
  v1 = compute_v1(u, PowerTail{1.0, 3.0});
  for (std::size_t i = 0; i < g.size(); i += 151) CHECK(v1[i] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(compute_v1(u, PowerTail{1.0, 1.5}), ConfigError);
  for (double v : compute_v1(WaveState::zeros(g, Formulation::U, 1))) CHECK(v == 0.0);
}

TEST_CASE("power-tail fit recovers planted parameters") {
  for (double p : {2.0, 3.0, 4.0}) {
    CAPTURE(p);
    std::vector<double> r, v;
    for (double x = 10.0; x <= 40.0; x += 0.05) {
      r.push_back(x);
      v.push_back(1.25 - 3.0 * std::pow(x, -p));
    }
    const auto fit = fit_power_tail(r, v);
    CHECK(fit.ell0 == doctest::Approx(1.25).epsilon(1e-9));
    CHECK(fit.beta == doctest::Approx(-3.0).epsilon(1e-6));
    CHECK(fit.p == doctest::Approx(p).epsilon(1e-7));
    CHECK(fit.residual < 1e-12);
    CHECK(fit.flags.empty());
  }
  CHECK_THROWS_AS(fit_power_tail({1.0, 2.0}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(fit_power_tail({1.0, 2.0, 3.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("ell0 from a U-form state with a subleading tail") {
  const RadialGrid g(90.0, 0.05);
  for (double q : {2.0, 3.0, 4.0}) {
    CAPTURE(q);
    const auto u = u_from(g, [&](double r) { return 0.7 * std::pow(r, -3.0) + 2.0 * std::pow(r, -3.0 - q); },
                          [](double) { return 0.0; });
    const auto fit = estimate_ell0(u);
    CHECK(fit.window_lo == doctest::Approx(30.0));
    CHECK(fit.window_hi == doctest::Approx(60.0));
    CHECK(fit.ell0 == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(fit.p == doctest::Approx(q).epsilon(1e-5));
  }
}

TEST_CASE("compactly supported data have ell0 = 0") {
  const RadialGrid g(60.0, 0.05);
  auto u = u_from(g, [](double r) { return compact_bump((r - 5.0) / 2.0); }, [](double) { return 0.0; });
  const auto fit = estimate_ell0(u);
  CHECK(fit.ell0 == 0.0);
  CHECK(fit.residual == 0.0);
  CHECK(has_flag(fit, "no_decay"));
}

TEST_CASE("plane tail data have ell0 = c1") {
  const RadialGrid g(60.0, 0.05);
  DataParams d;
  d.plane.c1 = 1.7;
  d.plane.c2 = 0.0;
  const auto u = make_initial_data(DataFamily::PlaneTail, d, g, 1, Formulation::U, nullptr);
  const auto fit = estimate_ell0(u);
  CHECK(fit.ell0 == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("fit window handling") {
  const RadialGrid g(60.0, 0.05);
  auto u = u_from(g, [](double r) { return std::pow(r, -3.0) + std::pow(r, -6.0); }, [](double) { return 0.0; });
  CHECK_THROWS_AS(estimate_ell0(u, std::pair{30.0, 20.0}), ConfigError);
  // clipped to the causal horizon
  u.horizon_base = 40.0;
  const auto fit = estimate_ell0(u, std::pair{20.0, 55.0});
  CHECK(fit.window_hi <= 40.0 + 1e-12);
  const auto narrow = estimate_ell0(u, std::pair{20.0, 21.0});
  CHECK(has_flag(narrow, "narrow_window"));
  const auto j = to_json(fit);
  for (const char* k : {"ell0", "beta", "p", "window", "residual", "flags"}) CHECK(j.contains(k));
}
