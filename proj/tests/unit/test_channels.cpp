#include <doctest.h>

#include <cmath>
#include <vector>

#include "extwm/channels.hpp"
#include "extwm/errors.hpp"
#include "extwm/initial_data.hpp"
#include "extwm/rng.hpp"

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

double gauss(double r, double c, double w) { return std::exp(-(r - c) * (r - c) / (w * w)); }

struct Random {
  WaveState u;
  double a, c1, c2;
};

// Compact Gaussian clusters plus a plane component c r^-3 on r >= a.
Random random_split_data(const RadialGrid& g, Rng& rng) {
  Random d;
  d.a = rng.uniform(1.5, 5.0);
  d.c1 = rng.uniform(-1.0, 1.0);
  d.c2 = rng.uniform(-1.0, 1.0);
  const double cf = rng.uniform(6.0, 12.0), wf = rng.uniform(0.5, 1.2), af = rng.uniform(-1.0, 1.0);
  const double cg = rng.uniform(4.0, 12.0), wg = rng.uniform(0.5, 1.2), ag = rng.uniform(-1.0, 1.0);
  d.u = u_from(g, [&](double r) { return af * gauss(r, cf, wf) + d.c1 * std::pow(r, -3.0); },
               [&](double r) { return ag * gauss(r, cg, wg) + d.c2 * std::pow(r, -3.0); });
  return d;
}

}  // namespace

TEST_CASE("plane basis vectors project onto themselves") {
  const RadialGrid g(40.0, 0.01);
  const auto f = u_from(g, [](double r) { return std::pow(r, -3.0); }, [](double) { return 0.0; });
  for (double a : {1.5, 2.0, 4.0}) {
    auto p = project_plane(g, f.pos, f.vel, a, NewtonTail{1.0, 0.0});
    CHECK(p.c1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.c2 == 0.0);
    CHECK(p.norm_pi_sq == doctest::Approx(3.0 / (a * a * a)).epsilon(1e-12));
    CHECK(p.norm_perp_sq < 1e-12 * p.norm_total_sq);

    const auto gv = u_from(g, [](double) { return 0.0; }, [](double r) { return std::pow(r, -3.0); });
    p = project_plane(g, gv.pos, gv.vel, a, NewtonTail{0.0, 1.0});
    CHECK(p.c1 == 0.0);
    CHECK(p.c2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.norm_pi_sq == doctest::Approx(1.0 / a).epsilon(1e-8));
    CHECK(p.norm_perp_sq < 1e-10 * p.norm_total_sq);
  }
  CHECK_THROWS_AS(project_plane(g, f.pos, f.vel, 0.5), ConfigError);
  CHECK_THROWS_AS(project_plane(g, f.pos, f.vel, 41.0), ConfigError);
}

TEST_CASE("projection: Pythagoras, idempotence and orthogonality on random data") {
  const RadialGrid g(30.0, 0.02);
  Rng rng(2024);
  for (int k = 0; k < 100; ++k) {
    const auto d = random_split_data(g, rng);
    CAPTURE(k);
    const auto p = project_plane(g, d.u.pos, d.u.vel, d.a, NewtonTail{d.c1, d.c2});
    CHECK(p.norm_pi_sq + p.norm_perp_sq == doctest::Approx(p.norm_total_sq).epsilon(1e-7));
    // beyond r_max the remainder is (c - p.c) r^-3
    const NewtonTail rest{d.c1 - p.c1, d.c2 - p.c2};
    const auto q = project_plane(g, p.f_perp, p.g_perp, d.a, rest);
    const double scale = std::sqrt(p.norm_total_sq);
    CHECK(std::abs(q.c1) < 1e-7 * scale);  // O(h^4) interpolation at a
    CHECK(std::abs(q.c2) < 1e-7 * scale);
    CHECK(q.norm_perp_sq == doctest::Approx(p.norm_perp_sq).epsilon(1e-7));
    std::vector<double> e(g.size()), zero(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) e[i] = std::pow(g.r(i), -3.0);
    const double R = g.r_max();
    const double ip1 = exterior_inner_product(g, p.f_perp, p.g_perp, e, zero, d.a) + 3 * rest.c_pos / (R * R * R);
    const double ip2 = exterior_inner_product(g, p.f_perp, p.g_perp, zero, e, d.a) + rest.c_vel / R;
    CHECK(std::abs(ip1) < 1e-7 * scale);
    CHECK(std::abs(ip2) < 1e-7 * scale);
  }
}

TEST_CASE("data orthogonal to the plane have no plane component") {
  // f vanishes near a; g = s^-1 (d/ds) bump has zero first moment
  const RadialGrid g(30.0, 0.01);
  const double a = 2.0;
  const auto u = u_from(g, [](double r) { return gauss(r, 8.0, 1.0); },
                        [](double r) { return -2 * (r - 8.0) * gauss(r, 8.0, 1.0) / r; });
  const auto p = project_plane(g, u.pos, u.vel, a);
  CHECK(std::abs(p.c1) < 1e-12);
  CHECK(std::abs(p.c2) < 1e-9);
  CHECK(p.norm_perp_sq == doctest::Approx(p.norm_total_sq).epsilon(1e-9));
}

TEST_CASE("Newton potentials carry no exterior energy after plane accounting") {
  const RadialGrid g(60.0, 0.02);
  for (double c1 : {1.0, 0.0}) {
    DataParams d;
    d.plane = {c1, 1.0 - c1, 1.25, 0.0, 5.0};
    const auto u = make_initial_data(DataFamily::PlaneTail, d, g, 1, Formulation::U, nullptr);
    for (double a : {1.5, 2.0, 4.0}) {
      CAPTURE(c1);
      CAPTURE(a);
      ExteriorControl ctrl;
      ctrl.tail = NewtonTail{c1, 1.0 - c1};
      const auto est = asymptotic_exterior_energy(u, a, ctrl);
      CHECK(est.plane_data);
      CHECK(!est.c_ratio);
      CHECK(est.split.c1 == doctest::Approx(c1).epsilon(1e-10));
      CHECK(std::max(est.E_plus, est.E_minus) < 1e-6 * est.split.norm_total_sq);
    }
  }
}

TEST_CASE("exterior energy estimate on compact data") {
  const RadialGrid g(80.0, 0.02);
  auto u = u_from(g, [](double r) { return gauss(r, 4.0, 0.5); }, [](double r) { return gauss(r, 5.0, 0.5); });
  u.pos.front() = 0.0;
  ExteriorControl loose;
  loose.plateau_tol = 5e-3;  // both series approach the limit like 1/t
  const auto est = asymptotic_exterior_energy(u, 2.0, loose);
  CHECK(!est.plane_data);
  REQUIRE(est.c_ratio);
  CHECK(*est.c_ratio > 0.0);
  CHECK(*est.c_ratio <= 1.0 + 1e-6);
  CHECK(est.plateau_plus);
  CHECK(est.plateau_minus);
  // raw and plane-subtracted series share the limit; the gap closes like 1/t
  CHECK(est.forward.raw.back() == doctest::Approx(est.forward.projected.back()).epsilon(3e-2));
  CHECK(est.backward.raw.back() == doctest::Approx(est.backward.projected.back()).epsilon(3e-2));
  CHECK(est.forward.projected.back() <= est.forward.projected.front() * (1 + 1e-6));
  CHECK(est.forward.t.front() == 0.0);
  CHECK(est.forward.t.back() == doctest::Approx(est.T));

  ExteriorControl ctrl;
  ctrl.T = 1e3;
  CHECK_THROWS_AS(asymptotic_exterior_energy(u, 2.0, ctrl), ConfigError);
}

TEST_CASE("time symmetry: f = 0 gives equal limits in both directions") {
  const RadialGrid g(40.0, 0.02);
  const auto u = u_from(g, [](double) { return 0.0; }, [](double r) { return gauss(r, 5.0, 0.6); });
  const auto est = asymptotic_exterior_energy(u, 2.0);
  CHECK(est.E_plus == doctest::Approx(est.E_minus).epsilon(1e-10));
}

TEST_CASE("reduction to the line: w = 3 r u + r^2 u_r") {
  const RadialGrid g(20.0, 0.01);
  auto u = u_from(g, [](double r) { return std::pow(r, -3.0); }, [](double) { return 0.0; });
  // w of r^-3 vanishes up to the O(h^4) derivative error
  double e[2];
  int k = 0;
  for (double h : {0.02, 0.01}) {
    const RadialGrid gh(20.0, h);
    double m = 0;
    for (double x : transform_w(u_from(gh, [](double r) { return std::pow(r, -3.0); }, [](double) { return 0.0; })))
      m = std::max(m, std::abs(x));
    e[k++] = m;
  }
  CHECK(e[1] < 1e-5);
  CHECK(std::log2(e[0] / e[1]) > 3.5);
  auto w = transform_w(u);
  u = u_from(g, [](double) { return 1.0; }, [](double) { return 0.0; });
  w = transform_w(u);
  for (std::size_t i = 0; i < g.size(); i += 97) CHECK(w[i] == doctest::Approx(3 * g.r(i)).epsilon(1e-12));
}

TEST_CASE("reduction to 3d: v = int_r^inf s u_t ds") {
  const RadialGrid g(30.0, 0.01);
  auto u = u_from(g, [](double) { return 0.0; }, [](double r) { return std::pow(r, -4.0); });
  const auto v = transform_v(u, PowerTail{1.0, 4.0});
  CHECK(v[g.nearest(2.0)] == doctest::Approx(1.0 / 8.0).epsilon(1e-9));
  for (std::size_t i = 0; i < g.size(); i += 113) CHECK(v[i] == doctest::Approx(0.5 / (g.r(i) * g.r(i))).epsilon(1e-8));
  CHECK_THROWS_AS(transform_v(u, PowerTail{1.0, 2.0}), ConfigError);
  CHECK_NOTHROW(transform_v(u, PowerTail{0.0, 1.0}));
  const auto zero = transform_v(WaveState::zeros(g, Formulation::U, 1));
  for (double x : zero) CHECK(x == 0.0);
}

TEST_CASE("1d exterior identity") {
  IdentityControl ctrl;
  ctrl.h = 0.01;
  ctrl.x_max = 40.0;
  ctrl.T = 6.0;
  const double a = 2.0;
  auto f = [](double x) { return gauss(x, 6.0, 0.7); };
  auto fx = [](double x) { return -2 * (x - 6.0) / 0.49 * gauss(x, 6.0, 0.7); };
  auto gen = [](double x) { return 0.5 * gauss(x, 7.0, 0.5); };

  SUBCASE("generic data: energy drop = flux = data integral") {
    const auto rep = exterior_1d_identity_check(f, gen, a, ctrl);
    for (const auto* s : {&rep.line, &rep.radial3d}) {
      CHECK(s->energy_drop == doctest::Approx(s->flux).epsilon(1e-5));
      CHECK(s->energy_drop == doctest::Approx(s->data_integral).epsilon(1e-5));
    }
    // data supported in [a, a + 2T]: the larger side carries half the energy
    CHECK(std::max(rep.line.E_plus, rep.line.E_minus) >= rep.line.lower_bound * (1 - 1e-6));
  }
  SUBCASE("outgoing data g = -f_x lose nothing") {
    auto g = [&](double x) { return -fx(x); };
    const auto rep = exterior_1d_identity_check(f, g, a, ctrl);
    CHECK(std::abs(rep.line.data_integral) < 1e-10 * rep.line.lower_bound);
    CHECK(std::abs(rep.line.energy_drop) < 1e-7 * rep.line.lower_bound);
  }
  SUBCASE("f = 0: both directions agree") {
    const auto rep = exterior_1d_identity_check([](double) { return 0.0; }, gen, a, ctrl);
    CHECK(rep.line.E_plus == doctest::Approx(rep.line.E_minus).epsilon(1e-10));
    CHECK(rep.radial3d.E_plus == doctest::Approx(rep.radial3d.E_minus).epsilon(1e-10));
  }
  CHECK_THROWS_AS(exterior_1d_identity_check([](double) { return 1.0; }, gen, a, ctrl), ConfigError);
}
