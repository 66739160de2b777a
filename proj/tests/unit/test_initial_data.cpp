#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "extwm/energy.hpp"
#include "extwm/errors.hpp"
#include "extwm/initial_data.hpp"
#include "extwm/io.hpp"

using namespace extwm;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const HarmonicMapProfile& q(int n) {
  static const HarmonicMapProfile p1 = build_harmonic_map(1), p2 = build_harmonic_map(2);
  return n == 1 ? p1 : p2;
}

}  // namespace

TEST_CASE("cutoff helpers") {
  CHECK(smooth_step(-1.0) == 0.0);
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(smooth_step(1.0) == 1.0);
  CHECK(smooth_step(0.3) + smooth_step(0.7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(compact_bump(0.0) == 1.0);
  CHECK(compact_bump(1.0) == 0.0);
  CHECK(compact_bump(-1.5) == 0.0);
  CHECK(compact_bump(0.5) == doctest::Approx(std::exp(1.0 - 1.0 / 0.75)).epsilon(1e-15));
}

TEST_CASE("bump with zero amplitudes is (Q_n, 0)") {
  const RadialGrid g(30.0, 0.05);
  for (int n : {1, 2}) {
    DataParams d;
    d.bump.A = d.bump.B = 0.0;
    const auto s = make_initial_data(DataFamily::StaticQPlusBump, d, g, n, Formulation::Psi, &q(n));
    for (std::size_t i = 1; i < g.size(); i += 37) CHECK(s.pos[i] == q(n).evaluate(g.r(i)).Q);
    for (double v : s.vel) CHECK(v == 0.0);
    CHECK(s.pos.front() == 0.0);
    const auto u = make_initial_data(DataFamily::StaticQPlusBump, d, g, n, Formulation::U, &q(n));
    for (double v : u.pos) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("U-form data are the converted psi data") {
  const RadialGrid g(30.0, 0.05);
  DataParams d;
  d.bump = {0.4, 0.2, 4.0, 0.7};
  const auto psi = make_initial_data(DataFamily::StaticQPlusBump, d, g, 1, Formulation::Psi, &q(1));
  const auto u = make_initial_data(DataFamily::StaticQPlusBump, d, g, 1, Formulation::U, &q(1));
  const auto c = convert(psi, q(1));
  CHECK(u.pos == c.pos);
  CHECK(u.vel == c.vel);
  CHECK(u.horizon_base == psi.horizon_base);
  // Gaussian bump counts as supported in r_c + 6 sigma
  CHECK(psi.horizon_base == doctest::Approx(2 * 30.0 - (4.0 + 6 * 0.7) - d.margin));
}

TEST_CASE("direct degree-n data have degree n and finite energy") {
  for (int n : {1, 2}) {
    DataParams d;
    d.direct.B = 0.5;
    double E[2];
    int k = 0;
    for (double R : {50.0, 100.0}) {
      const RadialGrid g(R, 0.02);
      const auto s = make_initial_data(DataFamily::DirectDegreeN, d, g, n, Formulation::Psi, &q(n));
      CHECK(s.pos.front() == 0.0);
      CHECK(s.pos.back() == doctest::Approx(n * pi * std::pow(1 - 1 / (R * R), 2.0)).epsilon(1e-14));
      // r^-2 tail: not compactly perturbed
      CHECK(s.horizon_base == doctest::Approx(R - d.margin));
      E[k++] = total_energy(s);
    }
    // energy density ~ r^-4, so the part beyond R = 50 is O(R^-3)
    CHECK(std::abs(E[1] - E[0]) < 1e-3 * E[1]);
    CHECK(E[1] > q(n).energy());
  }
}

TEST_CASE("plane tail data") {
  const RadialGrid g(40.0, 0.05);
  DataParams d;
  d.plane = {1.3, -0.4, 2.0, 0.0, 5.0};
  const auto s = make_initial_data(DataFamily::PlaneTail, d, g, 1, Formulation::U, nullptr);
  for (std::size_t i = g.nearest(2.0); i + 1 < g.size(); i += 11) {
    const double r3 = std::pow(g.r(i), 3.0);
    CHECK(s.pos[i] * r3 == doctest::Approx(1.3).epsilon(1e-14));
    CHECK(s.vel[i] * r3 == doctest::Approx(-0.4).epsilon(1e-14));
  }
  CHECK(s.pos[1] * std::pow(g.r(1), 3.0) < 1.3);
  d.plane.outer_cut = 20.0;
  const auto cut = make_initial_data(DataFamily::PlaneTail, d, g, 1, Formulation::U, nullptr);
  CHECK(cut.pos[g.nearest(30.0)] == 0.0);
  CHECK(cut.horizon_base == doctest::Approx(20.0 - d.margin));
  d.plane.a = 1.0;
  CHECK_THROWS_AS(make_initial_data(DataFamily::PlaneTail, d, g, 1, Formulation::U, nullptr), ConfigError);
}

TEST_CASE("random data are reproducible and supported below r_hi") {
  const RadialGrid g(20.0, 0.05);
  DataParams d;
  d.random.seed = 77;
  const auto a = make_initial_data(DataFamily::RandomSmooth, d, g, 1, Formulation::U, &q(1));
  const auto b = make_initial_data(DataFamily::RandomSmooth, d, g, 1, Formulation::U, &q(1));
  CHECK(a.pos == b.pos);
  CHECK(a.vel == b.vel);
  d.random.seed = 78;
  const auto c = make_initial_data(DataFamily::RandomSmooth, d, g, 1, Formulation::U, &q(1));
  CHECK(a.pos != c.pos);
  for (std::size_t i = g.nearest(d.random.r_hi) + 1; i < g.size(); ++i) {
    CHECK(std::abs(a.pos[i]) < 1e-14);
    CHECK(a.vel[i] == 0.0);
  }
  double m = 0;
  for (double v : a.vel) m = std::max(m, std::abs(v));
  CHECK(m > 0.0);
}

TEST_CASE("custom tables") {
  const auto dir = fs::temp_directory_path() / "extwm_unit" / "tables";
  fs::create_directories(dir);
  const RadialGrid g(20.0, 0.05);
  auto write = [&](const fs::path& p, double R, double offset) {
    CsvWriter w(p, {"r", "pos", "vel"});
    for (double r = 1.0; r <= R + 1e-9; r += 0.01) {
      const double bump = compact_bump((r - 3.0) / 1.5);
      w.row({r, q(1).evaluate(r).Q + offset + 0.1 * bump, 0.2 * bump});
    }
    w.close();
  };
  DataParams d;
  d.table = dir / "good.csv";
  write(d.table, 20.0, 0.0);
  const auto s = make_initial_data(DataFamily::CustomTable, d, g, 1, Formulation::Psi, &q(1));
  const std::size_t i = g.nearest(3.0);
  CHECK(s.pos[i] == doctest::Approx(q(1).evaluate(3.0).Q + 0.1).epsilon(1e-9));
  CHECK(s.vel[i] == doctest::Approx(0.2).epsilon(1e-9));
  // perturbation ends at r = 4.5, so the clean region is measured from there
  CHECK(s.horizon_base == doctest::Approx(2 * 20.0 - 4.5 - d.margin).epsilon(2e-3));

  d.table = dir / "short.csv";
  write(d.table, 10.0, 0.0);
  CHECK_THROWS_AS(make_initial_data(DataFamily::CustomTable, d, g, 1, Formulation::Psi, &q(1)), ConfigError);
  d.table = dir / "offset.csv";
  write(d.table, 20.0, 0.5);
  CHECK_THROWS_AS(make_initial_data(DataFamily::CustomTable, d, g, 1, Formulation::Psi, &q(1)), ConfigError);
  d.table = dir / "none.csv";
  CHECK_THROWS_AS(make_initial_data(DataFamily::CustomTable, d, g, 1, Formulation::Psi, &q(1)), IoError);
}

TEST_CASE("guards on initial data") {
  const RadialGrid g(20.0, 0.05);
  DataParams d;
  CHECK_THROWS_AS(make_initial_data(DataFamily::StaticQPlusBump, d, g, 1, Formulation::Psi, nullptr), ConfigError);
  CHECK_THROWS_AS(make_initial_data(DataFamily::StaticQPlusBump, d, g, 2, Formulation::Psi, &q(1)), ConfigError);
  d.energy_cap = q(1).energy();
  CHECK_THROWS_AS(make_initial_data(DataFamily::StaticQPlusBump, d, g, 1, Formulation::Psi, &q(1)), ConfigError);
  d.energy_cap = 1e6;
  CHECK_NOTHROW(make_initial_data(DataFamily::StaticQPlusBump, d, g, 1, Formulation::Psi, &q(1)));
  d.bump.sigma = -1.0;
  CHECK_THROWS_AS(make_initial_data(DataFamily::StaticQPlusBump, d, g, 1, Formulation::Psi, &q(1)), ConfigError);
  CHECK(parse_data_family("plane_tail") == DataFamily::PlaneTail);
  CHECK_THROWS_AS(parse_data_family("flat"), ConfigError);
}
