#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "extwm/config.hpp"
#include "extwm/errors.hpp"
#include "extwm/experiments.hpp"
#include "extwm/io.hpp"
#include "extwm/rng.hpp"

using namespace extwm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "extwm_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EXTWM_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config text format") {
  const auto cfg = parse_config(R"(# relaxation run
experiment = relaxation
n = 2            # degree
grid.r_max = 80
grid.h = 0.025
diagnostics.a_values = 2, 5.5
diagnostics.fit_window = 10, 30
data.family = random_smooth
data.seed = 17
channels.refine = true
convergence.h_values = 0.08, 0.04, 0.02
)");
  CHECK(cfg.experiment == ExperimentKind::Relaxation);
  CHECK(cfg.n == 2);
  CHECK(cfg.r_max == 80.0);
  CHECK(cfg.h == 0.025);
  CHECK(cfg.a_values == std::vector<double>{2.0, 5.5});
  REQUIRE(cfg.fit_window);
  CHECK(cfg.fit_window->first == 10.0);
  CHECK(cfg.family == DataFamily::RandomSmooth);
  CHECK(cfg.data.random.seed == 17);
  CHECK(cfg.seed_given);
  CHECK(cfg.refine);
  CHECK(cfg.h_values.size() == 3);
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("config errors name the line") {
  CHECK(error_of([] { parse_config("n = 1\nthis line has no equals\n", "run.cfg"); }).find("run.cfg:2") != std::string::npos);
  CHECK(error_of([] { parse_config("n = 1\n\n# c\ngrid.hh = 3\n", "run.cfg"); }).find("run.cfg:4") != std::string::npos);
  CHECK(error_of([] { parse_config("n = 1\n\n# c\ngrid.hh = 3\n", "run.cfg"); }).find("grid.hh") != std::string::npos);
  CHECK(error_of([] { parse_config("grid.h = abc\n", "x"); }).find("x:1") != std::string::npos);
  CHECK(error_of([] { parse_config("n = 1.5\n", "x"); }).find("not an integer") != std::string::npos);
  CHECK_THROWS_AS(parse_config("grid.h = nan\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = dance\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("= 3\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), IoError);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.family = DataFamily::RandomSmooth;
  CHECK(error_of([&] { validate(c); }).find("data.seed") != std::string::npos);
  apply_setting(c, "data.seed", "0");
  CHECK_NOTHROW(validate(c));
  ExperimentConfig d;
  d.cfl = 1.5;
  CHECK_THROWS_AS(validate(d), ConfigError);
  d = {};
  d.h_values = {0.1, 0.05};
  d.experiment = ExperimentKind::Convergence;
  CHECK_THROWS_AS(validate(d), ConfigError);
  d = {};
  d.family = DataFamily::CustomTable;
  CHECK_THROWS_AS(validate(d), ConfigError);
}

TEST_CASE("config round trips through text and JSON") {
  ExperimentConfig c;
  apply_overrides(c, {"n=3", "grid.h=0.0125", "diagnostics.a_values=1.5,2.25,7", "data.seed=99",
                      "data.family=random_smooth", "diagnostics.fit_window=12,40", "data.random.amp=0.1",
                      "sweep.key=data.bump.A", "sweep.values=0.1,0.2", "output_dir=results/x"});
  CHECK(c.n == 3);
  const auto j = to_json(c);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(to_json(parse_config(to_text(c))) == j);
  CHECK(config_from_json(j).data.random.amp == c.data.random.amp);
  CHECK(j.size() == config_keys().size());
  CHECK_THROWS_AS(apply_overrides(c, {"n"}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("number formatting round-trips exactly") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = d(gen) * std::pow(10.0, k % 40 - 20);
    CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
  }
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 5e-324, 1.7976931348623157e308}) CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("CSV writing and reading") {
  const auto dir = scratch("csv");
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  {
    CsvWriter w(dir / "sub" / "t.csv", {"x", "y"}, {"made by a test"});
    w.row({1.0, 0.1});
    w.row({std::numeric_limits<double>::quiet_NaN(), -2.5e-300});
    w.row_text({"ok", "a,b"});
    w.close();
  }
  const auto t = read_csv(dir / "sub" / "t.csv");
  CHECK(t.comments == std::vector<std::string>{"made by a test"});
  CHECK(t.header == std::vector<std::string>{"x", "y"});
  CHECK(t.rows.size() == 3);
  CHECK(t.text_column("y")[2] == "a,b");
  CHECK(t.text_column("x")[2] == "ok");
  CHECK(error_of([&] { (void)t.column("x"); }).find(":5") != std::string::npos);
  CHECK_THROWS_AS((void)t.column("z"), ConfigError);

  std::ofstream(dir / "ragged.csv") << "a,b\n1,2\n3\n";
  CHECK(error_of([&] { read_csv(dir / "ragged.csv"); }).find(":3") != std::string::npos);
  CHECK_THROWS_AS(read_csv(dir / "missing.csv"), IoError);
  std::ofstream(dir / "nums.csv") << "a,b\n1,\n";
  CHECK(std::isnan(read_csv(dir / "nums.csv").column("b")[0]));

  write_json(dir / "deep" / "j.json", {{"k", 1.5}});
  CHECK(read_json(dir / "deep" / "j.json")["k"] == 1.5);
}

TEST_CASE("snapshot and time-series schemas") {
  const auto dir = scratch("schemas");
  const RadialGrid g(4.0, 0.5);
  auto s = WaveState::zeros(g, Formulation::U, 2);
  s.t = 1.25;
  s.pos[2] = 0.3;
  write_snapshot(dir / "snap.csv", s);
  const auto snap = read_csv(dir / "snap.csv");
  CHECK(snap.header == std::vector<std::string>{"r", "pos", "vel"});
  CHECK(snap.rows.size() == g.size());
  CHECK(snap.column("pos")[2] == 0.3);
  CHECK(snap.comments.front().find("t = 1.25") != std::string::npos);

  EnergyReport r;
  r.t = 0.5;
  r.E_ext = {1.0, 2.0};
  r.L6 = 3.0;
  write_time_series(dir / "ts.csv", {r, r}, 2);
  const auto ts = read_csv(dir / "ts.csv");
  CHECK(ts.header == std::vector<std::string>{"t", "E_total", "E_local", "dist_Q_local", "E_ext_a1", "E_ext_a2",
                                              "L6", "S_accum"});
  CHECK(ts.column("E_ext_a2")[1] == 2.0);
}

TEST_CASE("seeded generator") {
  // the 10000th output of a default-constructed mt19937_64 is fixed by the standard
  Rng rng(5489u);
  std::uint64_t x = 0;
  for (int k = 0; k < 10000; ++k) x = rng.next();
  CHECK(x == 9981545732273789042ull);
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    differs = differs || u != c.uniform();
  }
  CHECK(differs);
}

TEST_CASE("ell0 synthetic experiment artifacts") {
  const auto dir = scratch("ell0");
  ExperimentConfig c;
  c.experiment = ExperimentKind::Ell0Synth;
  c.r_max = 60.0;
  c.h = 0.05;
  const auto j = run_experiment(c, dir);
  CHECK(j["ell0"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(j["experiment"] == "ell0_synth");
  CHECK(j["version"] == version());
  CHECK(read_json(dir / "summary.json") == j);
  CHECK(read_json(dir / "tail_fit.json").contains("p"));
  CHECK(read_csv(dir / "v0.csv").header == std::vector<std::string>{"r", "v0"});
  CHECK(config_from_json(j["config"]).synth_ell0 == 2.0);
}

TEST_CASE("harmonic-map experiment artifacts") {
  const auto dir = scratch("hm");
  ExperimentConfig c;
  c.experiment = ExperimentKind::HarmonicMap;
  c.n = 2;
  const auto j = run_experiment(c, dir);
  CHECK(std::abs(j["Q_at_1"].get<double>()) < 1e-10);
  CHECK(j["monotone"].get<bool>());
  CHECK(read_csv(dir / "profile.csv").header == std::vector<std::string>{"r", "Q", "Qprime"});
  const auto pend = read_csv(dir / "pendulum.csv");
  CHECK(pend.header == std::vector<std::string>{"branch", "s", "x", "y"});
  CHECK(read_json(dir / "profile.json")["n"] == 2);
}

TEST_CASE("evolve artifacts are byte-identical across runs") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Evolve;
  c.formulation = Formulation::U;
  c.r_max = 30.0;
  c.h = 0.05;
  c.T = 3.0;
  c.family = DataFamily::RandomSmooth;
  apply_setting(c, "data.seed", "5");
  c.a_values = {2.0};
  c.snapshot_every = 1.0;
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  run_experiment(c, d1);
  run_experiment(c, d2);
  for (const char* f : {"time_series.csv", "snapshot_0000.csv", "snapshot_0003.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  const auto ts = read_csv(d1 / "time_series.csv");
  CHECK(ts.rows.size() == 7);
  CHECK(ts.column("t").back() == 3.0);
}

TEST_CASE("channel ensemble schema and determinism") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Channels;
  c.r_max = 30.0;
  c.h = 0.05;
  c.family = DataFamily::RandomSmooth;
  apply_setting(c, "data.seed", "3");
  c.members = 2;
  const auto d1 = scratch("ch1"), d2 = scratch("ch2");
  run_experiment(c, d1);
  run_experiment(c, d2);
  CHECK(slurp(d1 / "ensemble.csv") == slurp(d2 / "ensemble.csv"));
  const auto t = read_csv(d1 / "ensemble.csv");
  CHECK(t.header == std::vector<std::string>{"seed", "a", "norm_total_sq", "norm_pi_sq", "norm_perp_sq", "E_plus",
                                             "E_minus", "c_ratio"});
  CHECK(t.column("seed") == std::vector<double>{3.0, 4.0});
  for (double x : t.column("c_ratio")) CHECK(x > 0.0);
}

TEST_CASE("channels experiment on plane data") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Channels;
  c.r_max = 40.0;
  c.h = 0.05;
  c.family = DataFamily::PlaneTail;
  c.data.plane = {0.0, 1.0, 1.25, 0.0, 5.0};
  const auto dir = scratch("ch_plane");
  const auto j = run_experiment(c, dir);
  CHECK(j["estimate"]["plane_data"].get<bool>());
  CHECK(j["c_ratio_min"].is_null());
  const auto t = read_csv(dir / "exterior_series.csv");
  CHECK(t.header ==
        std::vector<std::string>{"t", "E_plus_raw", "E_plus_projected", "E_minus_raw", "E_minus_projected"});
}

TEST_CASE("sweeps record failures per member and do not depend on the worker count") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Evolve;
  c.r_max = 20.0;
  c.h = 0.05;
  c.T = 1.0;
  c.sweep_key = "data.bump.sigma";
  c.sweep_values = {"0.5", "-1", "0.7"};
  const auto d1 = scratch("sweep1"), d2 = scratch("sweep2");
  const auto s1 = run_sweep(c, d1, 1);
  const auto s2 = run_sweep(c, d2, 3);
  CHECK(s1["failed"] == 1);
  CHECK(s1["exit_code"] == 2);
  const auto t = read_csv(d1 / "sweep.csv");
  CHECK(t.rows.size() == 3);
  CHECK(t.text_column("status") == std::vector<std::string>{"ok", "config_error", "ok"});
  CHECK(slurp(d1 / "sweep.csv") == slurp(d2 / "sweep.csv"));
  CHECK(fs::exists(d1 / "member_0" / "summary.json"));
  CHECK(fs::exists(d1 / "summary.json"));
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  std::ofstream(dir / "bad.cfg") << "n = 1\nnot a setting\n";
  std::ofstream(dir / "ok.cfg") << "grid.r_max = 40\ngrid.h = 0.05\n";
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("ell0-synth --config " + (dir / "ok.cfg").string() + " --out " + (dir / "a").string()) == 0);
  CHECK(fs::exists(dir / "a" / "summary.json"));
  CHECK(run_cli("evolve --config " + (dir / "bad.cfg").string()) == 2);
  CHECK(run_cli("evolve --config " + (dir / "missing.cfg").string()) == 4);
  CHECK(run_cli("evolve --set data.family=random_smooth --out " + (dir / "b").string()) == 2);
  CHECK(run_cli("no-such-command") == 2);
  const std::string env = "EXTWM_OUTPUT_ROOT=" + (dir / "root").string() + " ";
  const int rc = std::system((env + EXTWM_CLI + std::string(" ell0-synth --set grid.r_max=40 --set grid.h=0.05 "
                                                           "--set output_dir=rel >/dev/null 2>&1")).c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(fs::exists(dir / "root" / "rel" / "summary.json"));
}
