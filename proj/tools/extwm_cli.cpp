// Command-line front end: one subcommand per experiment kind plus `sweep`.
//
//   extwm relaxation --config run.cfg --set n=2 --out results/n2
//   extwm sweep --config delta.cfg --threads 4
//
// Exit codes: 0 success, 2 config error, 3 numerical abort, 4 I/O error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "extwm/config.hpp"
#include "extwm/errors.hpp"
#include "extwm/experiments.hpp"

namespace {

struct Args {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  unsigned threads = 1;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("--config", a.config, "experiment description (key = value text)");
  sub->add_option("--set", a.sets, "override, key=value (repeatable)");
  sub->add_option("--out", a.out, "output directory");
  sub->add_option("--threads", a.threads, "sweep workers")->check(CLI::PositiveNumber);
}

int run(const std::string& name, const Args& a) {
  extwm::ExperimentConfig cfg = a.config.empty() ? extwm::ExperimentConfig{} : extwm::load_config(a.config);
  if (name != "sweep") cfg.experiment = extwm::parse_experiment(name);
  extwm::apply_overrides(cfg, a.sets);

  std::filesystem::path out = cfg.output_dir;
  if (!a.out.empty()) {
    out = a.out;
  } else if (const char* root = std::getenv("EXTWM_OUTPUT_ROOT"); root && out.is_relative()) {
    out = std::filesystem::path(root) / out;
  }
  cfg.output_dir = out;

  if (name == "sweep") {
    const auto s = extwm::run_sweep(cfg, out, a.threads);
    std::cout << fmt::format("sweep: {} members, {} failed -> {}\n", s["members"].size(), s["failed"].get<int>(),
                             (out / "sweep.csv").string());
    return s["exit_code"].get<int>();
  }
  extwm::validate(cfg);
  if (!cfg.sweep_key.empty()) std::cerr << "note: sweep.key is ignored outside the sweep subcommand\n";
  extwm::run_experiment(cfg, out);
  std::cout << fmt::format("{} -> {}\n", name, (out / "summary.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exterior equivariant wave maps: experiments"};
  app.set_version_flag("--version", extwm::version());
  app.require_subcommand(1);
  Args args;
  const std::vector<std::string> names{"harmonic-map", "evolve", "channels", "relaxation",
                                       "convergence", "ell0-synth", "sweep"};
  for (const auto& n : names) add_common(app.add_subcommand(n, "run " + n), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run(name, args);
  } catch (const extwm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const extwm::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 3;
  } catch (const extwm::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
