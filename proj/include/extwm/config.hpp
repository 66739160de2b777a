#pragma once

// Experiment descriptions. The text format is one `key = value` per line with
// dotted section names, `#` comments and comma-separated lists:
//
//   experiment = relaxation
//   n = 1
//   grid.r_max = 120
//   diagnostics.a_values = 2, 5

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "extwm/initial_data.hpp"
#include "extwm/wave.hpp"

namespace extwm {

enum class ExperimentKind { HarmonicMap, Evolve, Channels, Relaxation, Convergence, Ell0Synth };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view s);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Evolve;
  Formulation formulation = Formulation::Psi;
  UModel model = UModel::Full;
  int n = 1;

  double r_max = 120.0;
  double h = 0.02;

  double T = 10.0;
  double cfl = 0.5;
  double sample_every = 0.5;

  DataFamily family = DataFamily::StaticQPlusBump;
  DataParams data{};
  bool seed_given = false;

  double A_local = 5.0;
  std::vector<double> a_values{};
  double plateau_tol = 1e-3;
  std::optional<std::pair<double, double>> fit_window{};
  double snapshot_every = 0.0;  ///< 0: initial and final snapshots only

  double r_table_max = 1e3;
  int tail_order = 2;
  double ode_tol = 1e-12;

  double channels_a = 2.0;
  int members = 1;
  bool refine = false;

  std::vector<double> h_values{0.04, 0.02, 0.01};

  double synth_ell0 = 2.0;
  double synth_beta = 1.0;
  double synth_q = 3.0;  ///< u0 = ell0 r^-3 + beta r^-(3+q)

  std::string sweep_key{};
  std::vector<std::string> sweep_values{};

  std::filesystem::path output_dir{"out"};
};

/// Applies one `key = value` assignment. `where` prefixes error messages.
/// Throws ConfigError on an unknown key or a malformed value.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                   std::string_view where = "");

/// Parses the text format; errors carry `source:line`.
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies `key=value` overrides.
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides);

/// Cross-field checks (positive sizes, seed for random data, ...).
void validate(const ExperimentConfig& cfg);

/// Every key with its current value in the text format.
std::string to_text(const ExperimentConfig& cfg);

/// Flat object keyed by the dotted names; from_json(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Names of all recognized keys, in output order.
std::vector<std::string> config_keys();

}  // namespace extwm
