#include "extwm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "extwm/asymptotics.hpp"
#include "extwm/errors.hpp"
#include "extwm/initial_data.hpp"
#include "extwm/io.hpp"

namespace extwm {
namespace {

using nlohmann::json;

json base_summary(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = std::string(to_string(cfg.experiment));
  j["version"] = version();
  j["config"] = to_json(cfg);
  return j;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// JSON has no NaN; non-finite numbers become null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

WaveState as_u(const WaveState& s, const HarmonicMapProfile& profile) {
  return s.form == Formulation::U ? s : convert(s, profile);
}

std::vector<double> column(const std::vector<EnergyReport>& reps, double EnergyReport::*field) {
  std::vector<double> out;
  out.reserve(reps.size());
  for (const auto& r : reps) out.push_back(r.*field);
  return out;
}

json relaxation_json(const RelaxationMetrics& m) {
  return {{"dist_initial", m.dist_initial},
          {"dist_final", m.dist_final},
          {"dist_ratio", number_or_null(m.dist_ratio)},
          {"data_norm_sq", m.data_norm_sq},
          {"data_norm", std::sqrt(m.data_norm_sq)},
          {"ext_initial", m.ext_initial},
          {"ext_final", m.ext_final},
          {"ext_ratio", number_or_null(m.ext_ratio)},
          {"ext_ratio_literal", number_or_null(m.ext_ratio_literal)},
          {"ext_trend_down", m.ext_trend_down},
          {"energy", m.energy},
          {"energy_drift", number_or_null(m.energy_drift)},
          {"scattering", m.scattering}};
}

ShootingOptions shooting_options(const ExperimentConfig& cfg) {
  ShootingOptions so;
  so.ctrl.rel_tol = cfg.ode_tol;
  so.ctrl.abs_tol = cfg.ode_tol * 1e-6;
  return so;
}

// ---------------------------------------------------------------------------

json harmonic_map_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  if (cfg.n < 1) throw ConfigError("harmonic_map needs n >= 1");
  const auto profile = profile_for(cfg);
  export_profile(profile, out / "profile.csv", out / "profile.json");

  // Trajectory of the stable-manifold branch from the series start down past
  // the crossing, in the (x, y) phase plane.
  const ShootingOptions so = shooting_options(cfg);
  const double alpha = profile.alpha0();
  const double s_start = 0.5 * std::log(alpha / (0.5 * so.series_smallness));
  const auto traj = integrate_pendulum(stable_manifold_ic(cfg.n, alpha, s_start, cfg.tail_order), -0.5, so.ctrl);
  CsvWriter w(out / "pendulum.csv", {"branch", "s", "x", "y"}, {fmt::format("n = {}", cfg.n)});
  for (auto it = traj.rbegin(); it != traj.rend(); ++it) w.row({0.0, it->s, it->x, it->y});
  w.close();

  const auto lin = saddle_linearization(cfg.n);
  const double r_hi = std::min(100.0, profile.r_table_max());
  json j = base_summary(cfg);
  j["n"] = cfg.n;
  j["alpha0"] = alpha;
  j["s0_alpha_plus_1"] = -0.5 * std::log(alpha);
  j["Q_at_1"] = profile.evaluate(1.0).Q;
  j["Qprime_at_1"] = profile.evaluate(1.0).Qprime;
  j["energy"] = profile.energy();
  j["stationary_residual_max"] = stationary_residual_max(profile, 1.0, r_hi);
  j["tail_residual_slope"] = tail_residual_slope(profile, 10.0, r_hi);
  j["monotone"] = is_monotone(profile);
  j["eigenvalues"] = {lin.eigenvalues[0], lin.eigenvalues[1]};
  return j;
}

json evolve_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, bool relaxation) {
  const auto profile = profile_for(cfg);
  std::size_t snap = 0;
  double next_snap = 0.0;
  auto on_sample = [&](const WaveState& s) {
    if (cfg.snapshot_every <= 0.0) return;
    if (s.t - s.t0 + 1e-9 >= next_snap) {
      write_snapshot(out / fmt::format("snapshot_{:04d}.csv", snap++), s);
      next_snap += cfg.snapshot_every;
    }
  };
  const auto run = run_evolution(cfg, profile, on_sample);
  if (cfg.snapshot_every <= 0.0) {
    write_snapshot(out / "snapshot_0000.csv", run.initial);
    write_snapshot(out / "snapshot_0001.csv", run.final);
  }
  write_time_series(out / "time_series.csv", run.reports, cfg.a_values.size());

  const auto m = relaxation_metrics(run, profile);
  json j = base_summary(cfg);
  j["a_values"] = cfg.a_values;
  j["steps"] = run.stats.steps;
  j["dt"] = run.stats.dt;
  j["samples"] = run.stats.samples;
  j["metrics"] = relaxation_json(m);
  // flat copies for sweep aggregation
  j["data_norm"] = std::sqrt(m.data_norm_sq);
  j["scattering"] = m.scattering;
  j["energy_drift"] = number_or_null(m.energy_drift);
  j["dist_ratio"] = number_or_null(m.dist_ratio);
  if (relaxation) {
    j["relaxed"] = m.dist_ratio < 1e-3;
    j["exterior_decayed"] = m.ext_ratio < 1e-4 && m.ext_trend_down;
  }
  return j;
}

json estimate_json(const ExteriorEstimate& e) {
  return {{"a", e.a},
          {"T", e.T},
          {"c1", e.split.c1},
          {"c2", e.split.c2},
          {"norm_total_sq", e.split.norm_total_sq},
          {"norm_pi_sq", e.split.norm_pi_sq},
          {"norm_perp_sq", e.split.norm_perp_sq},
          {"E_plus", e.E_plus},
          {"E_minus", e.E_minus},
          {"plateau_plus", e.plateau_plus},
          {"plateau_minus", e.plateau_minus},
          {"plane_data", e.plane_data},
          {"c_ratio", e.c_ratio ? json(*e.c_ratio) : json(nullptr)}};
}

void write_ensemble(const std::filesystem::path& path, const std::vector<ChannelMember>& members) {
  CsvWriter w(path, {"seed", "a", "norm_total_sq", "norm_pi_sq", "norm_perp_sq", "E_plus", "E_minus", "c_ratio"});
  for (const auto& m : members) {
    const auto& e = m.estimate;
    w.row_text({std::to_string(m.seed), format_number(e.a), format_number(e.split.norm_total_sq),
                format_number(e.split.norm_pi_sq), format_number(e.split.norm_perp_sq), format_number(e.E_plus),
                format_number(e.E_minus), e.c_ratio ? format_number(*e.c_ratio) : std::string("plane-data")});
  }
  w.close();
}

json ensemble_stats(const std::vector<ChannelMember>& members) {
  std::vector<double> ratios;
  for (const auto& m : members)
    if (m.estimate.c_ratio) ratios.push_back(*m.estimate.c_ratio);
  json j;
  j["members"] = members.size();
  j["plane_members"] = members.size() - ratios.size();
  j["c_ratio_min"] = ratios.empty() ? json(nullptr) : json(*std::min_element(ratios.begin(), ratios.end()));
  j["c_ratio_median"] = ratios.empty() ? json(nullptr) : json(median(ratios));
  return j;
}

ExteriorControl exterior_control(const ExperimentConfig& cfg) {
  ExteriorControl c;
  c.cfl = cfg.cfl;
  c.T = cfg.T;  // 0 selects the longest clean window
  c.sample_interval = cfg.sample_every;
  c.plateau_tol = cfg.plateau_tol;
  c.margin = cfg.data.margin;
  return c;
}

json channels_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  json j = base_summary(cfg);
  if (cfg.family == DataFamily::RandomSmooth) {
    const auto members = run_channel_ensemble(cfg, cfg.h);
    write_ensemble(out / "ensemble.csv", members);
    j["ensemble"] = ensemble_stats(members);
    j["c_ratio_min"] = j["ensemble"]["c_ratio_min"];
    if (cfg.refine) {
      const auto fine = run_channel_ensemble(cfg, 0.5 * cfg.h);
      write_ensemble(out / "ensemble_refined.csv", fine);
      j["ensemble_refined"] = ensemble_stats(fine);
      double worst = 0.0;
      for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& c0 = members[k].estimate.c_ratio;
        const auto& c1 = fine[k].estimate.c_ratio;
        if (c0 && c1) worst = std::max(worst, std::abs(*c1 - *c0) / std::abs(*c0));
      }
      j["refinement_max_rel_change"] = worst;
      const auto& m0 = j["ensemble"]["c_ratio_min"];
      const auto& m1 = j["ensemble_refined"]["c_ratio_min"];
      if (!m0.is_null() && !m1.is_null()) {
        j["refinement_min_rel_change"] = std::abs(m1.get<double>() - m0.get<double>()) / m0.get<double>();
      }
    }
    return j;
  }

  // Single datum from the configured family, in U form.
  const RadialGrid grid(cfg.r_max, cfg.h);
  const auto profile = profile_for(cfg);
  const auto data = make_initial_data(cfg.family, cfg.data, grid, cfg.n, Formulation::U,
                                      cfg.family == DataFamily::PlaneTail ? nullptr : &profile);
  auto ctrl = exterior_control(cfg);
  if (cfg.family == DataFamily::PlaneTail && !(cfg.data.plane.outer_cut > 0.0)) {
    ctrl.tail = NewtonTail{cfg.data.plane.c1, cfg.data.plane.c2};
  }
  const auto est = asymptotic_exterior_energy(data, cfg.channels_a, ctrl);
  CsvWriter w(out / "exterior_series.csv", {"t", "E_plus_raw", "E_plus_projected", "E_minus_raw", "E_minus_projected"});
  for (std::size_t k = 0; k < est.forward.t.size(); ++k) {
    w.row({est.forward.t[k], est.forward.raw[k], est.forward.projected[k], est.backward.raw[k],
           est.backward.projected[k]});
  }
  w.close();
  j["estimate"] = estimate_json(est);
  j["c_ratio_min"] = est.c_ratio ? json(*est.c_ratio) : json(nullptr);
  double raw_max = 0.0, proj_max = 0.0;
  for (const auto* s : {&est.forward, &est.backward}) {
    for (double v : s->raw) raw_max = std::max(raw_max, v);
    for (double v : s->projected) proj_max = std::max(proj_max, v);
  }
  j["exterior_raw_max"] = raw_max;
  j["exterior_projected_max"] = proj_max;
  return j;
}

json convergence_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::vector<double> hs = cfg.h_values;
  std::sort(hs.rbegin(), hs.rend());
  const auto profile = profile_for(cfg);
  std::vector<WaveState> finals;
  for (double h : hs) {
    ExperimentConfig c = cfg;
    c.h = h;
    finals.push_back(run_evolution(c, profile).final);
  }
  // Differences of consecutive levels on the coarse nodes inside the clean region.
  std::vector<double> err_max, err_l2;
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    const auto& a = finals[k];
    const auto& b = finals[k + 1];
    const double ratio = a.grid.h() / b.grid.h();
    const auto stride = static_cast<std::size_t>(std::lround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
      throw ConfigError("convergence.h_values must be integer multiples of each other");
    }
    const double r_hi = std::min(a.causal_horizon(), b.causal_horizon());
    double emax = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < a.grid.size() && a.grid.r(i) <= r_hi; ++i) {
      const double d = a.pos[i] - b.pos[i * stride];
      emax = std::max(emax, std::abs(d));
      e2 += d * d * a.grid.h();
    }
    err_max.push_back(emax);
    err_l2.push_back(std::sqrt(e2));
  }
  std::vector<double> orders;
  for (std::size_t k = 0; k + 1 < err_max.size(); ++k) {
    orders.push_back(std::log(err_max[k] / err_max[k + 1]) / std::log(hs[k] / hs[k + 1]));
  }
  CsvWriter w(out / "convergence.csv", {"h", "error_max", "error_l2"});
  for (std::size_t k = 0; k < err_max.size(); ++k) w.row({hs[k], err_max[k], err_l2[k]});
  w.close();

  json j = base_summary(cfg);
  j["h_values"] = hs;
  j["error_max"] = err_max;
  j["error_l2"] = err_l2;
  j["orders"] = orders;
  j["observed_order"] = orders.empty() ? json(nullptr) : json(orders.back());
  return j;
}

json ell0_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const RadialGrid grid(cfg.r_max, cfg.h);
  auto u = WaveState::zeros(grid, Formulation::U, cfg.n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    u.pos[i] = cfg.synth_ell0 * std::pow(r, -3.0) + cfg.synth_beta * std::pow(r, -3.0 - cfg.synth_q);
  }
  u.inner_value = u.pos.front();
  u.outer_value = u.pos.back();
  u.horizon_base = grid.r_max();
  const auto fit = estimate_ell0(u, cfg.fit_window);
  const json fj = to_json(fit);
  write_json(out / "tail_fit.json", fj);

  CsvWriter w(out / "v0.csv", {"r", "v0"});
  const auto v0 = compute_v0(u);
  for (std::size_t i = 0; i < grid.size(); ++i) w.row({grid.r(i), v0[i]});
  w.close();

  json j = base_summary(cfg);
  j["planted"] = {{"ell0", cfg.synth_ell0}, {"beta", cfg.synth_beta}, {"p", cfg.synth_q}};
  j["fit"] = fj;
  j["ell0"] = fit.ell0;
  j["p"] = fit.p;
  j["ell0_rel_error"] = std::abs(fit.ell0 - cfg.synth_ell0) / std::abs(cfg.synth_ell0);
  return j;
}

int exit_class(const std::exception_ptr& e, std::string& status, std::string& message) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    status = "config_error";
    message = x.what();
    return 2;
  } catch (const NumericalError& x) {
    status = "numerical_abort";
    message = x.what();
    return 3;
  } catch (const IoError& x) {
    status = "io_error";
    message = x.what();
    return 4;
  } catch (const std::exception& x) {
    status = "error";
    message = x.what();
    return 1;
  }
}

}  // namespace

const char* version() { return "extwm 1.0.0"; }

HarmonicMapProfile profile_for(const ExperimentConfig& cfg) {
  return build_harmonic_map(cfg.n, shooting_options(cfg), cfg.r_table_max, cfg.tail_order);
}

EvolutionRun run_evolution(const ExperimentConfig& cfg, const HarmonicMapProfile& profile,
                           const Observer& on_sample) {
  if (profile.degree() != cfg.n) throw ConfigError("run_evolution: profile degree differs from n");
  const RadialGrid grid(cfg.r_max, cfg.h);
  EvolutionRun run;
  run.initial = make_initial_data(cfg.family, cfg.data, grid, cfg.n, cfg.formulation, &profile);

  PotentialPack pack;
  if (cfg.formulation == Formulation::U && cfg.model != UModel::Free) pack = PotentialPack::build(grid, profile);
  else if (cfg.formulation == Formulation::Psi) pack = PotentialPack::build(grid, profile);

  std::unique_ptr<WaveOperator> op;
  if (cfg.formulation == Formulation::Psi) op = std::make_unique<PsiOperator>(grid);
  else op = std::make_unique<UOperator>(grid, pack, cfg.model);

  DiagnosticsRecorder recorder(profile, {cfg.A_local, cfg.a_values, cfg.model}, &pack);

  EvolveOptions opts;
  opts.cfl = cfg.cfl;
  opts.sample_interval = cfg.sample_every;
  double need = cfg.A_local;
  for (double a : cfg.a_values) need = std::max(need, a + cfg.T + grid.h());
  opts.required_radius = need;
  check_causal_window(run.initial, cfg.T, opts);

  run.final = run.initial;
  run.stats = evolve(run.final, cfg.T, *op, opts, [&](const WaveState& s) {
    recorder(s);
    if (on_sample) on_sample(s);
  });
  run.reports = recorder.reports();
  return run;
}

bool decreasing_in_trend(const std::vector<double>& t, const std::vector<double>& y, int windows, double slack,
                         double floor) {
  if (t.size() != y.size() || t.size() < 2 || windows < 2) return false;
  const double t0 = t.front(), t1 = t.back();
  std::vector<double> means;
  for (int w = 0; w < windows; ++w) {
    const double lo = t0 + (t1 - t0) * w / windows;
    const double hi = t0 + (t1 - t0) * (w + 1) / windows;
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const bool last = w == windows - 1;
      if (t[k] >= lo && (t[k] < hi || (last && t[k] <= hi))) {
        sum += y[k];
        ++count;
      }
    }
    if (count == 0) return false;
    means.push_back(sum / count);
  }
  for (std::size_t k = 1; k < means.size(); ++k) {
    if (means[k] > means[k - 1] * (1.0 + slack) + floor) return false;
  }
  return true;
}

RelaxationMetrics relaxation_metrics(const EvolutionRun& run, const HarmonicMapProfile& profile) {
  if (run.reports.empty()) throw ConfigError("relaxation_metrics: run has no samples");
  RelaxationMetrics m;
  const auto& first = run.reports.front();
  const auto& last = run.reports.back();
  m.dist_initial = first.dist_Q_local;
  m.dist_final = last.dist_Q_local;
  m.dist_ratio = m.dist_initial > 0.0 ? m.dist_final / m.dist_initial : std::numeric_limits<double>::quiet_NaN();
  const double hn = h_norm(as_u(run.initial, profile));
  m.data_norm_sq = hn * hn;

  if (!first.E_ext.empty()) {
    m.ext_initial = first.E_ext.front();
    m.ext_final = last.E_ext.front();
    m.ext_ratio = m.data_norm_sq > 0.0 ? m.ext_final / m.data_norm_sq : 0.0;
    m.ext_ratio_literal =
        m.ext_initial > 0.0 ? m.ext_final / m.ext_initial : std::numeric_limits<double>::quiet_NaN();
    std::vector<double> t, y;
    for (const auto& r : run.reports) {
      t.push_back(r.t);
      y.push_back(r.E_ext.front());
    }
    m.ext_trend_down = decreasing_in_trend(t, y, 8, 1e-6, 1e-12 * m.data_norm_sq);
  }

  const auto E = column(run.reports, &EnergyReport::E_total);
  m.energy = E.front();
  double drift = 0.0;
  for (double e : E) drift = std::max(drift, std::abs(e - E.front()));
  m.energy_drift = E.front() != 0.0 ? drift / std::abs(E.front()) : std::numeric_limits<double>::quiet_NaN();
  m.scattering = scattering_norm(last);
  return m;
}

WaveState channel_data(const ExperimentConfig& cfg, const RadialGrid& grid, std::uint64_t seed) {
  DataParams p = cfg.data;
  p.random.seed = seed;
  static const HarmonicMapProfile zero = build_harmonic_map(0);
  return make_initial_data(DataFamily::RandomSmooth, p, grid, 0, Formulation::U, &zero);
}

std::vector<ChannelMember> run_channel_ensemble(const ExperimentConfig& cfg, double h) {
  const RadialGrid grid(cfg.r_max, h);
  const auto ctrl = exterior_control(cfg);
  std::vector<ChannelMember> out;
  for (int k = 0; k < cfg.members; ++k) {
    ChannelMember m;
    m.seed = cfg.data.random.seed + static_cast<std::uint64_t>(k);
    m.estimate = asymptotic_exterior_energy(channel_data(cfg, grid, m.seed), cfg.channels_a, ctrl);
    out.push_back(std::move(m));
  }
  return out;
}

json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  json j;
  switch (cfg.experiment) {
    case ExperimentKind::HarmonicMap: j = harmonic_map_experiment(cfg, out); break;
    case ExperimentKind::Evolve: j = evolve_experiment(cfg, out, false); break;
    case ExperimentKind::Relaxation: j = evolve_experiment(cfg, out, true); break;
    case ExperimentKind::Channels: j = channels_experiment(cfg, out); break;
    case ExperimentKind::Convergence: j = convergence_experiment(cfg, out); break;
    case ExperimentKind::Ell0Synth: j = ell0_experiment(cfg, out); break;
  }
  write_json(out / "summary.json", j);
  return j;
}

json run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out, unsigned threads) {
  validate(cfg);
  if (cfg.sweep_key.empty()) throw ConfigError("sweep: sweep.key is not set");
  const std::size_t count = cfg.sweep_values.size();

  // Members are built up front so a bad axis value fails before any run.
  std::vector<ExperimentConfig> members;
  for (std::size_t k = 0; k < count; ++k) {
    ExperimentConfig c = cfg;
    c.sweep_key.clear();
    c.sweep_values.clear();
    apply_setting(c, cfg.sweep_key, cfg.sweep_values[k], fmt::format("sweep value {}", k));
    c.output_dir = out / fmt::format("member_{}", k);
    validate(c);
    members.push_back(std::move(c));
  }

  struct Outcome {
    json summary;
    std::string status = "ok";
    std::string message;
    int code = 0;
  };
  std::vector<Outcome> results(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        results[k].summary = run_experiment(members[k], members[k].output_dir);
      } catch (...) {
        results[k].code = exit_class(std::current_exception(), results[k].status, results[k].message);
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < nt; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Aggregate: scalar numbers and booleans at the top level of each summary.
  std::vector<std::string> keys;
  for (const auto& r : results) {
    for (const auto& [k, v] : r.summary.items()) {
      if ((v.is_number() || v.is_boolean() || v.is_null()) && std::find(keys.begin(), keys.end(), k) == keys.end()) {
        keys.push_back(k);
      }
    }
  }
  std::sort(keys.begin(), keys.end());
  std::vector<std::string> header{"member", "value", "status"};
  header.insert(header.end(), keys.begin(), keys.end());
  CsvWriter w(out / "sweep.csv", header, {fmt::format("key = {}", cfg.sweep_key)});
  json agg = base_summary(cfg);
  agg["experiment"] = "sweep";
  agg["member_experiment"] = std::string(to_string(cfg.experiment));
  agg["members"] = json::array();
  int failed = 0;
  int first_code = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& r = results[k];
    std::vector<std::string> row{std::to_string(k), cfg.sweep_values[k], r.status};
    for (const auto& key : keys) {
      const auto it = r.summary.find(key);
      if (it == r.summary.end() || it->is_null()) row.emplace_back();
      else if (it->is_boolean()) row.emplace_back(it->get<bool>() ? "1" : "0");
      else row.push_back(format_number(it->get<double>()));
    }
    w.row_text(row);
    if (r.code != 0) {
      ++failed;
      if (first_code == 0) first_code = r.code;
    }
    agg["members"].push_back({{"member", k}, {"value", cfg.sweep_values[k]}, {"status", r.status},
                              {"message", r.message}, {"exit_code", r.code}});
  }
  w.close();
  agg["failed"] = failed;
  agg["exit_code"] = first_code;
  write_json(out / "summary.json", agg);
  return agg;
}

}  // namespace extwm
