#include "extwm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "extwm/errors.hpp"
#include "extwm/io.hpp"

namespace extwm {

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::HarmonicMap: return "harmonic_map";
    case ExperimentKind::Evolve: return "evolve";
    case ExperimentKind::Channels: return "channels";
    case ExperimentKind::Relaxation: return "relaxation";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::Ell0Synth: return "ell0_synth";
  }
  return "evolve";
}

ExperimentKind parse_experiment(std::string_view s) {
  for (auto k : {ExperimentKind::HarmonicMap, ExperimentKind::Evolve, ExperimentKind::Channels,
                 ExperimentKind::Relaxation, ExperimentKind::Convergence, ExperimentKind::Ell0Synth}) {
    if (s == to_string(k)) return k;
  }
  // CLI subcommand spelling
  std::string alt(s);
  for (auto& c : alt) c = c == '-' ? '_' : c;
  if (alt != s) return parse_experiment(alt);
  throw ConfigError(fmt::format("unknown experiment '{}'", s));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(fmt::format("'{}' is not a finite number", s));
  }
  return v;
}

template <class Int>
Int to_integer(std::string_view s) {
  s = trim(s);
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(fmt::format("'{}' is not an integer", s));
  }
  return v;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", s));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.emplace_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> to_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_number(v[k]);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + v[k];
  return out;
}

enum class Kind { Number, Integer, Text, List, TextList, Pair, Bool };

struct Field {
  std::string key;
  Kind kind;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

Field number(std::string key, double ExperimentConfig::*ptr) {
  return {std::move(key), Kind::Number, [ptr](const ExperimentConfig& c) { return format_number(c.*ptr); },
          [ptr](ExperimentConfig& c, std::string_view v) { c.*ptr = to_double(v); }};
}

template <class Member>
Field data_number(std::string key, Member member) {
  return {std::move(key), Kind::Number,
          [member](const ExperimentConfig& c) { return format_number(member(c)); },
          [member](ExperimentConfig& c, std::string_view v) { member(c) = to_double(v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"experiment", Kind::Text, [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); },
                 [](ExperimentConfig& c, std::string_view v) { c.experiment = parse_experiment(trim(v)); }});
    f.push_back({"formulation", Kind::Text,
                 [](const ExperimentConfig& c) { return std::string(to_string(c.formulation)); },
                 [](ExperimentConfig& c, std::string_view v) { c.formulation = parse_formulation(trim(v)); }});
    f.push_back({"model", Kind::Text, [](const ExperimentConfig& c) { return std::string(to_string(c.model)); },
                 [](ExperimentConfig& c, std::string_view v) { c.model = parse_umodel(trim(v)); }});
    f.push_back({"n", Kind::Integer, [](const ExperimentConfig& c) { return std::to_string(c.n); },
                 [](ExperimentConfig& c, std::string_view v) { c.n = to_integer<int>(v); }});
    f.push_back(number("grid.r_max", &ExperimentConfig::r_max));
    f.push_back(number("grid.h", &ExperimentConfig::h));
    f.push_back(number("time.T", &ExperimentConfig::T));
    f.push_back(number("time.cfl", &ExperimentConfig::cfl));
    f.push_back(number("time.sample_every", &ExperimentConfig::sample_every));
    f.push_back({"data.family", Kind::Text, [](const ExperimentConfig& c) { return std::string(to_string(c.family)); },
                 [](ExperimentConfig& c, std::string_view v) { c.family = parse_data_family(trim(v)); }});
    f.push_back({"data.seed", Kind::Integer,
                 [](const ExperimentConfig& c) { return c.seed_given ? std::to_string(c.data.random.seed) : std::string(); },
                 [](ExperimentConfig& c, std::string_view v) {
                   if (trim(v).empty()) {
                     c.seed_given = false;
                     c.data.random.seed = 0;
                   } else {
                     c.data.random.seed = to_integer<std::uint64_t>(v);
                     c.seed_given = true;
                   }
                 }});
    f.push_back({"data.table", Kind::Text, [](const ExperimentConfig& c) { return c.data.table.string(); },
                 [](ExperimentConfig& c, std::string_view v) { c.data.table = std::string(trim(v)); }});
    f.push_back(data_number("data.energy_cap", [](auto& c) -> auto& { return c.data.energy_cap; }));
    f.push_back(data_number("data.margin", [](auto& c) -> auto& { return c.data.margin; }));
    f.push_back(data_number("data.bump.A", [](auto& c) -> auto& { return c.data.bump.A; }));
    f.push_back(data_number("data.bump.B", [](auto& c) -> auto& { return c.data.bump.B; }));
    f.push_back(data_number("data.bump.r_c", [](auto& c) -> auto& { return c.data.bump.r_c; }));
    f.push_back(data_number("data.bump.sigma", [](auto& c) -> auto& { return c.data.bump.sigma; }));
    f.push_back(data_number("data.direct.k", [](auto& c) -> auto& { return c.data.direct.k; }));
    f.push_back(data_number("data.direct.B", [](auto& c) -> auto& { return c.data.direct.B; }));
    f.push_back(data_number("data.direct.r_c", [](auto& c) -> auto& { return c.data.direct.r_c; }));
    f.push_back(data_number("data.direct.width", [](auto& c) -> auto& { return c.data.direct.width; }));
    f.push_back(data_number("data.plane.c1", [](auto& c) -> auto& { return c.data.plane.c1; }));
    f.push_back(data_number("data.plane.c2", [](auto& c) -> auto& { return c.data.plane.c2; }));
    f.push_back(data_number("data.plane.a", [](auto& c) -> auto& { return c.data.plane.a; }));
    f.push_back(data_number("data.plane.outer_cut", [](auto& c) -> auto& { return c.data.plane.outer_cut; }));
    f.push_back(data_number("data.plane.outer_width", [](auto& c) -> auto& { return c.data.plane.outer_width; }));
    f.push_back({"data.random.bumps", Kind::Integer,
                 [](const ExperimentConfig& c) { return std::to_string(c.data.random.bumps); },
                 [](ExperimentConfig& c, std::string_view v) { c.data.random.bumps = to_integer<int>(v); }});
    f.push_back(data_number("data.random.r_lo", [](auto& c) -> auto& { return c.data.random.r_lo; }));
    f.push_back(data_number("data.random.r_hi", [](auto& c) -> auto& { return c.data.random.r_hi; }));
    f.push_back(data_number("data.random.amp", [](auto& c) -> auto& { return c.data.random.amp; }));
    f.push_back(data_number("data.random.width_min", [](auto& c) -> auto& { return c.data.random.width_min; }));
    f.push_back(data_number("data.random.width_max", [](auto& c) -> auto& { return c.data.random.width_max; }));
    f.push_back(number("diagnostics.A_local", &ExperimentConfig::A_local));
    f.push_back({"diagnostics.a_values", Kind::List, [](const ExperimentConfig& c) { return join(c.a_values); },
                 [](ExperimentConfig& c, std::string_view v) { c.a_values = to_list(v); }});
    f.push_back(number("diagnostics.plateau_tol", &ExperimentConfig::plateau_tol));
    f.push_back({"diagnostics.fit_window", Kind::Pair,
                 [](const ExperimentConfig& c) {
                   return c.fit_window ? join(std::vector{c.fit_window->first, c.fit_window->second}) : std::string();
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   const auto l = to_list(v);
                   if (l.empty()) {
                     c.fit_window.reset();
                   } else if (l.size() == 2) {
                     c.fit_window = std::pair{l[0], l[1]};
                   } else {
                     throw ConfigError("fit window needs two radii");
                   }
                 }});
    f.push_back(number("diagnostics.snapshot_every", &ExperimentConfig::snapshot_every));
    f.push_back(number("harmonic.r_table_max", &ExperimentConfig::r_table_max));
    f.push_back({"harmonic.tail_order", Kind::Integer,
                 [](const ExperimentConfig& c) { return std::to_string(c.tail_order); },
                 [](ExperimentConfig& c, std::string_view v) { c.tail_order = to_integer<int>(v); }});
    f.push_back(number("harmonic.ode_tol", &ExperimentConfig::ode_tol));
    f.push_back(number("channels.a", &ExperimentConfig::channels_a));
    f.push_back({"channels.members", Kind::Integer,
                 [](const ExperimentConfig& c) { return std::to_string(c.members); },
                 [](ExperimentConfig& c, std::string_view v) { c.members = to_integer<int>(v); }});
    f.push_back({"channels.refine", Kind::Bool,
                 [](const ExperimentConfig& c) { return std::string(c.refine ? "true" : "false"); },
                 [](ExperimentConfig& c, std::string_view v) { c.refine = to_bool(v); }});
    f.push_back({"convergence.h_values", Kind::List, [](const ExperimentConfig& c) { return join(c.h_values); },
                 [](ExperimentConfig& c, std::string_view v) { c.h_values = to_list(v); }});
    f.push_back(number("ell0.ell0", &ExperimentConfig::synth_ell0));
    f.push_back(number("ell0.beta", &ExperimentConfig::synth_beta));
    f.push_back(number("ell0.q", &ExperimentConfig::synth_q));
    f.push_back({"sweep.key", Kind::Text, [](const ExperimentConfig& c) { return c.sweep_key; },
                 [](ExperimentConfig& c, std::string_view v) { c.sweep_key = std::string(trim(v)); }});
    f.push_back({"sweep.values", Kind::TextList, [](const ExperimentConfig& c) { return join(c.sweep_values); },
                 [](ExperimentConfig& c, std::string_view v) { c.sweep_values = split_list(v); }});
    f.push_back({"output_dir", Kind::Text, [](const ExperimentConfig& c) { return c.output_dir.string(); },
                 [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); }});
    return f;
  }();
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(fmt::format("unknown key '{}'", key));
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value, std::string_view where) {
  try {
    find_field(trim(key)).set(cfg, value);
  } catch (const ConfigError& e) {
    if (where.empty()) throw;
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  ExperimentConfig cfg;
  std::size_t lineno = 0, start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = fmt::format("{}:{}", source, lineno);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("{}: expected 'key = value'", where));
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("{}: missing key", where));
    apply_setting(cfg, key, line.substr(eq + 1), where);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--set '{}': expected key=value", o));
    apply_setting(cfg, std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1),
                  fmt::format("--set {}", o));
  }
}

void validate(const ExperimentConfig& c) {
  if (c.n < 0) throw ConfigError("n must be nonnegative");
  if (!(c.r_max > 1.0)) throw ConfigError("grid.r_max must exceed 1");
  if (!(c.h > 0.0)) throw ConfigError("grid.h must be positive");
  if (!(c.T >= 0.0)) throw ConfigError("time.T must be nonnegative");
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw ConfigError("time.cfl must lie in (0, 1]");
  if (!(c.sample_every > 0.0)) throw ConfigError("time.sample_every must be positive");
  if (c.family == DataFamily::RandomSmooth && !c.seed_given) {
    throw ConfigError("data.seed is required for random_smooth data");
  }
  if (c.family == DataFamily::CustomTable && c.data.table.empty()) {
    throw ConfigError("data.table is required for custom_table data");
  }
  if (c.members < 1) throw ConfigError("channels.members must be at least 1");
  if (c.tail_order != 1 && c.tail_order != 2) throw ConfigError("harmonic.tail_order must be 1 or 2");
  if (!(c.ode_tol > 0.0)) throw ConfigError("harmonic.ode_tol must be positive");
  if (c.experiment == ExperimentKind::Convergence && c.h_values.size() < 3) {
    throw ConfigError("convergence.h_values needs at least three spacings");
  }
  if (!c.sweep_key.empty()) {
    if (c.sweep_key == "sweep.key" || c.sweep_key == "sweep.values") throw ConfigError("cannot sweep the sweep keys");
    (void)find_field(c.sweep_key);
    if (c.sweep_values.empty()) throw ConfigError("sweep.values is empty");
  }
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  return out;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : fields()) {
    const std::string v = f.get(cfg);
    switch (f.kind) {
      case Kind::Number: j[f.key] = to_double(v); break;
      case Kind::Integer:
        if (v.empty()) {
          j[f.key] = nullptr;
        } else if (v.front() == '-') {
          j[f.key] = to_integer<std::int64_t>(v);
        } else {
          j[f.key] = to_integer<std::uint64_t>(v);
        }
        break;
      case Kind::Text: j[f.key] = v; break;
      case Kind::Bool: j[f.key] = to_bool(v); break;
      case Kind::List:
      case Kind::Pair: {
        const auto l = to_list(v);
        j[f.key] = (f.kind == Kind::Pair && l.empty()) ? nlohmann::json(nullptr) : nlohmann::json(l);
        break;
      }
      case Kind::TextList: j[f.key] = split_list(v); break;
    }
  }
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_null()) {
      text = "";
    } else if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_unsigned()) {
      text = std::to_string(value.get<std::uint64_t>());
    } else if (value.is_number_integer()) {
      text = std::to_string(value.get<std::int64_t>());
    } else if (value.is_number()) {
      text = format_number(value.get<double>());
    } else if (value.is_array()) {
      for (std::size_t k = 0; k < value.size(); ++k) {
        const auto& e = value[k];
        text += k ? ", " : "";
        text += e.is_string() ? e.get<std::string>() : format_number(e.get<double>());
      }
    } else {
      throw ConfigError(fmt::format("config JSON: unsupported value for '{}'", key));
    }
    apply_setting(cfg, key, text, "config JSON");
  }
  return cfg;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

}  // namespace extwm
