#include "extwm/io.hpp"

#include <charconv>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "extwm/errors.hpp"

namespace extwm {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

void ensure_parent(const std::filesystem::path& path) {
  const auto dir = path.parent_path();
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
}

std::size_t column_index(const CsvTable& tab, std::string_view name) {
  for (std::size_t k = 0; k < tab.header.size(); ++k)
    if (tab.header[k] == name) return k;
  throw ConfigError(fmt::format("{}: no column '{}'", tab.source.string(), name));
}

}  // namespace

std::vector<double> CsvTable::column(std::string_view name) const {
  const std::size_t k = column_index(*this, name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i][k];
    double v = std::numeric_limits<double>::quiet_NaN();
    if (!f.empty()) {
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ConfigError(fmt::format("{}:{}: '{}' is not a number", source.string(), lines[i], f));
      }
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> CsvTable::text_column(std::string_view name) const {
  const std::size_t k = column_index(*this, name);
  std::vector<std::string> out;
  for (const auto& row : rows) out.push_back(row[k]);
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  CsvTable tab;
  tab.source = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      tab.comments.emplace_back(trim(t.substr(1)));
      continue;
    }
    auto fields = split_line(t);
    if (tab.header.empty()) {
      tab.header = std::move(fields);
      continue;
    }
    if (fields.size() != tab.header.size()) {
      throw ConfigError(fmt::format("{}:{}: expected {} fields, found {}", path.string(), lineno,
                                    tab.header.size(), fields.size()));
    }
    tab.rows.push_back(std::move(fields));
    tab.lines.push_back(lineno);
  }
  if (tab.header.empty()) throw ConfigError(fmt::format("{}: missing header", path.string()));
  return tab;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& comments)
    : path_(path), columns_(header.size()) {
  ensure_parent(path);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError(fmt::format("cannot write {}", path.string()));
  for (const auto& c : comments) out_ << "# " << c << '\n';
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << csv_field(header[k]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) {
    throw std::logic_error(fmt::format("CsvWriter: row has {} values, header {}", values.size(), columns_));
  }
  for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << format_number(values[k]);
  out_ << '\n';
}

void CsvWriter::row_text(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) {
    throw std::logic_error(fmt::format("CsvWriter: row has {} fields, header {}", fields.size(), columns_));
  }
  for (std::size_t k = 0; k < fields.size(); ++k) out_ << (k ? "," : "") << csv_field(fields[k]);
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw IoError(fmt::format("error while writing {}", path_.string()));
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
  if (!out) throw IoError(fmt::format("error while writing {}", path.string()));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_snapshot(const std::filesystem::path& path, const WaveState& state) {
  CsvWriter w(path, {"r", "pos", "vel"},
              {fmt::format("t = {}", format_number(state.t)),
               fmt::format("formulation = {}", to_string(state.form)), fmt::format("n = {}", state.n),
               fmt::format("h = {}", format_number(state.grid.h()))});
  for (std::size_t i = 0; i < state.pos.size(); ++i) w.row({state.grid.r(i), state.pos[i], state.vel[i]});
  w.close();
}

void write_time_series(const std::filesystem::path& path, const std::vector<EnergyReport>& reports,
                       std::size_t a_count) {
  std::vector<std::string> header{"t", "E_total", "E_local", "dist_Q_local"};
  for (std::size_t k = 1; k <= a_count; ++k) header.push_back(fmt::format("E_ext_a{}", k));
  header.push_back("L6");
  header.push_back("S_accum");
  CsvWriter w(path, header);
  for (const auto& r : reports) {
    std::vector<double> row{r.t, r.E_total, r.E_local, r.dist_Q_local};
    for (std::size_t k = 0; k < a_count; ++k) row.push_back(k < r.E_ext.size() ? r.E_ext[k] : 0.0);
    row.push_back(r.L6);
    row.push_back(r.S_accum);
    w.row(row);
  }
  w.close();
}

}  // namespace extwm
