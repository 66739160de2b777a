#pragma once

// CSV and JSON artifacts. Numbers are written with 17 significant digits so
// files round-trip exactly.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extwm/energy.hpp"
#include "extwm/wave.hpp"

namespace extwm {

struct CsvTable {
  std::filesystem::path source;
  std::vector<std::string> comments;  ///< '#' lines without the marker
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  ///< source line of each row

  /// Numeric column. Throws ConfigError if the column is missing or a cell
  /// is not a number (empty cells read as NaN).
  std::vector<double> column(std::string_view name) const;
  std::vector<std::string> text_column(std::string_view name) const;
};

/// Reads a CSV with a header line; '#' lines are comments. Throws IoError
/// when the file cannot be opened and ConfigError on ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

/// RFC-4180 quoting for header fields.
std::string csv_field(std::string_view s);

/// Row-wise CSV writer; creates parent directories.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            const std::vector<std::string>& comments = {});

  void row(const std::vector<double>& values);
  /// Pre-formatted fields, quoted as needed.
  void row_text(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

std::string format_number(double v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// `r,pos,vel` with a comment header carrying t, formulation, n and h.
void write_snapshot(const std::filesystem::path& path, const WaveState& state);

/// `t,E_total,E_local,dist_Q_local,E_ext_a1,...,E_ext_ak,L6,S_accum`.
void write_time_series(const std::filesystem::path& path, const std::vector<EnergyReport>& reports,
                       std::size_t a_count);

}  // namespace extwm
