#include "ucp/table_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ucp/error.hpp"

namespace ucp {

OutputFormat parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + std::string(name) + "' (expected csv or json)");
}

std::string_view extension(OutputFormat format) { return format == OutputFormat::csv ? ".csv" : ".json"; }

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw InvalidInput("row width does not match the table columns");
  rows.push_back(std::move(row));
}

std::vector<double> Table::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
  throw InvalidInput("no column named '" + std::string(name) + "'");
}

void write_table(std::ostream& os, const Table& table, OutputFormat format) {
  if (format == OutputFormat::csv) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
    os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
      os << '\n';
    }
    return;
  }
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    auto& arr = j[table.columns[c]] = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      // JSON has no NaN; missing values become null
      if (std::isfinite(row[c])) arr.push_back(row[c]);
      else arr.push_back(nullptr);
    }
  }
  os << j.dump(1) << '\n';
}

std::filesystem::path write_table(const std::filesystem::path& dir, std::string_view stem, const Table& table,
                                  OutputFormat format) {
  std::filesystem::create_directories(dir);
  auto path = dir / (std::string(stem) + std::string(extension(format)));
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_table(os, table, format);
  return path;
}

Table read_csv_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(path.string() + " is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
    }
    if (row.size() != t.columns.size())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " columns");
    t.rows.push_back(std::move(row));
  }
  return t;
}

ExtractionScan read_scan_csv(const std::filesystem::path& path, double gap, double expansion_time) {
  const Table t = read_csv_table(path);
  if (t.columns.size() != 2) throw ConfigError("scan CSV needs exactly two columns (voltage, count)");
  ExtractionScan scan;
  scan.gap = gap;
  scan.expansion_time = expansion_time;
  for (const auto& r : t.rows) {
    scan.voltages.push_back(r[0]);
    scan.ejected_counts.push_back(r[1]);
  }
  scan.validate();
  return scan;
}

}  // namespace ucp
