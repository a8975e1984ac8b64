#pragma once

// Flat-file datasets: named numeric columns written as CSV or JSON.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ucp/extraction.hpp"

namespace ucp {

enum class OutputFormat { csv, json };

OutputFormat parse_format(std::string_view name);
std::string_view extension(OutputFormat format);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  [[nodiscard]] std::vector<double> column(std::string_view name) const;
};

// CSV: header row then one line per row, 17 significant digits.
// JSON: an object mapping each column name to its array of values.
void write_table(std::ostream& os, const Table& table, OutputFormat format);
// Writes `<stem>.csv` or `<stem>.json` in `dir` (created if needed) and returns the path.
std::filesystem::path write_table(const std::filesystem::path& dir, std::string_view stem, const Table& table,
                                  OutputFormat format);

// Reads a CSV with a header row and numeric columns.
Table read_csv_table(const std::filesystem::path& path);

// Scan CSV: header row, then voltage (V) and ejected count columns.
ExtractionScan read_scan_csv(const std::filesystem::path& path, double gap, double expansion_time = 0.0);

}  // namespace ucp
