#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace symk {

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Comma-joined line followed by '\n'.
std::string csv_line(const std::vector<std::string>& cells);

/// Reads a CSV with a header row of names and numeric data rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(std::string_view path);

}  // namespace symk
