#include "symk/io.hpp"

#include "symk/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace symk {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

CsvTable read_csv(std::string_view path) {
  std::ifstream in{std::string(path)};
  require(bool(in), ErrorCode::IoError, "cannot open " + std::string(path));
  CsvTable table;
  std::string line;
  require(bool(std::getline(in, line)), ErrorCode::IoError, std::string(path) + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_cells(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_cells(line);
    require(cells.size() == table.header.size(), ErrorCode::IoError,
            std::string(path) + ":" + std::to_string(line_no) + ": wrong number of columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == c.size() && !c.empty(), ErrorCode::IoError,
              std::string(path) + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace symk
