#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scalinglab/types.hpp"

namespace scalinglab {

inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ParseError("csv: missing column '" + name + "'");
  }
};

inline double parse_cell(const std::string& cell, int row, int col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw ParseError("csv: non-numeric cell at row " + std::to_string(row) +
                     ", column " + std::to_string(col) + ": '" + cell + "'");
  }
  return v;
}

/// Reads a numeric CSV with a mandatory header row.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (line.empty()) continue;
    if (table.header.empty()) {
      table.header = split_csv_line(line);
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != table.header.size())
      throw ParseError("csv: ragged row " + std::to_string(row) + " in '" + path +
                       "' (expected " + std::to_string(table.header.size()) +
                       " cells, got " + std::to_string(cells.size()) + ")");
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      values[c] = parse_cell(cells[c], row, static_cast<int>(c) + 1);
    table.rows.push_back(std::move(values));
  }
  return table;
}

/// Headerless numeric CSV for matrices: rows are features, columns samples.
/// The exact inverse of spectral_analysis::load_matrix.
inline void save_matrix(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_matrix: cannot open '" + path + "'");
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

/// Writes rows atomically: a temp file in the same directory is renamed over
/// the target once fully flushed.
inline void write_csv_atomic(const std::string& path,
                             const std::string& header_line,
                             const std::vector<std::string>& lines) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("csv: cannot open '" + tmp + "' for writing");
    out << header_line << "\n";
    for (const auto& line : lines) out << line << "\n";
    out.flush();
    if (!out) throw std::runtime_error("csv: write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("csv: rename failed for '" + path + "'");
}

}  // namespace scalinglab
