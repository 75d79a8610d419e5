#include "satpose/util/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"

namespace satpose {

std::string format_g9(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += header[i];
  }
  buffer_ += '\n';
}

void CsvWriter::begin_row() {
  in_row_ = true;
  row_cells_ = 0;
}

void CsvWriter::add(const std::string& value) {
  if (!in_row_) begin_row();
  if (row_cells_) buffer_ += ',';
  buffer_ += value;
  ++row_cells_;
}

void CsvWriter::add(double value) { add(format_g9(value)); }

void CsvWriter::add(long long value) { add(std::to_string(value)); }

void CsvWriter::end_row() {
  if (row_cells_ != columns_) {
    throw DataError("csv row has " + std::to_string(row_cells_) + " cells, expected " +
                    std::to_string(columns_));
  }
  buffer_ += '\n';
  in_row_ = false;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text_file(path, buffer_); }

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double CsvTable::number(std::size_t row, int col) const {
  if (col < 0 || row >= rows.size() || static_cast<std::size_t>(col) >= rows[row].size()) {
    throw DataError("csv cell out of range");
  }
  return std::strtod(rows[row][static_cast<std::size_t>(col)].c_str(), nullptr);
}

CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable table;
  std::istringstream in(read_text_file(path));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace satpose
