#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace satpose {

// Minimal CSV with a header row, '.' decimal separator, no quoting (our
// fields never contain commas). Floats are printed with %.9g.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void begin_row();
  void add(const std::string& value);
  void add(double value);
  void add(long long value);
  void add(int value) { add(static_cast<long long>(value)); }
  void add(std::size_t value) { add(static_cast<long long>(value)); }
  void add_blank() { add(std::string()); }
  void end_row();

  const std::string& str() const { return buffer_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::string buffer_;
  std::size_t columns_ = 0;
  std::size_t row_cells_ = 0;
  bool in_row_ = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if missing
  double number(std::size_t row, int col) const;
};

CsvTable read_csv(const std::filesystem::path& path);

std::string format_g9(double value);

}  // namespace satpose
