#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace dirclip {

/// 17 significant digits: round-trips every 64-bit double.
std::string format_double(double value);

/// Throws Error unless the whole cell parses as a double.
double parse_double(std::string_view cell);

/// Comma-separated, header row, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  CsvWriter& row(std::initializer_list<double> values);
  CsvWriter& row(const std::vector<double>& values);
  /// Pre-formatted cells (for integer or text columns).
  CsvWriter& row_cells(const std::vector<std::string>& cells);

 private:
  void write_cells(const std::vector<std::string>& cells);

  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws Error naming the missing column.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dirclip
