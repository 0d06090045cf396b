#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fbsnet {

/// RFC-4180 table with LF line endings. Cells are kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

/// %.17g, with "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace fbsnet
