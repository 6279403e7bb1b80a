#pragma once

// Minimal reader for the unquoted CSV files this library writes.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace msekit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  int column(std::string_view name) const;
  /// Parsed cell; NaN for an empty or non-numeric cell.
  double number(std::size_t row, int col) const;
};

/// Throws DataError when a row's field count differs from the header's.
CsvTable parse_csv(std::istream& in);
CsvTable parse_csv(std::string_view text);

std::vector<std::string> split_fields(std::string_view line, char sep = ',');

}  // namespace msekit
