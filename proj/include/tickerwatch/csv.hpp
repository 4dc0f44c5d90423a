#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tickerwatch {

/// Quotes a field when it contains a separator, quote, or newline.
std::string csv_escape(std::string_view field);

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> csv_split(std::string_view line);

struct CsvTable {
  std::string source;  // file name for diagnostics
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based, parallel to rows

  /// Index of a header column; throws InputError naming source when
  /// required and absent, otherwise returns -1.
  int column(std::string_view name, bool required = true) const;
};

CsvTable read_csv(std::istream& in, const std::string& source_name);
CsvTable read_csv_file(const std::string& path);

}  // namespace tickerwatch
