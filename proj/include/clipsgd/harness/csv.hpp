#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clipsgd::harness {

/// Parsed CSV file. Empty fields are std::nullopt.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<std::string>>> rows;

  /// Index of a header column; throws DataError if absent.
  std::size_t column(const std::string& name) const;
};

/// RFC 4180 parsing: comma separated, double-quoted fields may contain
/// commas, newlines and doubled quotes, LF or CRLF line ends. A header row
/// is required and every record must have the header's field count.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(const std::string& field);

/// 17 significant digits; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);

/// Writes `content` to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace clipsgd::harness
