#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm::csv {

using Row = std::vector<std::string>;

/// Splits a CSV stream into rows of fields. Handles RFC 4180 quoting and
/// CRLF line ends. Blank lines are skipped. Row numbers in errors are 1-based
/// line numbers.
std::vector<Row> read_rows(std::istream& in);

/// Parses a numeric field. Empty, NA, NaN and "." yield nullopt (missing);
/// anything else that is not a full number throws ParseError.
std::optional<double> parse_number(std::string_view field, std::size_t row, std::size_t column);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

std::string escape(std::string_view field);

/// Writes `values` with a header row. When `row_labels` is non-empty, the
/// first column carries them under `row_header`.
void write_matrix(const std::filesystem::path& path, const Matrix& values,
                  std::span<const std::string> column_labels,
                  std::span<const std::string> row_labels = {},
                  std::string_view row_header = "time");

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

Table read_table(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const Table& table);

}  // namespace gdfm::csv
