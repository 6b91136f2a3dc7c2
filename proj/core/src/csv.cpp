#include "gdfm/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "gdfm/errors.hpp"

namespace gdfm::csv {

std::vector<Row> read_rows(std::istream& in) {
  std::vector<Row> rows;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool row_has_content = false;
  std::size_t line = 1;
  std::size_t quote_line = 0;
  char c;

  auto end_field = [&] {
    current.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    if (row_has_content || !current.empty() || !field.empty()) {
      end_field();
      rows.push_back(std::move(current));
    }
    current.clear();
    field.clear();
    row_has_content = false;
  };

  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw ParseError("unexpected quote inside unquoted field", line, current.size() + 1);
        }
        in_quotes = true;
        field_was_quoted = true;
        quote_line = line;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        if (field_was_quoted) {
          throw ParseError("characters after closing quote", line, current.size() + 1);
        }
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", quote_line, current.size() + 1);
  end_row();
  return rows;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<double> parse_number(std::string_view field, std::size_t row, std::size_t column) {
  const auto s = trim(field);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "#N/A") {
    return std::nullopt;
  }
  double value = 0.0;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("not a number: '" + std::string(s) + "'", row, column);
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_matrix(const std::filesystem::path& path, const Matrix& values,
                  std::span<const std::string> column_labels,
                  std::span<const std::string> row_labels, std::string_view row_header) {
  if (static_cast<Index>(column_labels.size()) != values.cols()) {
    throw InputError("write_matrix: column label count does not match matrix");
  }
  const bool with_rows = !row_labels.empty();
  if (with_rows && static_cast<Index>(row_labels.size()) != values.rows()) {
    throw InputError("write_matrix: row label count does not match matrix");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  if (with_rows) out << escape(row_header);
  for (std::size_t j = 0; j < column_labels.size(); ++j) {
    if (with_rows || j > 0) out << ',';
    out << escape(column_labels[j]);
  }
  out << '\n';
  for (Index t = 0; t < values.rows(); ++t) {
    if (with_rows) out << escape(row_labels[static_cast<std::size_t>(t)]);
    for (Index j = 0; j < values.cols(); ++j) {
      if (with_rows || j > 0) out << ',';
      out << format_double(values(t, j));
    }
    out << '\n';
  }
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open: " + path.string());
  auto rows = read_rows(in);
  Table table;
  if (rows.empty()) return table;
  table.header = std::move(rows.front());
  table.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != table.header.size()) {
      throw StructuralError(path.string() + ": row " + std::to_string(i + 2) + " has " +
                            std::to_string(table.rows[i].size()) + " fields, header has " +
                            std::to_string(table.header.size()));
    }
  }
  return table;
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  auto write_row = [&out](const Row& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << escape(row[j]);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

}  // namespace gdfm::csv
