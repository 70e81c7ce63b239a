#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glissade::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Parses a full field (surrounding blanks allowed) as a double.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

/// Splits on commas; no quoting support (none of the file formats need it).
std::vector<std::string_view> split(std::string_view line);

std::string_view trim(std::string_view s);

/// Reads all lines, stripping a trailing '\r'. A final newline does not start a new line.
std::vector<std::string> read_lines(std::istream& in);

/// A header-prefixed table: column names plus rows of raw string fields.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws Error(MalformedRow) when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a table whose first line is a header. Every row must have the header's arity.
Table read_table(std::istream& in);

}  // namespace glissade::csv
