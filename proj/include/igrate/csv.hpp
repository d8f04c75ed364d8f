#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace igrate::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line of the record start
};

struct Document {
    std::vector<std::string> header;
    std::vector<Row> rows;

    // Index of a header column, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180-style reader: quoted fields may contain the delimiter, quotes ("")
// and line breaks. A leading UTF-8 BOM is skipped. Blank lines are ignored.
Document parse(std::string_view text, char delimiter = ',');
Document read_file(const std::string& path, char delimiter = ',');

std::string quote(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

// Locale-independent numeric parsing; nullopt for blanks or malformed cells.
std::optional<double> parse_double(std::string_view cell);
std::optional<long long> parse_int(std::string_view cell);

// Shortest decimal text that round-trips to the same double.
std::string format_lossless(double value);

std::string read_text_file(const std::string& path);

}  // namespace igrate::csv
