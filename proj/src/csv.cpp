#include "igrate/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "igrate/errors.hpp"

namespace igrate::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool blank(const std::vector<std::string>& fields) {
    return fields.size() == 1 && trim(fields.front()).empty();
}

}  // namespace

std::optional<std::size_t> Document::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

Document parse(std::string_view text, char delimiter) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<Row> records;
    Row current;
    std::string field;
    bool in_quotes = false;
    bool field_started_quoted = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(field_started_quoted ? field : std::string(trim(field)));
        field.clear();
        field_started_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        if (!blank(current.fields)) records.push_back(std::move(current));
        current = Row{};
        current.line = line;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && trim(field).empty()) {
            field.clear();
            in_quotes = true;
            field_started_quoted = true;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\n') {
            ++line;
            end_record();
        } else if (ch != '\r' || field_started_quoted) {
            if (!field_started_quoted) field.push_back(ch);
        }
    }
    if (in_quotes) throw DataError("unterminated quoted field starting near line " + std::to_string(current.line));
    if (!field.empty() || !current.fields.empty()) end_record();

    Document doc;
    if (records.empty()) return doc;
    doc.header = std::move(records.front().fields);
    records.erase(records.begin());
    doc.rows = std::move(records);
    return doc;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Document read_file(const std::string& path, char delimiter) {
    return parse(read_text_file(path), delimiter);
}

std::string quote(std::string_view field, char delimiter) {
    bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos ||
                 (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << delimiter;
        out << quote(fields[i], delimiter);
    }
    out << '\n';
}

std::optional<double> parse_double(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

std::optional<long long> parse_int(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

std::string format_lossless(double value) { return fmt::format("{}", value); }

}  // namespace igrate::csv
