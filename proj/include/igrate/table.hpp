#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace igrate {

// coefficient: 4 decimals with trailing zeros trimmed to no fewer than 3.
// stat: same as coefficient. p_value: 3 decimals. integer, text: verbatim.
enum class CellKind { text, integer, coefficient, stat, p_value };

struct Column {
    std::string name;
    CellKind kind = CellKind::text;
    // Plain format appends this column to the previous one (significance stars).
    bool suffix = false;

    bool operator==(const Column&) const = default;
};

using Cell = std::variant<std::monostate, std::string, long long, double>;

struct Table {
    std::string id;
    std::string title;
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;
    std::size_t n = 0;  // observations the table was computed on
    std::vector<std::string> notes;

    void add_row(std::vector<Cell> row);
};

enum class TableFormat { plain, delimited, structured };

TableFormat parse_format(const std::string& name);
std::string to_string(TableFormat format);
std::string extension(TableFormat format);

std::string format_coefficient(double value);
std::string format_p_value(double value);

// plain: aligned text with title, header, rows, n and notes.
// delimited: header plus rows, doubles at full round-trip precision.
// structured: JSON with every field of the table.
std::string render(const Table& table, TableFormat format);
void emit_table(const Table& table, TableFormat format, const std::filesystem::path& path);

// Inverse of the delimited format given the column layout.
std::vector<std::vector<Cell>> parse_delimited(std::string_view text, const std::vector<Column>& columns);

nlohmann::json to_json(const Table& table);
Table table_from_json(const nlohmann::json& j);

// Writes through a sibling temporary file and a rename.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace igrate
