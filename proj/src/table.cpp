#include "igrate/table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "igrate/csv.hpp"
#include "igrate/errors.hpp"

namespace igrate {

namespace {

bool is_numeric(CellKind k) { return k != CellKind::text; }

const char* kind_name(CellKind k) {
    switch (k) {
        case CellKind::text: return "text";
        case CellKind::integer: return "integer";
        case CellKind::coefficient: return "coefficient";
        case CellKind::stat: return "stat";
        case CellKind::p_value: return "p_value";
    }
    return "text";
}

CellKind kind_from_name(const std::string& s) {
    for (auto k : {CellKind::text, CellKind::integer, CellKind::coefficient, CellKind::stat, CellKind::p_value})
        if (s == kind_name(k)) return k;
    throw ConfigError("unknown table column kind '" + s + "'");
}

std::string plain_cell(const Cell& cell, CellKind kind) {
    if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
    if (std::holds_alternative<long long>(cell)) return std::to_string(std::get<long long>(cell));
    if (std::holds_alternative<double>(cell)) {
        double v = std::get<double>(cell);
        if (kind == CellKind::p_value) return format_p_value(v);
        if (kind == CellKind::integer) return fmt::format("{:.0f}", v);
        return format_coefficient(v);
    }
    return "";
}

std::string delimited_cell(const Cell& cell) {
    if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
    if (std::holds_alternative<long long>(cell)) return std::to_string(std::get<long long>(cell));
    if (std::holds_alternative<double>(cell)) {
        double v = std::get<double>(cell);
        if (std::isnan(v)) return "NaN";
        return csv::format_lossless(v);
    }
    return "";
}

void check_shape(const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i].suffix && i == 0) throw ConfigError("table " + t.id + ": first column cannot be a suffix");
    for (const auto& row : t.rows)
        if (row.size() != t.columns.size())
            throw ConfigError("table " + t.id + ": row has " + std::to_string(row.size()) + " cells for " +
                              std::to_string(t.columns.size()) + " columns");
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw ConfigError("table " + id + ": row has " + std::to_string(row.size()) + " cells for " +
                          std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

TableFormat parse_format(const std::string& name) {
    if (name == "plain") return TableFormat::plain;
    if (name == "delimited" || name == "csv") return TableFormat::delimited;
    if (name == "structured" || name == "json") return TableFormat::structured;
    throw ConfigError("unknown output format '" + name + "' (plain, delimited, structured)");
}

std::string to_string(TableFormat format) {
    switch (format) {
        case TableFormat::plain: return "plain";
        case TableFormat::delimited: return "delimited";
        case TableFormat::structured: return "structured";
    }
    return "plain";
}

std::string extension(TableFormat format) {
    switch (format) {
        case TableFormat::plain: return ".txt";
        case TableFormat::delimited: return ".csv";
        case TableFormat::structured: return ".json";
    }
    return ".txt";
}

std::string format_coefficient(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    std::string s = fmt::format("{:.4f}", value);
    if (s.back() == '0') s.pop_back();
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string format_p_value(double value) {
    if (std::isnan(value)) return "NaN";
    std::string s = fmt::format("{:.3f}", value);
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string render(const Table& table, TableFormat format) {
    check_shape(table);
    if (format == TableFormat::structured) return to_json(table).dump(2) + "\n";

    if (format == TableFormat::delimited) {
        std::ostringstream out;
        std::vector<std::string> header;
        for (const auto& c : table.columns) header.push_back(c.name);
        csv::write_row(out, header);
        for (const auto& row : table.rows) {
            std::vector<std::string> fields;
            for (const auto& cell : row) fields.push_back(delimited_cell(cell));
            csv::write_row(out, fields);
        }
        return out.str();
    }

    // Merge suffix columns into their predecessor, then align.
    struct Out {
        std::string name;
        bool right = false;
    };
    std::vector<Out> cols;
    std::vector<std::vector<std::string>> cells(table.rows.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        const auto& col = table.columns[c];
        if (!col.suffix) cols.push_back({col.name, is_numeric(col.kind)});
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            std::string text = plain_cell(table.rows[r][c], col.kind);
            if (col.suffix)
                cells[r].back() += text;
            else
                cells[r].push_back(std::move(text));
        }
    }
    std::vector<std::size_t> width(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        width[c] = cols[c].name.size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    // Stars hang to the right of numbers, so pad star-bearing columns on the
    // right by the widest suffix instead of right-aligning them.
    std::vector<std::size_t> suffix_width(cols.size(), 0);
    for (std::size_t c = 0, oc = 0; c < table.columns.size(); ++c) {
        if (!table.columns[c].suffix) {
            if (c > 0) ++oc;
            continue;
        }
        for (const auto& row : table.rows)
            suffix_width[oc] = std::max(suffix_width[oc], plain_cell(row[c], table.columns[c].kind).size());
    }
    auto pad = [&](const std::string& s, std::size_t c, bool header) {
        std::size_t w = width[c];
        if (!cols[c].right) return s + std::string(w - s.size(), ' ');
        if (header || suffix_width[c] == 0) return std::string(w - s.size(), ' ') + s;
        // Align the numeric part; stars trail.
        std::size_t stars = 0;
        while (stars < s.size() && s[s.size() - 1 - stars] == '*') ++stars;
        std::size_t num = s.size() - stars;
        std::size_t num_w = w - suffix_width[c];
        std::string left = num_w > num ? std::string(num_w - num, ' ') : "";
        std::string out = left + s;
        return out + std::string(w > out.size() ? w - out.size() : 0, ' ');
    };

    std::ostringstream out;
    if (!table.title.empty()) out << table.title << "\n";
    std::size_t total = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) total += width[c] + (c ? 2 : 0);
    std::string rule(total, '-');
    out << rule << "\n";
    auto line = [&](const std::vector<std::string>& fields, bool header) {
        std::string s;
        for (std::size_t c = 0; c < fields.size(); ++c) s += (c ? "  " : "") + pad(fields[c], c, header);
        while (!s.empty() && s.back() == ' ') s.pop_back();
        out << s << "\n";
    };
    std::vector<std::string> header;
    for (const auto& c : cols) header.push_back(c.name);
    line(header, true);
    out << rule << "\n";
    for (const auto& row : cells) line(row, false);
    out << rule << "\n";
    out << "N = " << table.n << "\n";
    for (const auto& note : table.notes) out << note << "\n";
    return out.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed for '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot write '" + path.string() + "'");
    }
}

void emit_table(const Table& table, TableFormat format, const std::filesystem::path& path) {
    write_file(path, render(table, format));
}

std::vector<std::vector<Cell>> parse_delimited(std::string_view text, const std::vector<Column>& columns) {
    auto doc = csv::parse(text);
    if (doc.header.size() != columns.size()) throw DataError("delimited table: column count differs from the layout");
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (doc.header[c] != columns[c].name)
            throw DataError("delimited table: expected column '" + columns[c].name + "', found '" + doc.header[c] + "'");
    std::vector<std::vector<Cell>> rows;
    for (const auto& r : doc.rows) {
        if (r.fields.size() != columns.size())
            throw DataError("delimited table: wrong field count on line " + std::to_string(r.line));
        std::vector<Cell> row;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto& f = r.fields[c];
            if (columns[c].kind == CellKind::text) {
                row.emplace_back(f);
            } else if (f.empty()) {
                row.emplace_back(std::monostate{});
            } else if (f == "NaN") {
                row.emplace_back(std::nan(""));
            } else if (columns[c].kind == CellKind::integer && f.find_first_of(".eE") == std::string::npos) {
                auto v = csv::parse_int(f);
                if (!v) throw DataError("delimited table: bad integer on line " + std::to_string(r.line));
                row.emplace_back(static_cast<long long>(*v));
            } else {
                auto v = csv::parse_double(f);
                if (!v) throw DataError("delimited table: bad number on line " + std::to_string(r.line));
                row.emplace_back(*v);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json(const Table& table) {
    nlohmann::json j;
    j["id"] = table.id;
    j["title"] = table.title;
    j["n"] = table.n;
    j["columns"] = nlohmann::json::array();
    for (const auto& c : table.columns)
        j["columns"].push_back({{"name", c.name}, {"kind", kind_name(c.kind)}, {"suffix", c.suffix}});
    j["rows"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
        auto jr = nlohmann::json::array();
        for (const auto& cell : row) {
            if (std::holds_alternative<std::string>(cell))
                jr.push_back(std::get<std::string>(cell));
            else if (std::holds_alternative<long long>(cell))
                jr.push_back(std::get<long long>(cell));
            else if (std::holds_alternative<double>(cell) && std::isfinite(std::get<double>(cell)))
                jr.push_back(std::get<double>(cell));
            else
                jr.push_back(nullptr);
        }
        j["rows"].push_back(std::move(jr));
    }
    j["notes"] = table.notes;
    return j;
}

Table table_from_json(const nlohmann::json& j) {
    try {
        Table t;
        t.id = j.at("id").get<std::string>();
        t.title = j.at("title").get<std::string>();
        t.n = j.at("n").get<std::size_t>();
        for (const auto& c : j.at("columns"))
            t.columns.push_back({c.at("name").get<std::string>(), kind_from_name(c.at("kind").get<std::string>()),
                                 c.value("suffix", false)});
        for (const auto& jr : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto& v : jr) {
                if (v.is_null())
                    row.emplace_back(std::monostate{});
                else if (v.is_string())
                    row.emplace_back(v.get<std::string>());
                else if (v.is_number_integer())
                    row.emplace_back(v.get<long long>());
                else
                    row.emplace_back(v.get<double>());
            }
            t.add_row(std::move(row));
        }
        t.notes = j.at("notes").get<std::vector<std::string>>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("structured table: ") + e.what());
    }
}

}  // namespace igrate
