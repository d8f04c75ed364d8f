#include <regex>

#include "doctest.h"
#include "igrate/chart.hpp"
#include "igrate/errors.hpp"
#include "igrate/ordered_logit.hpp"
#include "igrate/report.hpp"
#include "igrate/table.hpp"

using namespace igrate;

namespace {

Table printed_rows() {
    return coefficient_table("olm", "Ordered logit", {coef_row("im_guarantee", -3.781, 0.439), coef_row("option", 0.115, 0.052),
                                                     coef_row("cut1", -4.007, 0.52, false)},
                             9788);
}

GuaranteeSeries series_of(std::map<int, Fraction> values) {
    GuaranteeSeries s;
    s.start = values.begin()->first;
    s.end = values.rbegin()->first;
    s.exact = std::move(values);
    return s;
}

std::vector<std::pair<double, double>> path_vertices(const std::string& svg) {
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex("<path class=\"series\" d=\"([^\"]*)\"")));
    std::string d = m[1];
    std::vector<std::pair<double, double>> out;
    std::regex vertex("([ML]) ([0-9.]+),([0-9.]+)");
    for (auto it = std::sregex_iterator(d.begin(), d.end(), vertex); it != std::sregex_iterator(); ++it)
        out.emplace_back(std::stod((*it)[2]), std::stod((*it)[3]));
    return out;
}

}  // namespace

TEST_SUITE("report") {
    TEST_CASE("number formatting") {
        CHECK(format_coefficient(-3.781) == "-3.781");
        CHECK(format_coefficient(-3.7812) == "-3.7812");
        CHECK(format_coefficient(0.5) == "0.500");
        CHECK(format_coefficient(-0.00001) == "0.000");
        CHECK(format_p_value(0.02671) == "0.027");
        CHECK(format_p_value(1e-12) == "0.000");
    }

    TEST_CASE("plain table shows stars on the coefficient") {
        auto text = render(printed_rows(), TableFormat::plain);
        CHECK(text.find("-3.781***") != std::string::npos);
        CHECK(text.find("0.115**") != std::string::npos);
        CHECK(text.find("-8.6128") != std::string::npos);
        CHECK(text.find("N = 9788") != std::string::npos);
        std::istringstream lines(text);
        std::string line, cut;
        while (std::getline(lines, line))
            if (line.rfind("cut1", 0) == 0) cut = line;
        CHECK(cut.find('*') == std::string::npos);
    }

    TEST_CASE("delimited output parses back to the same cells") {
        Table t = printed_rows();
        t.add_row({std::string("with, comma \"quoted\""), 0.1 + 0.2, std::string(), std::monostate{}, 1e-300, 0.5, -1.0, 1.0});
        auto rows = parse_delimited(render(t, TableFormat::delimited), t.columns);
        CHECK(rows == t.rows);
        Table counts;
        counts.id = "c";
        counts.columns = {{"Rating", CellKind::text}, {"2016", CellKind::integer}};
        counts.add_row({std::string("AAA"), 12LL});
        CHECK(parse_delimited(render(counts, TableFormat::delimited), counts.columns) == counts.rows);
    }

    TEST_CASE("empty table is header only") {
        Table t;
        t.id = "empty";
        t.columns = {{"a", CellKind::text}, {"b", CellKind::stat}};
        CHECK(render(t, TableFormat::delimited) == "a,b\n");
        CHECK(parse_delimited("a,b\n", t.columns).empty());
    }

    TEST_CASE("structured output round trips") {
        Table t = printed_rows();
        t.notes.push_back("note");
        auto back = table_from_json(nlohmann::json::parse(render(t, TableFormat::structured)));
        CHECK(back.columns == t.columns);
        CHECK(back.rows == t.rows);
        CHECK(back.n == t.n);
        CHECK(back.notes == t.notes);
    }

    TEST_CASE("malformed tables and paths") {
        Table t;
        t.columns = {{"a", CellKind::text}};
        CHECK_THROWS_AS(t.add_row({std::string("x"), 1.0}), ConfigError);
        CHECK_THROWS(emit_table(t, TableFormat::plain, "/nonexistent-dir/x/table.txt"));
        CHECK_THROWS_AS(parse_format("xml"), ConfigError);
    }

    TEST_CASE("chart has one vertex per year") {
        auto s = series_of({{2010, Fraction(5)}, {2011, Fraction(4)}, {2012, Fraction(9, 2)}});
        auto svg = render_series_chart(s);
        CHECK(path_vertices(svg).size() == 3);
        CHECK(svg == render_series_chart(s));
    }

    TEST_CASE("constant series is horizontal") {
        auto s = series_of({{2010, Fraction(3)}, {2011, Fraction(3)}, {2012, Fraction(3)}, {2013, Fraction(3)}});
        auto v = path_vertices(render_series_chart(s));
        REQUIRE(v.size() == 4);
        for (const auto& p : v) CHECK(p.second == v.front().second);
    }

    TEST_CASE("declining series trends downward on the page") {
        std::map<int, Fraction> values;
        for (int y = 2008; y <= 2024; ++y) values[y] = Fraction(467 - (y - 2008) * (467 - 277) / 16, 100);
        auto v = path_vertices(render_series_chart(series_of(values)));
        REQUIRE(v.size() == 17);
        CHECK(v.back().second > v.front().second);  // SVG y grows downward
        CHECK(v.back().first > v.front().first);
    }

    TEST_CASE("empty series is rejected") {
        GuaranteeSeries s;
        CHECK_THROWS_AS(render_series_chart(s), DataError);
    }
}
