#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "igrate/bond_data.hpp"
#include "igrate/errors.hpp"

using namespace igrate;

namespace {

const char* kHeader = "bond_id,issue_year,rating,amount,term,option,ROA,DTA,AT,GDP_growth,province,issuer_id\n";

std::string sample() {
    return std::string(kHeader) +
           "b1,2016,AAA,10,5,1,1.5,60,0.05,0.07,Beijing,i1\n"
           "b2,2016,AA+,8,7,0,2.0,55,0.06,0.08,Hunan,i2\n"
           "b3,2017,AA,6,3,1,0.5,40,0.08,0.06,Beijing,i3\n"
           "b4,2018,AA,4,5,1,1.0,45,0.07,0.09,Sichuan,i4\n";
}

BondSchema no_screen() {
    BondSchema s;
    s.screen_outliers = false;
    return s;
}

}  // namespace

TEST_SUITE("bond_data") {
    TEST_CASE("rating encoding") {
        CHECK(encode_rating("AAA") == 1);
        CHECK(encode_rating("AA+") == 2);
        CHECK(encode_rating("AA") == 3);
        CHECK_THROWS_AS(encode_rating("AA-"), DataError);
        CHECK_THROWS_AS(encode_rating("A"), DataError);
        for (int c = 1; c <= 3; ++c) CHECK(encode_rating(decode_rating(c)) == c);
    }

    TEST_CASE("type-7 quantiles") {
        CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
        CHECK(quantile({4, 1, 3, 2}, 0.75) == doctest::Approx(3.25));
        CHECK(quantile({5}, 0.5) == 5);
    }

    TEST_CASE("parse and describe") {
        auto ds = parse_bonds(sample(), no_screen());
        REQUIRE(ds.size() == 4);
        CHECK(ds.response() == std::vector<int>{1, 2, 3, 3});
        auto d = describe_column("amount", ds.column("amount"));
        CHECK(d.mean == doctest::Approx(7.0));
        CHECK(d.std_dev == doctest::Approx(std::sqrt(20.0 / 3.0)));
        CHECK(d.min == 4);
        CHECK(d.max == 10);
        auto rows = descriptive_stats(ds);
        CHECK(rows.front().variable == "i_ra");
        CHECK(rows.size() == 8);  // no im_guarantee attached
    }

    TEST_CASE("pearson against a hand computation") {
        CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
        CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
        // x = (1,2,3,4), y = (1,3,2,4): cross products 4, squares 5 each -> r = 0.8
        CHECK(pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
        auto ds = parse_bonds(sample(), no_screen());
        auto m = correlation_matrix(ds, {"i_ra", "amount"});
        CHECK(m.r(0, 1) == doctest::Approx(pearson({1, 2, 3, 3}, {10, 8, 6, 4})));
    }

    TEST_CASE("missing cells drop rows and are counted") {
        std::string text = sample() + "b5,2018,AA,NA,5,1,1.0,45,0.07,0.09,Hunan,i5\nb6,2018,AAA,3,,1,1.0,45,0.07,,Hunan,i6\n";
        auto ds = parse_bonds(text, no_screen());
        CHECK(ds.size() == 4);
        CHECK(ds.report.rows_read == 6);
        CHECK(ds.report.dropped_missing == 2);
        CHECK(ds.report.missing_by_column.at("amount") == 1);
        CHECK(ds.report.missing_by_column.at("GDP_growth") == 1);
    }

    TEST_CASE("malformed cells abort with the line") {
        std::string bad = sample() + "b5,2018,AA,abc,5,1,1.0,45,0.07,0.09,Hunan,i5\n";
        try {
            parse_bonds(bad, no_screen());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 6") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_bonds(sample() + "b5,2018,BBB,1,5,1,1,45,0.07,0.09,Hunan,i5\n", no_screen()), DataError);
        CHECK_THROWS_AS(parse_bonds(sample() + "b5,2018,AA,1,0,1,1,45,0.07,0.09,Hunan,i5\n", no_screen()), DataError);
        CHECK_THROWS_AS(parse_bonds(sample() + "b5,2018,AA,1,2,3,1,45,0.07,0.09,Hunan,i5\n", no_screen()), DataError);
        CHECK_THROWS_AS(parse_bonds("issue_year,rating\n2018,AA\n"), DataError);
    }

    TEST_CASE("IQR screening uses fences from the loaded rows") {
        std::string text = kHeader;
        for (int i = 0; i < 20; ++i)
            text += "b" + std::to_string(i) + ",2018,AA," + std::to_string(5 + i % 5) + ",5,1,1.0,45,0.07,0.09,Hunan,i\n";
        text += "big,2018,AA,500,5,1,1.0,45,0.07,0.09,Hunan,i\n";
        auto ds = parse_bonds(text);
        CHECK(ds.size() == 20);
        CHECK(ds.report.dropped_outliers == 1);
        CHECK(ds.report.outliers_by_column.at("amount") == 1);
        auto [lo, hi] = ds.report.fences.at("amount");
        CHECK(hi < 500);
        CHECK(lo < 5);
    }

    TEST_CASE("column mapping and delimiter") {
        BondSchema s = no_screen();
        s.delimiter = ';';
        s.columns["rating"] = "credit_rating";
        std::string text = "issue_year;credit_rating;amount;term;option;ROA;DTA;AT;GDP_growth\n2018;AAA;1;2;0;1;40;0.1;0.05\n";
        auto ds = parse_bonds(text, s);
        REQUIRE(ds.size() == 1);
        CHECK(ds.rows[0].rating_code() == 1);
    }

    TEST_CASE("write and reload are lossless") {
        auto ds = parse_bonds(sample(), no_screen());
        ds.rows[0].amount = 0.1 + 0.2;
        auto back = parse_bonds(bonds_to_csv(ds), no_screen());
        CHECK(back.rows == ds.rows);
    }

    TEST_CASE("cross tab totals") {
        auto ds = parse_bonds(sample(), no_screen());
        auto t = rating_by_year(ds, std::pair{2015, 2018});
        CHECK(t.years == std::vector<int>{2015, 2016, 2017, 2018});
        CHECK(t.counts[0][1] == 1);
        CHECK(t.counts[2][3] == 1);
        CHECK(t.row_totals[2] == 2);
        CHECK(t.column_totals[0] == 0);
        CHECK(t.total == 4);
    }

    TEST_CASE("region split and guarantee join") {
        auto ds = parse_bonds(sample(), no_screen());
        auto map = region_map_from_json({{"east", {"Beijing"}}, {"central_west", {"Hunan"}}});
        CHECK_THROWS_AS(split_region(ds, map), DataError);  // Sichuan unmapped
        map = region_map_from_json({{"east", {"Beijing"}}, {"central_west", {"Hunan", "Sichuan"}}});
        auto split = split_region(ds, map);
        CHECK(split.east.size() == 2);
        CHECK(split.central_west.size() == 2);
        CHECK_THROWS_AS(region_map_from_json({{"east", {"Beijing"}}, {"central_west", {"Beijing"}}}), ConfigError);

        GuaranteeSeries g;
        g.start = 2016;
        g.end = 2017;
        g.exact = {{2016, Fraction(4)}, {2017, Fraction(3)}};
        CHECK_THROWS_AS(join_guarantee(ds, g), DataError);  // 2018 uncovered
        g.end = 2018;
        g.exact[2018] = Fraction(5, 2);
        auto joined = join_guarantee(ds, g);
        CHECK(joined.has_guarantee());
        CHECK(*joined.rows[3].im_guarantee == doctest::Approx(0.25));
        CHECK(descriptive_stats(joined).size() == 9);
    }

    TEST_CASE("shipped region map splits 11 east and 20 central-west provinces") {
        auto map = load_region_map(std::string(IGRATE_SOURCE_DIR) + "/data/region_map.json");
        int east = 0, cw = 0;
        for (const auto& [p, r] : map.province_region) (r == Region::east ? east : cw)++;
        CHECK(east == 11);
        CHECK(cw == 20);
    }
}
