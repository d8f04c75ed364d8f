#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "igrate/errors.hpp"
#include "igrate/policy_text.hpp"

using namespace igrate;

namespace {

TokenizerConfig dict_cfg(std::vector<std::string> words) {
    TokenizerConfig c;
    c.mode = TokenizerMode::dictionary;
    c.dictionary = std::move(words);
    c.case_folding = false;
    return c;
}

std::vector<std::string> split_code_points(const std::string& s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

// Oracle: at each position try every dictionary word and keep the longest
// that matches; otherwise emit one code point. Spaces and newlines are dropped
// and words never span a newline.
std::vector<std::string> brute_force_longest_match(const std::string& text, const std::vector<std::string>& dict) {
    std::vector<std::string> out;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        std::string line = text.substr(line_start, line_end - line_start);
        auto cps = split_code_points(line);
        std::vector<std::size_t> offset{0};
        for (const auto& cp : cps) offset.push_back(offset.back() + cp.size());
        std::size_t i = 0;
        while (i < cps.size()) {
            if (cps[i] == " ") {
                ++i;
                continue;
            }
            std::size_t best = 0;
            for (const auto& w : dict) {
                std::size_t wl = split_code_points(w).size();
                if (i + wl <= cps.size() && line.compare(offset[i], offset[i + wl] - offset[i], w) == 0)
                    best = std::max(best, wl);
            }
            if (best == 0) best = 1;
            out.push_back(line.substr(offset[i], offset[i + best] - offset[i]));
            i += best;
        }
        line_start = line_end + 1;
    }
    return out;
}

IndicatorScheme small_scheme(std::size_t secondaries_in_p1 = 1) {
    IndicatorScheme s;
    for (int i = 1; i <= 10; ++i) {
        PrimaryIndicator p;
        p.code = "P" + std::to_string(i);
        std::size_t m = i == 1 ? secondaries_in_p1 : 1;
        for (std::size_t j = 1; j <= m; ++j)
            p.secondaries.push_back({p.code + ":" + std::to_string(j), "x", {RuleKind::any_of, {"t" + std::to_string(i) + "_" + std::to_string(j)}}});
        s.primaries.push_back(std::move(p));
    }
    return s;
}

}  // namespace

TEST_SUITE("policy_text") {
    TEST_CASE("whitespace tokens") {
        TokenizerConfig c;
        c.mode = TokenizerMode::whitespace;
        CHECK(tokenize_text("  Debt\tRisk\nFiscal  ", c) == Tokens{"debt", "risk", "fiscal"});
        c.case_folding = false;
        CHECK(tokenize_text("Debt risk", c) == Tokens{"Debt", "risk"});
    }

    TEST_CASE("character n-grams stay inside runs and lines") {
        TokenizerConfig c;
        c.mode = TokenizerMode::char_ngram;
        c.ngram = 2;
        CHECK(tokenize_text("地方政府 ab\ncd", c) == Tokens{"地方", "方政", "政府", "ab", "cd"});
    }

    TEST_CASE("dictionary longest match on a known sentence") {
        auto c = dict_cfg({"地方", "地方政府", "债务", "风险"});
        CHECK(tokenize_text("地方政府债务风险", c) == Tokens{"地方政府", "债务", "风险"});
        CHECK(tokenize_text("地方 政府", c) == Tokens{"地方", "政", "府"});
    }

    TEST_CASE("dictionary tokenizer agrees with a brute-force oracle") {
        std::vector<std::string> pieces{"地", "方", "政", "府", "债", "务", "a", "b", " ", "\n"};
        std::vector<std::string> dict{"地方", "地方政府", "政府债", "债务", "ab", "aba", "府债务"};
        std::mt19937 gen(11);
        for (int trial = 0; trial < 300; ++trial) {
            std::string text;
            int len = std::uniform_int_distribution<int>(0, 30)(gen);
            for (int k = 0; k < len; ++k) text += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(gen)];
            REQUIRE(tokenize_text(text, dict_cfg(dict)) == brute_force_longest_match(text, dict));
        }
    }

    TEST_CASE("case folding covers Latin, Greek and Cyrillic but not CJK") {
        CHECK(fold_case("ÀBÇ ΩΣ ДЖ 政府 Z") == "àbç ωσ дж 政府 z");
    }

    TEST_CASE("appending a line never removes a satisfied indicator") {
        auto scheme = validate_scheme(small_scheme(3));
        std::vector<std::string> words{"t1_1", "t1_2", "t1_3", "t5_1", "x", "t9_1", "t10_1", "t1_", "_1"};
        std::mt19937 gen(5);
        TokenizerConfig cfg;
        for (int trial = 0; trial < 200; ++trial) {
            auto draw = [&] {
                std::string s;
                for (int k = 0; k < 6; ++k) s += words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(gen)] + (k % 2 ? " " : "");
                return s;
            };
            PolicyDocument doc{"d", "", "", 2020, draw()};
            auto before = score_document(doc, scheme, cfg);
            doc.body += "\n" + draw();
            auto after = score_document(doc, scheme, cfg);
            for (const auto& [code, v] : before.values) REQUIRE(after.values.at(code) >= v);
        }
    }

    TEST_CASE("all_of needs every term") {
        auto s = small_scheme();
        s.primaries[1].secondaries[0].rule = {RuleKind::all_of, {"long-term", "plan"}};
        s = validate_scheme(s);
        TokenizerConfig cfg;
        PolicyDocument doc{"d", "", "", 2020, "long-term\n"};
        CHECK(score_document(doc, s, cfg).values.at("P2:1") == 0);
        doc.body += "PLAN\n";
        CHECK(score_document(doc, s, cfg).values.at("P2:1") == 1);
    }

    TEST_CASE("scheme validation") {
        auto s = small_scheme();
        CHECK_NOTHROW(validate_scheme(s));
        auto nine = s;
        nine.primaries.pop_back();
        CHECK_THROWS_AS(validate_scheme(nine), ConfigError);
        auto dup = s;
        dup.primaries[1].secondaries[0].code = "P1:1";
        CHECK_THROWS_AS(validate_scheme(dup), ConfigError);
        auto empty = s;
        empty.primaries[3].secondaries.clear();
        CHECK_THROWS_AS(validate_scheme(empty), ConfigError);
        auto blank = s;
        blank.primaries[3].secondaries[0].rule.terms = {"  "};
        CHECK_THROWS_AS(validate_scheme(blank), ConfigError);
        auto v = validate_scheme(s);
        CHECK(v.validated());
        CHECK(v.secondary_count() == 10);
        CHECK_FALSE(v.warnings().empty());  // 10 rather than 47 secondaries
        CHECK_THROWS_AS(score_document({"d", "", "", 2020, "x"}, s, TokenizerConfig{}), ConfigError);
    }

    TEST_CASE("shipped scheme has 10 primaries and 47 secondaries") {
        auto s = load_scheme(std::string(IGRATE_SOURCE_DIR) + "/data/default_scheme.json");
        CHECK(s.primaries.size() == 10);
        CHECK(s.secondary_count() == 47);
        CHECK(s.warnings().empty());
        CHECK_FALSE(s.notice.empty());
        auto round = validate_scheme(scheme_from_json(scheme_to_json(s)));
        CHECK(round.secondary_codes() == s.secondary_codes());
        CHECK(round.all_terms() == s.all_terms());
    }

    TEST_CASE("corpus round trip through files") {
        namespace fs = std::filesystem;
        fs::path dir = fs::temp_directory_path() / "igrate_corpus_test";
        fs::remove_all(dir);
        std::vector<PolicyDocument> docs{{"a", "Title, with comma", "State Council", 2010, "债务 风险\n"},
                                         {"b", "Other", "MoF", 2012, "fiscal\n"}};
        write_corpus(docs, dir);
        auto back = load_corpus(dir / "manifest.csv", dir);
        REQUIRE(back.size() == 2);
        CHECK(back[0].title == "Title, with comma");
        CHECK(back[1].body == "fiscal\n");
        CHECK(back[1].issue_year == 2012);
        fs::remove_all(dir);
    }

    TEST_CASE("empty body is a data error") {
        auto s = validate_scheme(small_scheme());
        CHECK_THROWS_AS(score_document({"d", "", "", 2020, ""}, s, TokenizerConfig{}), DataError);
    }
}
