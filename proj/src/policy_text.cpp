#include "igrate/policy_text.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "igrate/csv.hpp"
#include "igrate/errors.hpp"

namespace igrate {

namespace {

// Splits UTF-8 text into code points, each returned as its byte sequence.
std::vector<std::string_view> code_points(std::string_view text) {
    std::vector<std::string_view> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > text.size())
            throw DataError("invalid UTF-8 at byte offset " + std::to_string(i));
        for (std::size_t k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80)
                throw DataError("invalid UTF-8 at byte offset " + std::to_string(i + k));
        out.push_back(text.substr(i, len));
        i += len;
    }
    return out;
}

char32_t decode(std::string_view cp) {
    auto b = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(cp[k])); };
    switch (cp.size()) {
        case 1: return b(0);
        case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
        case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
        default: return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
    }
}

void encode(char32_t c, std::string& out) {
    if (c < 0x80) {
        out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
}

char32_t fold(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 0x20;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;                 // Latin-1
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;              // Greek
    if (c >= 0x410 && c <= 0x42F) return c + 0x20;                            // Cyrillic
    if (c >= 0x400 && c <= 0x40F) return c + 0x50;
    return c;
}

bool is_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0xA0 ||
           c == 0x3000 || c == 0x2028 || c == 0x2029 || (c >= 0x2000 && c <= 0x200A);
}

bool is_line_break(char32_t c) { return c == U'\n' || c == 0x2028 || c == 0x2029; }

std::string join(const std::vector<std::string_view>& cps, std::size_t from, std::size_t to) {
    std::string s;
    for (std::size_t i = from; i < to; ++i) s.append(cps[i]);
    return s;
}

std::string trim_term(std::string_view term) {
    auto cps = code_points(term);
    std::size_t b = 0, e = cps.size();
    while (b < e && is_space(decode(cps[b]))) ++b;
    while (e > b && is_space(decode(cps[e - 1]))) --e;
    return join(cps, b, e);
}

// Splits text into lines, each a vector of code points.
std::vector<std::vector<std::string_view>> lines_of(std::string_view text) {
    std::vector<std::vector<std::string_view>> lines(1);
    for (auto cp : code_points(text)) {
        if (is_line_break(decode(cp)))
            lines.emplace_back();
        else
            lines.back().push_back(cp);
    }
    return lines;
}

void tokenize_whitespace(const std::vector<std::string_view>& line, Tokens& out) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || is_space(decode(line[i]))) {
            if (i > start) out.push_back(join(line, start, i));
            start = i + 1;
        }
    }
}

void tokenize_ngram(const std::vector<std::string_view>& line, std::size_t n, Tokens& out) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || is_space(decode(line[i]))) {
            for (std::size_t k = start; k + n <= i; ++k) out.push_back(join(line, k, k + n));
            start = i + 1;
        }
    }
}

struct Dictionary {
    std::unordered_set<std::string> terms;
    std::size_t max_len = 0;
};

void tokenize_dictionary(const std::vector<std::string_view>& line, const Dictionary& dict, Tokens& out) {
    std::size_t i = 0;
    while (i < line.size()) {
        if (is_space(decode(line[i]))) {
            ++i;
            continue;
        }
        std::size_t matched = 0;
        for (std::size_t len = std::min(dict.max_len, line.size() - i); len >= 1; --len) {
            if (dict.terms.count(join(line, i, i + len))) {
                matched = len;
                break;
            }
        }
        if (matched == 0) {
            out.emplace_back(line[i]);
            ++i;
        } else {
            out.push_back(join(line, i, i + matched));
            i += matched;
        }
    }
}

std::size_t cp_length(std::string_view s) { return code_points(s).size(); }

}  // namespace

std::string fold_case(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (auto cp : code_points(text)) encode(fold(decode(cp)), out);
    return out;
}

void validate(const TokenizerConfig& cfg) {
    if (cfg.mode == TokenizerMode::char_ngram && cfg.ngram < 1)
        throw ConfigError("tokenizer: char_ngram requires n >= 1");
    if (cfg.mode == TokenizerMode::dictionary && cfg.dictionary.empty())
        throw ConfigError("tokenizer: dictionary mode requires a non-empty dictionary");
    if (cfg.min_token_length < 0) throw ConfigError("tokenizer: min_token_length must be >= 0");
}

Tokens tokenize_text(std::string_view text, const TokenizerConfig& cfg) {
    validate(cfg);
    std::string folded = cfg.case_folding ? fold_case(text) : std::string(text);

    Dictionary dict;
    if (cfg.mode == TokenizerMode::dictionary) {
        for (const auto& raw : cfg.dictionary) {
            std::string term = trim_term(cfg.case_folding ? fold_case(raw) : raw);
            if (term.empty()) continue;
            dict.max_len = std::max(dict.max_len, cp_length(term));
            dict.terms.insert(std::move(term));
        }
        if (dict.terms.empty()) throw ConfigError("tokenizer: dictionary contains only blank terms");
    }

    Tokens tokens;
    for (const auto& line : lines_of(folded)) {
        switch (cfg.mode) {
            case TokenizerMode::whitespace: tokenize_whitespace(line, tokens); break;
            case TokenizerMode::char_ngram: tokenize_ngram(line, static_cast<std::size_t>(cfg.ngram), tokens); break;
            case TokenizerMode::dictionary: tokenize_dictionary(line, dict, tokens); break;
        }
    }
    if (cfg.min_token_length > 1) {
        auto min_len = static_cast<std::size_t>(cfg.min_token_length);
        std::erase_if(tokens, [&](const std::string& t) { return cp_length(t) < min_len; });
    }
    return tokens;
}

Tokens tokenize(const PolicyDocument& doc, const TokenizerConfig& cfg) {
    if (doc.body.empty()) throw DataError("document '" + doc.id + "' has an empty body");
    return tokenize_text(doc.body, cfg);
}

TermFrequency term_frequency(const Tokens& tokens) {
    TermFrequency tf;
    for (const auto& t : tokens) ++tf[t];
    return tf;
}

bool KeywordRule::satisfied_by(const TermFrequency& tf, bool case_folding) const {
    auto present = [&](const std::string& term) {
        return tf.count(trim_term(case_folding ? fold_case(term) : term)) > 0;
    };
    if (kind == RuleKind::any_of) return std::any_of(terms.begin(), terms.end(), present);
    return !terms.empty() && std::all_of(terms.begin(), terms.end(), present);
}

std::size_t IndicatorScheme::secondary_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : primaries) n += p.secondaries.size();
    return n;
}

std::vector<std::string> IndicatorScheme::secondary_codes() const {
    std::vector<std::string> codes;
    for (const auto& p : primaries)
        for (const auto& s : p.secondaries) codes.push_back(s.code);
    return codes;
}

std::vector<std::string> IndicatorScheme::all_terms() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& p : primaries)
        for (const auto& s : p.secondaries)
            for (const auto& t : s.rule.terms)
                if (seen.insert(t).second) out.push_back(t);
    return out;
}

IndicatorScheme validate_scheme(IndicatorScheme scheme) {
    scheme.warnings_.clear();
    if (scheme.primaries.size() != kPrimaryCount)
        throw ConfigError("indicator scheme must have exactly 10 primary indicators, found " +
                          std::to_string(scheme.primaries.size()));
    std::set<std::string> codes;
    for (const auto& p : scheme.primaries) {
        if (p.code.empty()) throw ConfigError("indicator scheme: primary with empty code");
        if (!codes.insert(p.code).second) throw ConfigError("indicator scheme: duplicate code " + p.code);
        if (p.secondaries.empty())
            throw ConfigError("indicator scheme: primary " + p.code + " has no secondary indicators");
        for (const auto& s : p.secondaries) {
            if (s.code.empty()) throw ConfigError("indicator scheme: secondary with empty code under " + p.code);
            if (!codes.insert(s.code).second) throw ConfigError("indicator scheme: duplicate code " + s.code);
            if (s.rule.terms.empty()) throw ConfigError("indicator scheme: rule of " + s.code + " has no terms");
            for (const auto& t : s.rule.terms) {
                if (trim_term(t).empty()) throw ConfigError("indicator scheme: blank term in rule of " + s.code);
                for (auto cp : code_points(t))
                    if (is_line_break(decode(cp)))
                        throw ConfigError("indicator scheme: term in rule of " + s.code + " contains a line break");
            }
        }
    }
    if (scheme.secondary_count() != kDefaultSecondaryCount)
        scheme.warnings_.push_back("scheme has " + std::to_string(scheme.secondary_count()) +
                                   " secondary indicators (the reference design uses 47)");
    scheme.validated_ = true;
    return scheme;
}

IndicatorScheme scheme_from_json(const nlohmann::json& j) {
    IndicatorScheme scheme;
    try {
        scheme.notice = j.value("notice", "");
        for (const auto& jp : j.at("primaries")) {
            PrimaryIndicator p;
            p.code = jp.at("code").get<std::string>();
            p.label = jp.value("label", "");
            for (const auto& js : jp.at("secondaries")) {
                SecondaryIndicator s;
                s.code = js.at("code").get<std::string>();
                s.label = js.value("label", "");
                const auto& rule = js.at("rule");
                if (rule.contains("any_of") == rule.contains("all_of"))
                    throw ConfigError("indicator scheme: rule of " + s.code + " needs exactly one of any_of / all_of");
                s.rule.kind = rule.contains("any_of") ? RuleKind::any_of : RuleKind::all_of;
                s.rule.terms = rule.at(s.rule.kind == RuleKind::any_of ? "any_of" : "all_of").get<std::vector<std::string>>();
                p.secondaries.push_back(std::move(s));
            }
            scheme.primaries.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("indicator scheme: malformed file: ") + e.what());
    }
    return scheme;
}

nlohmann::json scheme_to_json(const IndicatorScheme& scheme) {
    nlohmann::json j;
    if (!scheme.notice.empty()) j["notice"] = scheme.notice;
    j["primaries"] = nlohmann::json::array();
    for (const auto& p : scheme.primaries) {
        nlohmann::json jp{{"code", p.code}, {"label", p.label}, {"secondaries", nlohmann::json::array()}};
        for (const auto& s : p.secondaries) {
            const char* key = s.rule.kind == RuleKind::any_of ? "any_of" : "all_of";
            jp["secondaries"].push_back({{"code", s.code}, {"label", s.label}, {"rule", {{key, s.rule.terms}}}});
        }
        j["primaries"].push_back(std::move(jp));
    }
    return j;
}

IndicatorScheme load_scheme(const std::filesystem::path& path) {
    std::string text;
    try {
        text = csv::read_text_file(path.string());
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("indicator scheme '" + path.string() + "': malformed file: " + e.what());
    }
    return validate_scheme(scheme_from_json(j));
}

TokenizerConfig with_scheme_terms(TokenizerConfig cfg, const IndicatorScheme& scheme) {
    if (cfg.mode == TokenizerMode::dictionary)
        for (auto& t : scheme.all_terms()) cfg.dictionary.push_back(t);
    return cfg;
}

Scorecard score_document(const PolicyDocument& doc, const IndicatorScheme& scheme, const TokenizerConfig& cfg) {
    if (!scheme.validated()) throw ConfigError("score_document: indicator scheme has not been validated");
    TermFrequency tf = term_frequency(tokenize(doc, with_scheme_terms(cfg, scheme)));
    Scorecard card;
    card.document_id = doc.id;
    for (const auto& p : scheme.primaries)
        for (const auto& s : p.secondaries) card.values[s.code] = s.rule.satisfied_by(tf, cfg.case_folding) ? 1 : 0;
    return card;
}

std::vector<PolicyDocument> load_corpus(const std::filesystem::path& manifest, const std::filesystem::path& directory) {
    csv::Document table = csv::read_file(manifest.string());
    const char* required[] = {"id", "title", "issuing_body", "issue_year", "filename"};
    std::size_t idx[5];
    for (int k = 0; k < 5; ++k) {
        auto c = table.column(required[k]);
        if (!c) throw DataError("corpus manifest '" + manifest.string() + "' lacks column '" + required[k] + "'");
        idx[k] = *c;
    }
    std::vector<PolicyDocument> docs;
    std::set<std::string> ids;
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            throw DataError("corpus manifest line " + std::to_string(row.line) + ": expected " +
                            std::to_string(table.header.size()) + " fields");
        PolicyDocument d;
        d.id = row.fields[idx[0]];
        d.title = row.fields[idx[1]];
        d.issuing_body = row.fields[idx[2]];
        auto year = csv::parse_int(row.fields[idx[3]]);
        if (!year) throw DataError("corpus manifest line " + std::to_string(row.line) + ": bad issue_year");
        d.issue_year = static_cast<int>(*year);
        if (!ids.insert(d.id).second) throw DataError("corpus manifest: duplicate document id '" + d.id + "'");
        d.body = csv::read_text_file((directory / row.fields[idx[4]]).string());
        if (d.body.empty()) throw DataError("document '" + d.id + "' has an empty body");
        code_points(d.body);  // rejects invalid UTF-8 early
        docs.push_back(std::move(d));
    }
    return docs;
}

void write_corpus(const std::vector<PolicyDocument>& docs, const std::filesystem::path& directory,
                  const std::string& manifest_name) {
    std::filesystem::create_directories(directory);
    std::ofstream manifest(directory / manifest_name, std::ios::binary);
    if (!manifest) throw Error("cannot write corpus manifest in '" + directory.string() + "'");
    csv::write_row(manifest, {"id", "title", "issuing_body", "issue_year", "filename"});
    for (const auto& d : docs) {
        std::string filename = d.id + ".txt";
        std::ofstream body(directory / filename, std::ios::binary);
        if (!body) throw Error("cannot write document '" + filename + "'");
        body << d.body;
        csv::write_row(manifest, {d.id, d.title, d.issuing_body, std::to_string(d.issue_year), filename});
    }
}

TokenizerConfig tokenizer_from_json(const nlohmann::json& j) {
    TokenizerConfig cfg;
    try {
        std::string mode = j.value("mode", "dictionary");
        if (mode == "whitespace")
            cfg.mode = TokenizerMode::whitespace;
        else if (mode == "char_ngram")
            cfg.mode = TokenizerMode::char_ngram;
        else if (mode == "dictionary")
            cfg.mode = TokenizerMode::dictionary;
        else
            throw ConfigError("tokenizer: unknown mode '" + mode + "'");
        cfg.ngram = j.value("n", 2);
        cfg.dictionary = j.value("dictionary", std::vector<std::string>{});
        cfg.case_folding = j.value("case_folding", true);
        cfg.min_token_length = j.value("min_token_length", 1);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tokenizer: ") + e.what());
    }
    return cfg;
}

}  // namespace igrate
