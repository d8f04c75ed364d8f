#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace igrate {

struct PolicyDocument {
    std::string id;
    std::string title;
    std::string issuing_body;
    int issue_year = 0;
    std::string body;
};

enum class TokenizerMode { whitespace, char_ngram, dictionary };

struct TokenizerConfig {
    TokenizerMode mode = TokenizerMode::dictionary;
    int ngram = 2;                        // used by char_ngram
    std::vector<std::string> dictionary;  // used by dictionary
    bool case_folding = true;             // non-CJK letters only
    int min_token_length = 1;             // in code points
};

// Throws ConfigError when the configuration cannot tokenize anything.
void validate(const TokenizerConfig& cfg);

using Tokens = std::vector<std::string>;
using TermFrequency = std::map<std::string, std::size_t>;

// Line breaks are hard boundaries in every mode: no token spans two lines, so
// appending a new line of text never removes an existing token.
//   whitespace  : split on Unicode whitespace
//   char_ngram  : sliding windows of n code points inside whitespace-free runs
//   dictionary  : greedy longest match against the dictionary; unmatched code
//                 points become single-character tokens, whitespace is dropped
Tokens tokenize(const PolicyDocument& doc, const TokenizerConfig& cfg);
Tokens tokenize_text(std::string_view text, const TokenizerConfig& cfg);

TermFrequency term_frequency(const Tokens& tokens);

// Lower-cases ASCII, Latin-1, Greek and Cyrillic letters; CJK is untouched.
std::string fold_case(std::string_view text);

enum class RuleKind { any_of, all_of };

struct KeywordRule {
    RuleKind kind = RuleKind::any_of;
    std::vector<std::string> terms;

    bool satisfied_by(const TermFrequency& tf, bool case_folding) const;
};

struct SecondaryIndicator {
    std::string code;  // "Pi:j"
    std::string label;
    KeywordRule rule;
};

struct PrimaryIndicator {
    std::string code;  // "P1" .. "P10"
    std::string label;
    std::vector<SecondaryIndicator> secondaries;
};

class IndicatorScheme {
public:
    std::vector<PrimaryIndicator> primaries;
    std::string notice;

    bool validated() const noexcept { return validated_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    std::size_t secondary_count() const noexcept;
    std::vector<std::string> secondary_codes() const;
    // Every rule term, in scheme order, deduplicated.
    std::vector<std::string> all_terms() const;

    friend IndicatorScheme validate_scheme(IndicatorScheme scheme);

private:
    bool validated_ = false;
    std::vector<std::string> warnings_;
};

inline constexpr std::size_t kPrimaryCount = 10;
inline constexpr std::size_t kDefaultSecondaryCount = 47;

// Enforces: exactly 10 primaries, each with at least one secondary, unique
// codes, non-empty rules. A total other than 47 secondaries is a warning.
IndicatorScheme validate_scheme(IndicatorScheme scheme);

IndicatorScheme scheme_from_json(const nlohmann::json& j);
nlohmann::json scheme_to_json(const IndicatorScheme& scheme);
IndicatorScheme load_scheme(const std::filesystem::path& path);

struct Scorecard {
    std::string document_id;
    std::map<std::string, std::uint8_t> values;  // secondary code -> P_ij

    bool operator==(const Scorecard&) const = default;
};

// Dictionary mode takes the scheme's rule terms as extra dictionary entries.
TokenizerConfig with_scheme_terms(TokenizerConfig cfg, const IndicatorScheme& scheme);

// P_ij = 1 iff the secondary's rule is satisfied by the document's tokens.
Scorecard score_document(const PolicyDocument& doc, const IndicatorScheme& scheme, const TokenizerConfig& cfg);

// Manifest columns: id,title,issuing_body,issue_year,filename. Bodies are read
// from `directory / filename` as UTF-8.
std::vector<PolicyDocument> load_corpus(const std::filesystem::path& manifest, const std::filesystem::path& directory);
void write_corpus(const std::vector<PolicyDocument>& docs, const std::filesystem::path& directory,
                  const std::string& manifest_name = "manifest.csv");

TokenizerConfig tokenizer_from_json(const nlohmann::json& j);

}  // namespace igrate
