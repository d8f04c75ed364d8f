#include "igrate/pmc_index.hpp"

#include <fstream>

#include "igrate/csv.hpp"
#include "igrate/errors.hpp"

namespace igrate {

PmcScore pmc_score(const Scorecard& card, const IndicatorScheme& scheme) {
    std::string missing;
    for (const auto& code : scheme.secondary_codes())
        if (!card.values.count(code)) missing += (missing.empty() ? "" : ", ") + code;
    if (!missing.empty())
        throw DataError("scorecard '" + card.document_id + "' is missing indicator values: " + missing);

    PmcScore score;
    score.document_id = card.document_id;
    for (const auto& p : scheme.primaries) {
        std::int64_t hits = 0;
        for (const auto& s : p.secondaries) {
            auto v = card.values.at(s.code);
            if (v > 1) throw DataError("scorecard '" + card.document_id + "': value of " + s.code + " is not binary");
            hits += v;
        }
        Fraction share(hits, static_cast<std::int64_t>(p.secondaries.size()));
        score.per_primary.push_back(share);
        score.pmc += share;
    }
    return score;
}

double guarantee_strength(double pmc) {
    if (!(pmc >= 0.0 && pmc <= 10.0)) throw DomainError("PMC value " + std::to_string(pmc) + " outside [0, 10]");
    return 10.0 - pmc;
}

Fraction guarantee_strength(const Fraction& pmc) {
    if (pmc < Fraction(0) || pmc > Fraction(10))
        throw DomainError("PMC value " + std::to_string(to_double(pmc)) + " outside [0, 10]");
    return Fraction(10) - pmc;
}

double GuaranteeSeries::raw(int year) const {
    auto it = exact.find(year);
    if (it == exact.end()) throw DataError("guarantee series has no value for year " + std::to_string(year));
    return to_double(it->second);
}

double GuaranteeSeries::scaled(int year) const {
    auto it = exact.find(year);
    if (it == exact.end()) throw DataError("guarantee series has no value for year " + std::to_string(year));
    return scaling == Scaling::divide_by_10 ? to_double(it->second / Fraction(10)) : to_double(it->second);
}

std::map<int, double> GuaranteeSeries::values() const {
    std::map<int, double> out;
    for (const auto& [year, g] : exact) out[year] = to_double(g);
    return out;
}

GuaranteeSeries yearly_series(const std::vector<DatedScore>& scores, AggregationMode mode, Scaling scaling, int start,
                              int end) {
    if (scores.empty()) throw DataError("guarantee series: empty corpus");
    if (end < start) throw ConfigError("guarantee series: year range end precedes start");

    // Exact per-year sums; std::map keeps years ordered regardless of input order.
    std::map<int, std::pair<Fraction, std::int64_t>> by_year;
    for (const auto& s : scores) {
        auto& slot = by_year[s.issue_year];
        slot.first += guarantee_strength(s.score.pmc);
        slot.second += 1;
    }
    if (by_year.begin()->first > start)
        throw DataError("guarantee series: no document issued at or before start year " + std::to_string(start));

    GuaranteeSeries series;
    series.start = start;
    series.end = end;
    series.mode = mode;
    series.scaling = scaling;

    Fraction running_sum;
    std::int64_t running_count = 0;
    Fraction latest;
    auto it = by_year.begin();
    for (int year = by_year.begin()->first; year <= end; ++year) {
        if (it != by_year.end() && it->first == year) {
            running_sum += it->second.first;
            running_count += it->second.second;
            latest = it->second.first / Fraction(it->second.second);
            ++it;
        }
        if (year < start) continue;
        series.exact[year] = mode == AggregationMode::issue_year_mean ? latest : running_sum / Fraction(running_count);
    }
    return series;
}

GuaranteeSeries yearly_series(const std::vector<PolicyDocument>& docs, const std::vector<PmcScore>& scores,
                              AggregationMode mode, Scaling scaling, int start, int end) {
    if (docs.size() != scores.size()) throw DataError("guarantee series: documents and scores differ in length");
    std::vector<DatedScore> dated;
    dated.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) dated.push_back({docs[i].issue_year, scores[i]});
    return yearly_series(dated, mode, scaling, start, end);
}

void write_series_csv(const GuaranteeSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write series file '" + path.string() + "'");
    csv::write_row(out, {"year", "G"});
    for (const auto& [year, g] : series.exact) csv::write_row(out, {std::to_string(year), csv::format_lossless(to_double(g))});
}

AggregationMode parse_aggregation(const std::string& name) {
    if (name == "issue_year_mean") return AggregationMode::issue_year_mean;
    if (name == "cumulative_in_force_mean") return AggregationMode::cumulative_in_force_mean;
    throw ConfigError("unknown aggregation mode '" + name + "'");
}

Scaling parse_scaling(const std::string& name) {
    if (name == "identity") return Scaling::identity;
    if (name == "divide_by_10") return Scaling::divide_by_10;
    throw ConfigError("unknown scaling '" + name + "'");
}

std::string to_string(AggregationMode mode) {
    return mode == AggregationMode::issue_year_mean ? "issue_year_mean" : "cumulative_in_force_mean";
}

std::string to_string(Scaling scaling) { return scaling == Scaling::identity ? "identity" : "divide_by_10"; }

}  // namespace igrate
