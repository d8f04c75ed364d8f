#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "igrate/policy_text.hpp"

namespace igrate {

// PMC arithmetic is exact: every index is a rational with denominator
// dividing lcm(n_1, ..., n_10), so G + PMC = 10 and single-bit changes of
// 1/n_i hold without rounding. Doubles are derived at the edges.
using Fraction = boost::rational<std::int64_t>;

inline double to_double(const Fraction& f) {
    return static_cast<double>(f.numerator()) / static_cast<double>(f.denominator());
}

struct PmcScore {
    std::string document_id;
    std::vector<Fraction> per_primary;  // sum_j P_ij / n_i, one per primary
    Fraction pmc;                       // sum of per_primary, in [0, 10]

    double value() const { return to_double(pmc); }
    Fraction guarantee() const { return Fraction(10) - pmc; }
};

// pmc = sum_i (sum_j P_ij) / n_i. Throws DataError naming missing codes.
PmcScore pmc_score(const Scorecard& card, const IndicatorScheme& scheme);

// G = 10 - PMC. Throws DomainError outside [0, 10].
double guarantee_strength(double pmc);
Fraction guarantee_strength(const Fraction& pmc);

enum class AggregationMode { issue_year_mean, cumulative_in_force_mean };
enum class Scaling { identity, divide_by_10 };

struct DatedScore {
    int issue_year = 0;
    PmcScore score;
};

struct GuaranteeSeries {
    int start = 0;
    int end = 0;
    std::map<int, Fraction> exact;  // raw G per year
    AggregationMode mode = AggregationMode::issue_year_mean;
    Scaling scaling = Scaling::divide_by_10;

    double raw(int year) const;     // G in [0, 10]
    double scaled(int year) const;  // raw, or raw / 10 under divide_by_10
    bool covers(int year) const { return exact.count(year) > 0; }
    std::map<int, double> values() const;
};

// issue_year_mean: mean G of the documents issued in a year, carrying the
// latest value forward through years without documents.
// cumulative_in_force_mean: mean G over every document issued up to the year.
GuaranteeSeries yearly_series(const std::vector<DatedScore>& scores, AggregationMode mode, Scaling scaling, int start,
                              int end);
GuaranteeSeries yearly_series(const std::vector<PolicyDocument>& docs, const std::vector<PmcScore>& scores,
                              AggregationMode mode, Scaling scaling, int start, int end);

// Two columns: year,G (raw scale, lossless).
void write_series_csv(const GuaranteeSeries& series, const std::filesystem::path& path);

AggregationMode parse_aggregation(const std::string& name);
Scaling parse_scaling(const std::string& name);
std::string to_string(AggregationMode mode);
std::string to_string(Scaling scaling);

}  // namespace igrate
