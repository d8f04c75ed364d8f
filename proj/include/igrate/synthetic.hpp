#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "igrate/bond_data.hpp"
#include "igrate/design.hpp"
#include "igrate/multinomial_logit.hpp"
#include "igrate/ordered_logit.hpp"
#include "igrate/pmc_index.hpp"
#include "igrate/policy_text.hpp"

namespace igrate {

struct CovariateLaw {
    enum class Kind { normal, bernoulli, uniform, lognormal, by_year };
    Kind kind = Kind::normal;
    double a = 0.0;  // normal/lognormal: mean; bernoulli: p; uniform: lower
    double b = 1.0;  // normal/lognormal: sd; uniform: upper

    static CovariateLaw normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
    static CovariateLaw bernoulli(double p) { return {Kind::bernoulli, p, 0.0}; }
    static CovariateLaw uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
    // Parameterized by the target mean and sd of the lognormal itself.
    static CovariateLaw lognormal(double mean, double sd) { return {Kind::lognormal, mean, sd}; }
    // im_guarantee only: scaled G of the row's issue year.
    static CovariateLaw by_year() { return {Kind::by_year, 0.0, 0.0}; }
};

struct OlmDgp {
    std::vector<std::string> covariates;
    Eigen::VectorXd beta_true;
    Eigen::VectorXd cutpoints_true;
    std::vector<CovariateLaw> laws;  // one per covariate
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    Link link = Link::logit;

    // Record metadata for simulate_bonds.
    int first_year = 2015;
    int last_year = 2023;
    std::vector<std::string> provinces{"Synthetic"};
    std::size_t issuers = 500;
    std::string id_prefix = "B";
    std::optional<GuaranteeSeries> guarantee_series;  // required by by_year laws
};

void validate(const OlmDgp& dgp);

// Slope and cutpoint values of the published full-sample fit, with covariate
// laws matched to the published means and standard deviations (lognormal for
// the strictly positive amount, term and AT columns).
OlmDgp facsimile_dgp(std::size_t n, std::uint64_t seed);

// Row i draws its covariates and response from Philox blocks addressed by
// (i, slot), so the dataset depends only on (dgp, seed).
Design simulate_design(const OlmDgp& dgp);
BondDataset simulate_bonds(const OlmDgp& dgp);

struct MnlDgp {
    MnlParams params;
    std::vector<CovariateLaw> laws;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
};

Design simulate_mnl_design(const MnlDgp& dgp);

// Piecewise-linear inclusion probability over years, flat beyond the knots.
struct ProbabilitySchedule {
    std::vector<std::pair<int, double>> knots;

    double at(int year) const;
};

struct CorpusDgp {
    IndicatorScheme scheme;
    TokenizerConfig tokenizer;
    int first_year = 2008;
    int last_year = 2024;
    int docs_per_year = 1;
    std::map<int, int> docs_in_year;  // overrides docs_per_year
    ProbabilitySchedule default_schedule{{{2008, 0.5}, {2024, 0.75}}};
    std::map<std::string, ProbabilitySchedule> schedules;  // per secondary code
    std::uint64_t seed = 1;
};

void validate(const CorpusDgp& dgp);

struct SimulatedPolicy {
    PolicyDocument document;
    Scorecard drawn;
};

// Bodies carry, one per line, the terms that satisfy exactly the indicators
// drawn as 1, so scoring a generated document returns the drawn scorecard.
// Requires rule terms to be disjoint across indicators.
std::vector<SimulatedPolicy> simulate_policies(const CorpusDgp& dgp);

CovariateLaw law_from_json(const nlohmann::json& j);

}  // namespace igrate
