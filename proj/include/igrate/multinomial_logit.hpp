#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "igrate/ordered_logit.hpp"

namespace igrate {

struct MnlBlock {
    double intercept = 0.0;
    Eigen::VectorXd beta;
};

// Baseline-category logit: eta_baseline = 0, eta_c = intercept_c + x'beta_c.
struct MnlParams {
    int baseline = 2;
    std::map<int, MnlBlock> per_category;  // every code except the baseline

    int n_categories() const { return static_cast<int>(per_category.size()) + 1; }
};

// Flat layout: non-baseline codes ascending, each block (intercept, beta).
Eigen::VectorXd flatten(const MnlParams& params);
MnlParams unflatten(const Eigen::VectorXd& theta, int n_categories, int baseline, Eigen::Index k);

struct MnlFit {
    OlmSpec spec;  // covariates and n_categories; link is unused
    MnlParams params;
    double loglik = 0.0;
    double loglik_null = 0.0;
    Eigen::MatrixXd vcov;  // over flatten() order
    std::string vcov_type = "observed_information";
    std::size_t n_obs = 0;
    bool converged = false;
    int iterations = 0;
    double gradient_max_norm = 0.0;
    std::uint64_t data_fingerprint = 0;
    std::vector<std::string> warnings;
};

Eigen::VectorXd mnl_probs(const Eigen::VectorXd& x, const MnlParams& params);

double mnl_log_likelihood(const Design& data, const MnlParams& params, int workers = 1);
Eigen::VectorXd mnl_gradient(const Design& data, const MnlParams& params, int workers = 1);

MnlFit mnl_fit(const Design& data, const OlmSpec& spec, int baseline = 2, const FitOptions& options = {});
MnlFit mnl_fit(const BondDataset& data, const OlmSpec& spec, int baseline = 2, const FitOptions& options = {});

struct MnlCoefRow {
    int category = 0;
    CoefRow row;  // name is the covariate or "Constant"
};

// One block per non-baseline category: covariates then the constant.
std::vector<MnlCoefRow> summarize(const MnlFit& fit);
double pseudo_r2(const MnlFit& fit);

struct ComparisonRow {
    std::string covariate;
    double olm_coefficient = 0.0;
    int olm_tier = 0;
    int category = 0;  // MNL block
    double mnl_coefficient = 0.0;
    int mnl_tier = 0;
    // Sign the block coefficient takes when it agrees with the OLM direction:
    // a positive OLM beta favours higher codes, so blocks above the baseline
    // share its sign and blocks below it take the opposite sign.
    int expected_sign = 0;
    bool significance_decreased = false;
    bool sign_flip = false;  // only flagged when both |t| >= 1
};

struct Comparison {
    double olm_pseudo_r2 = 0.0;
    double mnl_pseudo_r2 = 0.0;
    std::size_t n_obs = 0;
    int baseline = 2;
    std::vector<ComparisonRow> rows;
};

inline constexpr double kSignNoiseThreshold = 1.0;

// Descriptive side-by-side; throws DataError when the fits used different rows.
Comparison compare(const OlmFit& olm, const MnlFit& mnl);

}  // namespace igrate
