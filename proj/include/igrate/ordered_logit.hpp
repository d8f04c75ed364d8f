#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "igrate/design.hpp"
#include "igrate/links.hpp"

namespace igrate {

struct OlmSpec {
    std::string response = "i_ra";
    std::vector<std::string> covariates = default_covariates();
    int n_categories = kRatingCategories;
    Link link = Link::logit;
};

void validate(const OlmSpec& spec);

// logit P(y <= c | x) = a_c - x'beta, so a positive beta moves mass toward
// higher codes. The latent scale is fixed at 1.
struct OlmParams {
    Eigen::VectorXd beta;
    Eigen::VectorXd cutpoints;  // length C - 1, strictly increasing
};

// Unconstrained coordinates used by the optimizer and by gradient():
// theta = (beta, a_1, log(a_2 - a_1), ..., log(a_{C-1} - a_{C-2})).
Eigen::VectorXd to_unconstrained(const OlmParams& params);
OlmParams from_unconstrained(const Eigen::VectorXd& theta, Eigen::Index k);

struct FitOptions {
    int max_iter = 200;
    double gradient_tol = 1e-8;
    double loglik_rel_tol = 1e-12;
    int workers = 1;
    std::string cluster_column;  // cluster-robust sandwich SEs when non-empty
};

struct OlmFit {
    OlmSpec spec;
    OlmParams params;
    double loglik = 0.0;
    double loglik_null = 0.0;
    Eigen::MatrixXd vcov;  // over (beta, cutpoints), original covariate scale
    std::string vcov_type = "observed_information";
    std::size_t n_obs = 0;
    bool converged = false;
    int iterations = 0;
    double gradient_max_norm = 0.0;
    std::size_t floored_terms = 0;
    std::uint64_t data_fingerprint = 0;
    std::vector<std::string> warnings;
};

struct LogLikelihood {
    double value = 0.0;
    std::size_t floored = 0;  // terms whose probability was raised to DBL_MIN
};

Eigen::VectorXd category_probs(const Eigen::VectorXd& x, const OlmParams& params, Link link = Link::logit);

LogLikelihood log_likelihood(const Design& data, const OlmSpec& spec, const OlmParams& params, int workers = 1);

// Analytic score with respect to the unconstrained coordinates.
Eigen::VectorXd gradient(const Design& data, const OlmSpec& spec, const OlmParams& params, int workers = 1);

// Newton's method with backtracking line search on the unconstrained
// coordinates, on internally standardized covariates; gradient ascent steps
// replace Newton steps where the Hessian is not negative definite.
OlmFit fit(const Design& data, const OlmSpec& spec, const FitOptions& options = {});
OlmFit fit(const BondDataset& data, const OlmSpec& spec, const FitOptions& options = {});

// Sum over categories of n_c log(n_c / n): the intercept-only maximum.
double null_log_likelihood(const std::vector<int>& y, int n_categories);

struct CoefRow {
    std::string name;
    double coefficient = 0.0;
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::string stars;
};

inline constexpr double kZ975 = 1.959963984540054;

// *** p < 0.01, ** p < 0.05, * p < 0.1
std::string significance_stars(double p_value);
int significance_tier(double p_value);  // 0..3
double two_sided_p(double z);

CoefRow coef_row(std::string name, double coefficient, double std_error, bool starred = true);

// Covariate rows then cut1..cut{C-1} (unstarred). Throws ConvergenceError
// for a fit that did not converge.
std::vector<CoefRow> summarize(const OlmFit& fit);

// McFadden: 1 - loglik / loglik_null.
double pseudo_r2(double loglik, double loglik_null);
double pseudo_r2(const OlmFit& fit);

struct Prediction {
    Eigen::VectorXd probs;
    int modal_category = 1;  // ties go to the lower code
};

Prediction predict(const OlmFit& fit, const Eigen::VectorXd& x);

}  // namespace igrate
