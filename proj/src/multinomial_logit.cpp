#include "igrate/multinomial_logit.hpp"

#include <cmath>
#include <limits>

#include "igrate/errors.hpp"

namespace igrate {

namespace {

struct Accumulator {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;

    Accumulator& operator+=(const Accumulator& o) {
        value += o.value;
        if (grad.size()) grad += o.grad;
        if (hess.size()) hess += o.hess;
        return *this;
    }
};

// Non-baseline codes in ascending order.
std::vector<int> block_codes(int n_categories, int baseline) {
    std::vector<int> codes;
    for (int c = 1; c <= n_categories; ++c)
        if (c != baseline) codes.push_back(c);
    return codes;
}

// Linear predictors for all C categories with eta_baseline = 0, then
// log-probabilities via max subtraction.
void log_softmax(const Eigen::VectorXd& eta, Eigen::VectorXd& log_p) {
    double top = eta.maxCoeff();
    double sum = (eta.array() - top).exp().sum();
    log_p = eta.array() - top - std::log(sum);
}

Accumulator evaluate(const RowMatrix& x, const std::vector<int>& y, const Eigen::VectorXd& theta, int n_cat,
                     int baseline, int order, int workers) {
    const Eigen::Index k = x.cols();
    const Eigen::Index w = k + 1;
    const std::vector<int> codes = block_codes(n_cat, baseline);
    const Eigen::Index m = static_cast<Eigen::Index>(codes.size()) * w;
    std::vector<int> block_of(static_cast<std::size_t>(n_cat + 1), -1);
    for (std::size_t b = 0; b < codes.size(); ++b) block_of[static_cast<std::size_t>(codes[b])] = static_cast<int>(b);

    Accumulator zero;
    if (order >= 1) zero.grad = Eigen::VectorXd::Zero(m);
    if (order >= 2) zero.hess = Eigen::MatrixXd::Zero(m, m);

    Accumulator acc = reduce_rows(y.size(), workers, zero, [&](std::size_t begin, std::size_t end, Accumulator& out) {
        Eigen::VectorXd eta(n_cat), log_p, xt(w);
        for (std::size_t i = begin; i < end; ++i) {
            xt(0) = 1.0;
            xt.tail(k) = x.row(static_cast<Eigen::Index>(i)).transpose();
            for (int c = 1; c <= n_cat; ++c) {
                int b = block_of[static_cast<std::size_t>(c)];
                eta(c - 1) = b < 0 ? 0.0 : theta.segment(b * w, w).dot(xt);
            }
            log_softmax(eta, log_p);
            int yi = y[i];
            out.value += log_p(yi - 1);
            if (order < 1) continue;
            Eigen::VectorXd p = log_p.array().exp();
            for (std::size_t b = 0; b < codes.size(); ++b) {
                int c = codes[b];
                double resid = (yi == c ? 1.0 : 0.0) - p(c - 1);
                out.grad.segment(static_cast<Eigen::Index>(b) * w, w) += resid * xt;
            }
            if (order < 2) continue;
            // -(diag(p) - p p') (x) x x' over non-baseline blocks, upper triangle.
            for (std::size_t b1 = 0; b1 < codes.size(); ++b1) {
                double p1 = p(codes[b1] - 1);
                for (std::size_t b2 = b1; b2 < codes.size(); ++b2) {
                    double p2 = p(codes[b2] - 1);
                    double weight = (b1 == b2 ? p1 : 0.0) - p1 * p2;
                    auto r0 = static_cast<Eigen::Index>(b1) * w, c0 = static_cast<Eigen::Index>(b2) * w;
                    for (Eigen::Index j = 0; j < w; ++j)
                        for (Eigen::Index h = (b1 == b2 ? j : 0); h < w; ++h) out.hess(r0 + j, c0 + h) -= weight * xt(j) * xt(h);
                }
            }
        }
    });
    if (order >= 2) acc.hess = acc.hess.selfadjointView<Eigen::Upper>();
    return acc;
}

void check_params(const Design& data, const MnlParams& params) {
    if (data.rows() == 0) throw DataError("multinomial logit: empty dataset");
    int n_cat = params.n_categories();
    for (const auto& [c, block] : params.per_category) {
        if (c == params.baseline || c < 1 || c > n_cat) throw DomainError("multinomial logit: bad category block code");
        if (block.beta.size() != data.cols()) throw DomainError("multinomial logit: beta length does not match design");
    }
    for (int c : data.y)
        if (c < 1 || c > n_cat) throw DataError("multinomial logit: response code outside 1.." + std::to_string(n_cat));
}

}  // namespace

Eigen::VectorXd flatten(const MnlParams& params) {
    Eigen::Index k = params.per_category.empty() ? 0 : params.per_category.begin()->second.beta.size();
    Eigen::VectorXd theta(static_cast<Eigen::Index>(params.per_category.size()) * (k + 1));
    Eigen::Index pos = 0;
    for (const auto& [c, block] : params.per_category) {
        theta(pos) = block.intercept;
        theta.segment(pos + 1, k) = block.beta;
        pos += k + 1;
    }
    return theta;
}

MnlParams unflatten(const Eigen::VectorXd& theta, int n_categories, int baseline, Eigen::Index k) {
    if (baseline < 1 || baseline > n_categories) throw ConfigError("baseline category outside 1..C");
    MnlParams p;
    p.baseline = baseline;
    Eigen::Index pos = 0;
    for (int c : block_codes(n_categories, baseline)) {
        MnlBlock b;
        b.intercept = theta(pos);
        b.beta = theta.segment(pos + 1, k);
        p.per_category[c] = std::move(b);
        pos += k + 1;
    }
    return p;
}

Eigen::VectorXd mnl_probs(const Eigen::VectorXd& x, const MnlParams& params) {
    int n_cat = params.n_categories();
    Eigen::VectorXd eta(n_cat);
    for (int c = 1; c <= n_cat; ++c) {
        if (c == params.baseline) {
            eta(c - 1) = 0.0;
            continue;
        }
        auto it = params.per_category.find(c);
        if (it == params.per_category.end()) throw DomainError("mnl_probs: missing block for category " + std::to_string(c));
        if (it->second.beta.size() != x.size()) throw DomainError("mnl_probs: covariate length does not match beta");
        eta(c - 1) = it->second.intercept + x.dot(it->second.beta);
    }
    Eigen::VectorXd log_p;
    log_softmax(eta, log_p);
    return log_p.array().exp();
}

double mnl_log_likelihood(const Design& data, const MnlParams& params, int workers) {
    check_params(data, params);
    return evaluate(data.x, data.y, flatten(params), params.n_categories(), params.baseline, 0, workers).value;
}

Eigen::VectorXd mnl_gradient(const Design& data, const MnlParams& params, int workers) {
    check_params(data, params);
    return evaluate(data.x, data.y, flatten(params), params.n_categories(), params.baseline, 1, workers).grad;
}

MnlFit mnl_fit(const Design& input, const OlmSpec& spec, int baseline, const FitOptions& options) {
    validate(spec);
    const int n_cat = spec.n_categories;
    if (baseline < 1 || baseline > n_cat) throw ConfigError("baseline category " + std::to_string(baseline) + " outside 1.." + std::to_string(n_cat));
    if (input.rows() == 0) throw DataError("multinomial logit: empty dataset");
    if (static_cast<std::size_t>(input.cols()) != spec.covariates.size())
        throw DataError("multinomial logit: design columns do not match the covariate list");
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_cat), 0);
    for (int c : input.y) {
        if (c < 1 || c > n_cat) throw DataError("multinomial logit: response code " + std::to_string(c) + " outside 1.." + std::to_string(n_cat));
        ++counts[static_cast<std::size_t>(c - 1)];
    }
    for (int c = 1; c <= n_cat; ++c)
        if (counts[static_cast<std::size_t>(c - 1)] == 0)
            throw DataError("multinomial logit: response category " + std::to_string(c) + " is never observed");
    if (!options.cluster_column.empty() && input.clusters.size() != input.rows())
        throw ConfigError("cluster-robust errors requested but the design carries no cluster labels");

    const Design data = reorder(input, canonical_order(input));
    const Standardization standard = standardize_checked(data);
    const RowMatrix z = apply(standard, data.x);
    const Eigen::Index k = data.cols();
    const Eigen::Index w = k + 1;
    const std::vector<int> codes = block_codes(n_cat, baseline);
    const Eigen::Index m = static_cast<Eigen::Index>(codes.size()) * w;

    // Intercept-only maximum: intercept_c = ln(n_c / n_baseline), slopes 0.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    for (std::size_t b = 0; b < codes.size(); ++b)
        theta(static_cast<Eigen::Index>(b) * w) =
            std::log(static_cast<double>(counts[static_cast<std::size_t>(codes[b] - 1)]) /
                     static_cast<double>(counts[static_cast<std::size_t>(baseline - 1)]));

    MnlFit result;
    result.spec = spec;
    result.n_obs = data.rows();
    result.data_fingerprint = fingerprint(data);

    Accumulator current = evaluate(z, data.y, theta, n_cat, baseline, 2, options.workers);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        if (current.grad.cwiseAbs().maxCoeff() < options.gradient_tol) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd direction;
        Eigen::LLT<Eigen::MatrixXd> llt(-current.hess);
        bool newton = llt.info() == Eigen::Success;
        if (newton) {
            direction = llt.solve(current.grad);
            newton = direction.allFinite() && current.grad.dot(direction) > 0.0;
        }
        if (!newton) direction = current.grad / std::max(1.0, current.grad.norm());
        double slope = current.grad.dot(direction);
        double step = 1.0, trial_value = 0.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            trial = theta + step * direction;
            trial_value = evaluate(z, data.y, trial, n_cat, baseline, 0, options.workers).value;
            if (std::isfinite(trial_value) && trial_value >= current.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        result.iterations = iter + 1;
        if (!accepted) {
            result.converged = newton && 0.5 * slope <= options.loglik_rel_tol * std::abs(current.value);
            break;
        }
        double change = std::abs(trial_value - current.value) / std::max(std::abs(current.value), 1e-300);
        theta = trial;
        current = evaluate(z, data.y, theta, n_cat, baseline, 2, options.workers);
        if (change < options.loglik_rel_tol && newton) {
            result.converged = true;
            break;
        }
    }

    result.loglik = current.value;
    result.gradient_max_norm = current.grad.cwiseAbs().maxCoeff();
    result.loglik_null = null_log_likelihood(data.y, n_cat);
    if (!result.converged)
        result.warnings.push_back("no convergence within " + std::to_string(options.max_iter) + " iterations");
    for (Eigen::Index i = 0; i < m; ++i)
        if (i % w != 0 && std::abs(theta(i)) > 30.0)
            result.warnings.push_back("possible quasi-separation: standardized coefficient exceeds 30 in magnitude");

    Eigen::MatrixXd vcov_std;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-current.hess);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
        result.warnings.push_back("observed information is not positive definite; covariance unavailable");
        vcov_std = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
    } else {
        Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
        if (options.cluster_column.empty()) {
            vcov_std = bread;
        } else {
            result.vcov_type = "cluster_robust:" + options.cluster_column;
            std::map<std::string, Eigen::VectorXd> cluster_scores;
            for (std::size_t i = 0; i < data.rows(); ++i) {
                Design one;
                one.x = z.row(static_cast<Eigen::Index>(i));
                one.y = {data.y[i]};
                Eigen::VectorXd s = evaluate(one.x, one.y, theta, n_cat, baseline, 1, 1).grad;
                auto [it, inserted] = cluster_scores.try_emplace(data.clusters[i], Eigen::VectorXd::Zero(m));
                it->second += s;
            }
            Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(m, m);
            for (const auto& [id, s] : cluster_scores) meat += s * s.transpose();
            double g = static_cast<double>(cluster_scores.size());
            if (g < 2) throw DataError("cluster-robust errors need at least two clusters");
            vcov_std = (g / (g - 1.0)) * bread * meat * bread;
        }
    }

    // beta = gamma / sd; intercept = intercept_std - sum_j gamma_j mean_j / sd_j.
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(m, m);
    for (std::size_t b = 0; b < codes.size(); ++b) {
        Eigen::Index base = static_cast<Eigen::Index>(b) * w;
        for (Eigen::Index j = 0; j < k; ++j) {
            t(base + 1 + j, base + 1 + j) = 1.0 / standard.sd(j);
            t(base, base + 1 + j) = -standard.mean(j) / standard.sd(j);
        }
    }
    result.params = unflatten(t * theta, n_cat, baseline, k);
    result.vcov = t * vcov_std * t.transpose();
    result.vcov = 0.5 * (result.vcov + result.vcov.transpose()).eval();
    return result;
}

MnlFit mnl_fit(const BondDataset& data, const OlmSpec& spec, int baseline, const FitOptions& options) {
    return mnl_fit(make_design(data, spec.covariates, spec.response, options.cluster_column), spec, baseline, options);
}

std::vector<MnlCoefRow> summarize(const MnlFit& f) {
    if (!f.converged) throw ConvergenceError("cannot summarize an unconverged multinomial logit fit");
    std::vector<MnlCoefRow> rows;
    Eigen::Index k = static_cast<Eigen::Index>(f.spec.covariates.size());
    Eigen::Index pos = 0;
    for (const auto& [c, block] : f.params.per_category) {
        for (Eigen::Index j = 0; j < k; ++j)
            rows.push_back({c, coef_row(f.spec.covariates[static_cast<std::size_t>(j)], block.beta(j),
                                        std::sqrt(f.vcov(pos + 1 + j, pos + 1 + j)))});
        rows.push_back({c, coef_row("Constant", block.intercept, std::sqrt(f.vcov(pos, pos)))});
        pos += k + 1;
    }
    return rows;
}

double pseudo_r2(const MnlFit& f) { return pseudo_r2(f.loglik, f.loglik_null); }

Comparison compare(const OlmFit& olm, const MnlFit& mnl) {
    if (olm.n_obs != mnl.n_obs || olm.data_fingerprint != mnl.data_fingerprint ||
        olm.spec.covariates != mnl.spec.covariates)
        throw DataError("compare: the ordered and multinomial fits were estimated on different rows or covariates");
    Comparison cmp;
    cmp.olm_pseudo_r2 = pseudo_r2(olm);
    cmp.mnl_pseudo_r2 = pseudo_r2(mnl);
    cmp.n_obs = olm.n_obs;
    cmp.baseline = mnl.params.baseline;
    std::vector<CoefRow> olm_rows = summarize(olm);
    std::vector<MnlCoefRow> mnl_rows = summarize(mnl);
    for (std::size_t j = 0; j < olm.spec.covariates.size(); ++j) {
        const CoefRow& o = olm_rows[j];
        for (const auto& mr : mnl_rows) {
            if (mr.row.name != o.name) continue;
            ComparisonRow r;
            r.covariate = o.name;
            r.olm_coefficient = o.coefficient;
            r.olm_tier = significance_tier(o.p_value);
            r.category = mr.category;
            r.mnl_coefficient = mr.row.coefficient;
            r.mnl_tier = significance_tier(mr.row.p_value);
            int olm_sign = (o.coefficient > 0) - (o.coefficient < 0);
            r.expected_sign = mr.category > cmp.baseline ? olm_sign : -olm_sign;
            r.significance_decreased = r.mnl_tier < r.olm_tier;
            int mnl_sign = (mr.row.coefficient > 0) - (mr.row.coefficient < 0);
            r.sign_flip = std::abs(o.t_value) >= kSignNoiseThreshold && std::abs(mr.row.t_value) >= kSignNoiseThreshold &&
                          mnl_sign != r.expected_sign;
            cmp.rows.push_back(r);
        }
    }
    return cmp;
}

}  // namespace igrate
