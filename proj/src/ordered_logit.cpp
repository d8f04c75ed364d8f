#include "igrate/ordered_logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "igrate/errors.hpp"

namespace igrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbFloor = std::numeric_limits<double>::min();
constexpr double kSeparationBound = 30.0;

enum class Want { value, gradient, hessian };

struct Accumulator {
    double value = 0.0;
    std::size_t floored = 0;
    Eigen::VectorXd grad;  // over phi = (beta, a)
    Eigen::MatrixXd hess;  // upper triangle filled during accumulation

    Accumulator& operator+=(const Accumulator& o) {
        value += o.value;
        floored += o.floored;
        if (grad.size()) grad += o.grad;
        if (hess.size()) hess += o.hess;
        return *this;
    }
};

struct RowTerms {
    double log_p;
    bool floored;
    double a;  // f(u) / p
    double b;  // f(l) / p
    double w_uu, w_ll, w_ul;
};

// Row contribution for response code c (1-based) at linear predictor eta.
RowTerms row_terms(Link link, const Eigen::VectorXd& cut, int c, int n_cat, double eta, Want want) {
    double u = c < n_cat ? cut(c - 1) - eta : kInf;
    double l = c > 1 ? cut(c - 2) - eta : -kInf;
    double p = link_interval(link, l, u);
    RowTerms t{};
    t.floored = !(p >= kProbFloor);
    if (t.floored) p = kProbFloor;
    t.log_p = std::log(p);
    if (want == Want::value) return t;
    double fu = link_pdf(link, u), fl = link_pdf(link, l);
    t.a = fu / p;
    t.b = fl / p;
    if (want == Want::hessian) {
        t.w_uu = link_dpdf(link, u) / p - t.a * t.a;
        t.w_ll = -link_dpdf(link, l) / p - t.b * t.b;
        t.w_ul = t.a * t.b;
    }
    return t;
}

void check_cutpoints(const Eigen::VectorXd& cut) {
    for (Eigen::Index c = 1; c < cut.size(); ++c)
        if (!(cut(c) > cut(c - 1))) throw DomainError("cutpoints must be strictly increasing");
    for (Eigen::Index c = 0; c < cut.size(); ++c)
        if (!std::isfinite(cut(c))) throw DomainError("cutpoints must be finite");
}

// Log-likelihood and derivatives over phi = (beta, a) for covariates x.
Accumulator evaluate_phi(const RowMatrix& x, const std::vector<int>& y, int n_cat, Link link,
                         const Eigen::VectorXd& beta, const Eigen::VectorXd& cut, Want want, int workers) {
    const Eigen::Index k = x.cols();
    const Eigen::Index m = k + n_cat - 1;
    Accumulator zero;
    if (want != Want::value) zero.grad = Eigen::VectorXd::Zero(m);
    if (want == Want::hessian) zero.hess = Eigen::MatrixXd::Zero(m, m);

    Accumulator acc = reduce_rows(y.size(), workers, zero, [&](std::size_t begin, std::size_t end, Accumulator& out) {
        for (std::size_t i = begin; i < end; ++i) {
            auto row = x.row(static_cast<Eigen::Index>(i));
            double eta = row.dot(beta);
            int c = y[i];
            RowTerms t = row_terms(link, cut, c, n_cat, eta, want);
            out.value += t.log_p;
            out.floored += t.floored ? 1 : 0;
            if (want == Want::value) continue;

            Eigen::Index iu = c < n_cat ? k + c - 1 : -1;
            Eigen::Index il = c > 1 ? k + c - 2 : -1;
            double gb = -(t.a - t.b);
            for (Eigen::Index j = 0; j < k; ++j) out.grad(j) += gb * row(j);
            if (iu >= 0) out.grad(iu) += t.a;
            if (il >= 0) out.grad(il) -= t.b;
            if (want != Want::hessian) continue;

            // H = w_uu d_u d_u' + w_ll d_l d_l' + w_ul (d_u d_l' + d_l d_u'),
            // d_u = (-x, e_u), d_l = (-x, e_l).
            double wbb = t.w_uu + t.w_ll + 2.0 * t.w_ul;
            for (Eigen::Index j = 0; j < k; ++j)
                for (Eigen::Index h = j; h < k; ++h) out.hess(j, h) += wbb * row(j) * row(h);
            if (iu >= 0) {
                for (Eigen::Index j = 0; j < k; ++j) out.hess(j, iu) -= (t.w_uu + t.w_ul) * row(j);
                out.hess(iu, iu) += t.w_uu;
            }
            if (il >= 0) {
                for (Eigen::Index j = 0; j < k; ++j) out.hess(j, il) -= (t.w_ll + t.w_ul) * row(j);
                out.hess(il, il) += t.w_ll;
            }
            if (iu >= 0 && il >= 0) out.hess(il, iu) += t.w_ul;
        }
    });
    if (want == Want::hessian) acc.hess = acc.hess.selfadjointView<Eigen::Upper>();
    return acc;
}

// d a / d theta_a: a_1 = theta_1, a_c = a_1 + sum_{m=2..c} exp(theta_m).
Eigen::MatrixXd cutpoint_jacobian(const Eigen::VectorXd& theta_cut) {
    auto q = theta_cut.size();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index c = 0; c < q; ++c) {
        j(c, 0) = 1.0;
        for (Eigen::Index m = 1; m <= c; ++m) j(c, m) = std::exp(theta_cut(m));
    }
    return j;
}

Eigen::MatrixXd full_jacobian(const Eigen::VectorXd& theta, Eigen::Index k) {
    Eigen::Index m = theta.size();
    Eigen::MatrixXd j = Eigen::MatrixXd::Identity(m, m);
    j.bottomRightCorner(m - k, m - k) = cutpoint_jacobian(theta.tail(m - k));
    return j;
}

struct ThetaEval {
    double value = 0.0;
    std::size_t floored = 0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    Eigen::VectorXd grad_phi;
    Eigen::MatrixXd hess_phi;
};

ThetaEval evaluate_theta(const RowMatrix& x, const std::vector<int>& y, int n_cat, Link link,
                         const Eigen::VectorXd& theta, Want want, int workers) {
    const Eigen::Index k = x.cols();
    OlmParams p = from_unconstrained(theta, k);
    Accumulator acc = evaluate_phi(x, y, n_cat, link, p.beta, p.cutpoints, want, workers);
    ThetaEval out;
    out.value = acc.value;
    out.floored = acc.floored;
    if (want == Want::value) return out;
    Eigen::MatrixXd j = full_jacobian(theta, k);
    out.grad_phi = acc.grad;
    out.grad = j.transpose() * acc.grad;
    if (want == Want::hessian) {
        out.hess_phi = acc.hess;
        out.hess = j.transpose() * acc.hess * j;
        // Curvature of the exp map: d2 a_c / d theta_m^2 = exp(theta_m) for 2 <= m <= c.
        Eigen::Index q = n_cat - 1;
        for (Eigen::Index m = 1; m < q; ++m) {
            double tail = 0.0;
            for (Eigen::Index c = m; c < q; ++c) tail += acc.grad(k + c);
            out.hess(k + m, k + m) += std::exp(theta(k + m)) * tail;
        }
    }
    return out;
}

void check_data(const Design& data, const OlmSpec& spec) {
    validate(spec);
    if (data.rows() == 0) throw DataError("ordered logit: empty dataset");
    if (static_cast<std::size_t>(data.cols()) != spec.covariates.size())
        throw DataError("ordered logit: design has " + std::to_string(data.cols()) + " columns but the model lists " +
                        std::to_string(spec.covariates.size()) + " covariates");
    for (int c : data.y)
        if (c < 1 || c > spec.n_categories)
            throw DataError("ordered logit: response code " + std::to_string(c) + " outside 1.." +
                            std::to_string(spec.n_categories));
}

void check_params(const OlmSpec& spec, const OlmParams& params) {
    if (params.beta.size() != static_cast<Eigen::Index>(spec.covariates.size()))
        throw DomainError("ordered logit: beta length does not match the covariate list");
    if (params.cutpoints.size() != spec.n_categories - 1)
        throw DomainError("ordered logit: expected " + std::to_string(spec.n_categories - 1) + " cutpoints");
    check_cutpoints(params.cutpoints);
}

}  // namespace

void validate(const OlmSpec& spec) {
    if (spec.n_categories < 2) throw ConfigError("ordered logit needs at least 2 categories");
    std::set<std::string> seen;
    for (const auto& c : spec.covariates)
        if (!seen.insert(c).second) throw ConfigError("covariate '" + c + "' listed twice");
}

Eigen::VectorXd to_unconstrained(const OlmParams& params) {
    check_cutpoints(params.cutpoints);
    Eigen::Index k = params.beta.size(), q = params.cutpoints.size();
    Eigen::VectorXd theta(k + q);
    theta.head(k) = params.beta;
    if (q > 0) theta(k) = params.cutpoints(0);
    for (Eigen::Index c = 1; c < q; ++c) theta(k + c) = std::log(params.cutpoints(c) - params.cutpoints(c - 1));
    return theta;
}

OlmParams from_unconstrained(const Eigen::VectorXd& theta, Eigen::Index k) {
    OlmParams p;
    Eigen::Index q = theta.size() - k;
    p.beta = theta.head(k);
    p.cutpoints.resize(q);
    if (q > 0) p.cutpoints(0) = theta(k);
    for (Eigen::Index c = 1; c < q; ++c) p.cutpoints(c) = p.cutpoints(c - 1) + std::exp(theta(k + c));
    return p;
}

Eigen::VectorXd category_probs(const Eigen::VectorXd& x, const OlmParams& params, Link link) {
    if (x.size() != params.beta.size()) throw DomainError("category_probs: covariate length does not match beta");
    check_cutpoints(params.cutpoints);
    double eta = x.dot(params.beta);
    auto n_cat = params.cutpoints.size() + 1;
    Eigen::VectorXd probs(n_cat);
    for (Eigen::Index c = 0; c < n_cat; ++c) {
        double u = c < n_cat - 1 ? params.cutpoints(c) - eta : kInf;
        double l = c > 0 ? params.cutpoints(c - 1) - eta : -kInf;
        probs(c) = link_interval(link, l, u);
    }
    return probs;
}

LogLikelihood log_likelihood(const Design& data, const OlmSpec& spec, const OlmParams& params, int workers) {
    check_data(data, spec);
    check_params(spec, params);
    Accumulator acc = evaluate_phi(data.x, data.y, spec.n_categories, spec.link, params.beta, params.cutpoints,
                                   Want::value, workers);
    return {acc.value, acc.floored};
}

Eigen::VectorXd gradient(const Design& data, const OlmSpec& spec, const OlmParams& params, int workers) {
    check_data(data, spec);
    check_params(spec, params);
    return evaluate_theta(data.x, data.y, spec.n_categories, spec.link, to_unconstrained(params), Want::gradient, workers)
        .grad;
}

double null_log_likelihood(const std::vector<int>& y, int n_categories) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_categories), 0);
    for (int c : y) ++counts[static_cast<std::size_t>(c - 1)];
    double n = static_cast<double>(y.size());
    double ll = 0.0;
    for (auto nc : counts)
        if (nc > 0) ll += static_cast<double>(nc) * std::log(static_cast<double>(nc) / n);
    return ll;
}

OlmFit fit(const Design& input, const OlmSpec& spec, const FitOptions& options) {
    check_data(input, spec);
    if (!options.cluster_column.empty() && input.clusters.size() != input.rows())
        throw ConfigError("cluster-robust errors requested but the design carries no cluster labels");
    const int n_cat = spec.n_categories;

    std::vector<std::size_t> counts(static_cast<std::size_t>(n_cat), 0);
    for (int c : input.y) ++counts[static_cast<std::size_t>(c - 1)];
    for (int c = 1; c <= n_cat; ++c)
        if (counts[static_cast<std::size_t>(c - 1)] == 0)
            throw DataError("ordered logit: response category " + std::to_string(c) + " is never observed");

    const Design data = reorder(input, canonical_order(input));
    const Standardization standard = standardize_checked(data);
    const RowMatrix z = apply(standard, data.x);
    const Eigen::Index k = data.cols();
    const Eigen::Index q = n_cat - 1;
    const Eigen::Index m = k + q;

    // Start at the intercept-only maximum: cutpoints at the empirical cumulative quantiles.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    {
        OlmParams start;
        start.beta = Eigen::VectorXd::Zero(k);
        start.cutpoints.resize(q);
        double cum = 0.0, n = static_cast<double>(data.rows());
        for (Eigen::Index c = 0; c < q; ++c) {
            cum += static_cast<double>(counts[static_cast<std::size_t>(c)]);
            start.cutpoints(c) = link_quantile(spec.link, cum / n);
        }
        theta = to_unconstrained(start);
    }

    OlmFit result;
    result.spec = spec;
    result.n_obs = data.rows();
    result.data_fingerprint = fingerprint(data);

    ThetaEval current = evaluate_theta(z, data.y, n_cat, spec.link, theta, Want::hessian, options.workers);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        double gmax = current.grad.cwiseAbs().maxCoeff();
        if (gmax < options.gradient_tol) {
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
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        double trial_value = 0.0;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            trial = theta + step * direction;
            trial_value = evaluate_theta(z, data.y, n_cat, spec.link, trial, Want::value, options.workers).value;
            if (std::isfinite(trial_value) && trial_value >= current.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        result.iterations = iter + 1;
        if (!accepted) {
            // No representable improvement left along a Newton direction: the
            // log-likelihood is flat to rounding at this point.
            result.converged = newton && 0.5 * slope <= options.loglik_rel_tol * std::abs(current.value);
            break;
        }
        double change = std::abs(trial_value - current.value) / std::max(std::abs(current.value), 1e-300);
        theta = trial;
        current = evaluate_theta(z, data.y, n_cat, spec.link, theta, Want::hessian, options.workers);
        if (change < options.loglik_rel_tol && newton) {
            result.converged = true;
            break;
        }
    }

    result.loglik = current.value;
    result.floored_terms = current.floored;
    result.gradient_max_norm = current.grad.cwiseAbs().maxCoeff();
    result.loglik_null = null_log_likelihood(data.y, n_cat);
    if (!result.converged)
        result.warnings.push_back("no convergence within " + std::to_string(options.max_iter) + " iterations");

    OlmParams standardized = from_unconstrained(theta, k);
    for (Eigen::Index j = 0; j < k; ++j)
        if (std::abs(standardized.beta(j)) > kSeparationBound)
            result.warnings.push_back("possible quasi-separation: standardized coefficient of '" +
                                      spec.covariates[static_cast<std::size_t>(j)] + "' exceeds 30 in magnitude");
    if (current.floored > 0)
        result.warnings.push_back(std::to_string(current.floored) + " likelihood terms were floored at DBL_MIN");

    // Covariance on phi_std = (gamma, a_std): delta method through the cutpoint map.
    Eigen::MatrixXd vcov_std;
    Eigen::MatrixXd info_theta = -current.hess;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info_theta);
    Eigen::MatrixXd jac = full_jacobian(theta, k);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
        result.warnings.push_back("observed information is not positive definite; covariance unavailable");
        vcov_std = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
    } else if (options.cluster_column.empty()) {
        vcov_std = jac * ldlt.solve(Eigen::MatrixXd::Identity(m, m)) * jac.transpose();
    } else {
        // Sandwich on phi: bread = (-H_phi)^{-1}, meat = sum over clusters of score outer products.
        result.vcov_type = "cluster_robust:" + options.cluster_column;
        std::map<std::string, Eigen::VectorXd> cluster_scores;
        for (std::size_t i = 0; i < data.rows(); ++i) {
            auto row = z.row(static_cast<Eigen::Index>(i));
            int c = data.y[i];
            RowTerms t = row_terms(spec.link, standardized.cutpoints, c, n_cat, row.dot(standardized.beta), Want::gradient);
            Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
            s.head(k) = -(t.a - t.b) * row.transpose();
            if (c < n_cat) s(k + c - 1) += t.a;
            if (c > 1) s(k + c - 2) -= t.b;
            auto [it, inserted] = cluster_scores.try_emplace(data.clusters[i], Eigen::VectorXd::Zero(m));
            it->second += s;
        }
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(m, m);
        for (const auto& [id, s] : cluster_scores) meat += s * s.transpose();
        double g = static_cast<double>(cluster_scores.size());
        if (g < 2) throw DataError("cluster-robust errors need at least two clusters");
        Eigen::MatrixXd bread = (-current.hess_phi).ldlt().solve(Eigen::MatrixXd::Identity(m, m));
        vcov_std = (g / (g - 1.0)) * bread * meat * bread;
    }

    // Back to the original covariate scale: beta = gamma / sd, a = a_std + sum_j beta_j mean_j.
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index j = 0; j < k; ++j) {
        t(j, j) = 1.0 / standard.sd(j);
        for (Eigen::Index c = 0; c < q; ++c) t(k + c, j) = standard.mean(j) / standard.sd(j);
    }
    Eigen::VectorXd phi_std(m);
    phi_std.head(k) = standardized.beta;
    phi_std.tail(q) = standardized.cutpoints;
    Eigen::VectorXd phi = t * phi_std;
    result.params.beta = phi.head(k);
    result.params.cutpoints = phi.tail(q);
    result.vcov = t * vcov_std * t.transpose();
    result.vcov = 0.5 * (result.vcov + result.vcov.transpose()).eval();
    return result;
}

OlmFit fit(const BondDataset& data, const OlmSpec& spec, const FitOptions& options) {
    return fit(make_design(data, spec.covariates, spec.response, options.cluster_column), spec, options);
}

std::string significance_stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

int significance_tier(double p) { return static_cast<int>(significance_stars(p).size()); }

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

CoefRow coef_row(std::string name, double coefficient, double std_error, bool starred) {
    CoefRow r;
    r.name = std::move(name);
    r.coefficient = coefficient;
    r.std_error = std_error;
    r.t_value = coefficient / std_error;
    r.p_value = two_sided_p(r.t_value);
    r.ci_low = coefficient - kZ975 * std_error;
    r.ci_high = coefficient + kZ975 * std_error;
    if (starred) r.stars = significance_stars(r.p_value);
    return r;
}

std::vector<CoefRow> summarize(const OlmFit& f) {
    if (!f.converged) {
        std::string why = f.warnings.empty() ? "optimizer did not converge" : f.warnings.front();
        throw ConvergenceError("cannot summarize an unconverged ordered logit fit: " + why + " (iterations " +
                               std::to_string(f.iterations) + ", max |gradient| " +
                               std::to_string(f.gradient_max_norm) + ")");
    }
    std::vector<CoefRow> rows;
    Eigen::Index k = f.params.beta.size();
    for (Eigen::Index j = 0; j < k; ++j)
        rows.push_back(coef_row(f.spec.covariates[static_cast<std::size_t>(j)], f.params.beta(j), std::sqrt(f.vcov(j, j))));
    for (Eigen::Index c = 0; c < f.params.cutpoints.size(); ++c)
        rows.push_back(coef_row("cut" + std::to_string(c + 1), f.params.cutpoints(c), std::sqrt(f.vcov(k + c, k + c)), false));
    return rows;
}

double pseudo_r2(double loglik, double loglik_null) {
    if (loglik_null == 0.0) throw DomainError("pseudo R2 undefined: null log-likelihood is zero (single category)");
    return 1.0 - loglik / loglik_null;
}

double pseudo_r2(const OlmFit& f) { return pseudo_r2(f.loglik, f.loglik_null); }

Prediction predict(const OlmFit& f, const Eigen::VectorXd& x) {
    if (!f.converged) throw ConvergenceError("cannot predict from an unconverged fit");
    if (x.size() != f.params.beta.size())
        throw DomainError("predict: expected " + std::to_string(f.params.beta.size()) + " covariates, got " +
                          std::to_string(x.size()));
    Prediction p;
    p.probs = category_probs(x, f.params, f.spec.link);
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.probs.size(); ++c)
        if (p.probs(c) > p.probs(best)) best = c;
    p.modal_category = static_cast<int>(best) + 1;
    return p;
}

}  // namespace igrate
