#include <cmath>
#include <random>

#include "doctest.h"
#include "igrate/errors.hpp"
#include "igrate/fit_io.hpp"
#include "igrate/multinomial_logit.hpp"
#include "igrate/synthetic.hpp"

using namespace igrate;

namespace {

MnlParams three_category_params() {
    MnlParams p;
    p.baseline = 2;
    p.per_category[1] = {0.4, Eigen::Vector2d(-0.8, 0.3)};
    p.per_category[3] = {-0.2, Eigen::Vector2d(0.6, 0.5)};
    return p;
}

Design mnl_design(const MnlParams& p, std::size_t n, std::uint64_t seed) {
    MnlDgp d;
    d.params = p;
    d.laws = {CovariateLaw::normal(0.0, 1.0), CovariateLaw::bernoulli(0.4)};
    d.n = n;
    d.seed = seed;
    return simulate_mnl_design(d);
}

OlmSpec spec_for(const Design& d, int categories) {
    OlmSpec s;
    s.covariates = d.names;
    s.n_categories = categories;
    return s;
}

// Independent oracle: binary logit P(y = upper) by plain Newton-Raphson.
Eigen::VectorXd binary_logit_newton(const Design& d, int upper) {
    const auto n = static_cast<Eigen::Index>(d.rows());
    Eigen::MatrixXd x(n, d.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(d.cols()) = d.x;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = d.y[static_cast<std::size_t>(i)] == upper ? 1.0 : 0.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd p = (1.0 + (-(x * b).array()).exp()).inverse().matrix();
        Eigen::VectorXd w = p.array() * (1.0 - p.array());
        Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
        Eigen::VectorXd step = h.ldlt().solve(x.transpose() * (y - p));
        b += step;
        if (step.cwiseAbs().maxCoeff() < 1e-13) break;
    }
    return b;
}

}  // namespace

TEST_SUITE("multinomial_logit") {
    TEST_CASE("softmax agrees with long double evaluation") {
        auto p = three_category_params();
        std::mt19937 gen(1);
        std::normal_distribution<double> z(0.0, 30.0);
        for (int t = 0; t < 500; ++t) {
            Eigen::Vector2d x(z(gen), z(gen));
            auto probs = mnl_probs(x, p);
            long double e1 = p.per_category[1].intercept + x.dot(p.per_category[1].beta);
            long double e3 = p.per_category[3].intercept + x.dot(p.per_category[3].beta);
            long double m = std::max({e1, 0.0L, e3});
            long double s = std::exp(e1 - m) + std::exp(-m) + std::exp(e3 - m);
            REQUIRE(std::abs(probs.sum() - 1.0) < 1e-12);
            CHECK(std::abs(probs(0) - static_cast<double>(std::exp(e1 - m) / s)) < 1e-15);
            CHECK(std::abs(probs(1) - static_cast<double>(std::exp(-m) / s)) < 1e-15);
        }
    }

    TEST_CASE("flat layout round trip") {
        auto p = three_category_params();
        auto back = unflatten(flatten(p), 3, 2, 2);
        CHECK(back.per_category.at(1).beta == p.per_category.at(1).beta);
        CHECK(back.per_category.at(3).intercept == p.per_category.at(3).intercept);
        CHECK(flatten(p).size() == 6);
    }

    TEST_CASE("gradient matches central differences") {
        auto p = three_category_params();
        auto d = mnl_design(p, 400, 2);
        std::mt19937 gen(4);
        std::normal_distribution<double> z(0.0, 0.8);
        for (int t = 0; t < 10; ++t) {
            Eigen::VectorXd theta(6);
            for (int i = 0; i < 6; ++i) theta(i) = z(gen);
            auto g = mnl_gradient(d, unflatten(theta, 3, 2, 2));
            for (int i = 0; i < 6; ++i) {
                double h = 1e-5 * (1.0 + std::abs(theta(i)));
                Eigen::VectorXd up = theta, dn = theta;
                up(i) += h;
                dn(i) -= h;
                double fd = (mnl_log_likelihood(d, unflatten(up, 3, 2, 2)) - mnl_log_likelihood(d, unflatten(dn, 3, 2, 2))) / (2 * h);
                CHECK(std::abs(g(i) - fd) / std::max({1.0, std::abs(g(i)), std::abs(fd)}) < 1e-6);
            }
        }
    }

    TEST_CASE("intercept-only fit gives log count ratios") {
        Design d;
        d.x.resize(100, 0);
        for (int i = 0; i < 100; ++i) d.y.push_back(i < 20 ? 1 : i < 70 ? 2 : 3);
        OlmSpec s;
        s.covariates = {};
        auto f = mnl_fit(d, s, 2);
        REQUIRE(f.converged);
        CHECK(std::abs(f.params.per_category.at(1).intercept - std::log(20.0 / 50.0)) < 1e-6);
        CHECK(std::abs(f.params.per_category.at(3).intercept - std::log(30.0 / 50.0)) < 1e-6);
    }

    TEST_CASE("two categories reduce to binary logit") {
        MnlParams p;
        p.baseline = 1;
        p.per_category[2] = {0.3, Eigen::Vector2d(1.1, -0.7)};
        auto d = mnl_design(p, 1500, 6);
        auto f = mnl_fit(d, spec_for(d, 2), 1);
        REQUIRE(f.converged);
        auto oracle = binary_logit_newton(d, 2);
        CHECK(std::abs(f.params.per_category.at(2).intercept - oracle(0)) < 1e-6);
        for (int j = 0; j < 2; ++j) CHECK(std::abs(f.params.per_category.at(2).beta(j) - oracle(j + 1)) < 1e-6);
    }

    TEST_CASE("recovers a simulated truth and is order invariant") {
        auto p = three_category_params();
        auto d = mnl_design(p, 20000, 8);
        auto f = mnl_fit(d, spec_for(d, 3), 2);
        REQUIRE(f.converged);
        auto truth = flatten(p), est = flatten(f.params);
        for (int i = 0; i < truth.size(); ++i) CHECK(std::abs(est(i) - truth(i)) < 4.0 * std::sqrt(f.vcov(i, i)));
        std::vector<std::size_t> perm(d.rows());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
        FitOptions three;
        three.workers = 3;
        auto g = mnl_fit(reorder(d, perm), spec_for(d, 3), 2, three);
        CHECK(flatten(g.params) == flatten(f.params));
        CHECK(g.vcov == f.vcov);
    }

    TEST_CASE("summary blocks and comparison with the ordered model") {
        OlmDgp dgp;
        dgp.covariates = {"x1", "x2"};
        dgp.beta_true = Eigen::Vector2d(1.0, -0.6);
        dgp.cutpoints_true = Eigen::Vector2d(-0.5, 0.8);
        dgp.laws = {CovariateLaw::normal(0, 1), CovariateLaw::normal(0, 1)};
        dgp.n = 3000;
        dgp.seed = 77;
        auto d = simulate_design(dgp);
        auto spec = spec_for(d, 3);
        auto olm = fit(d, spec);
        auto mnl = mnl_fit(d, spec, 2);
        auto rows = summarize(mnl);
        REQUIRE(rows.size() == 6);
        CHECK(rows[0].category == 1);
        CHECK(rows[2].row.name == "Constant");
        auto cmp = compare(olm, mnl);
        REQUIRE(cmp.rows.size() == 4);
        for (const auto& r : cmp.rows) {
            // Blocks below the baseline move opposite to a positive ordered beta.
            CHECK(r.expected_sign == (r.category > 2 ? 1 : -1) * (r.olm_coefficient > 0 ? 1 : -1));
            CHECK((r.mnl_coefficient > 0 ? 1 : -1) == r.expected_sign);
            CHECK_FALSE(r.sign_flip);
        }
        auto other = d;
        other.y[0] = other.y[0] == 1 ? 2 : 1;
        CHECK_THROWS_AS(compare(olm, mnl_fit(other, spec, 2)), DataError);
    }

    TEST_CASE("fit files round trip") {
        auto d = mnl_design(three_category_params(), 500, 3);
        auto f = mnl_fit(d, spec_for(d, 3), 2);
        auto back = mnl_fit_from_json(to_json(f));
        CHECK(flatten(back.params) == flatten(f.params));
        CHECK(back.vcov == f.vcov);
        CHECK(fit_family(to_json(f)) == "multinomial_logit");
    }
}
