#include "igrate/report.hpp"

#include <cmath>

#include <fmt/format.h>

namespace igrate {

namespace {

std::vector<Column> coefficient_columns(bool with_category) {
    std::vector<Column> cols;
    if (with_category) cols.push_back({"Category", CellKind::text});
    cols.insert(cols.end(), {{"Variable", CellKind::text},
                             {"Coef.", CellKind::coefficient},
                             {"Sig.", CellKind::text, true},
                             {"Std. Err.", CellKind::coefficient},
                             {"t", CellKind::stat},
                             {"P>|t|", CellKind::p_value},
                             {"[95% Conf.", CellKind::coefficient},
                             {"Interval]", CellKind::coefficient}});
    return cols;
}

std::vector<Cell> coefficient_cells(const CoefRow& r) {
    return {r.name, r.coefficient, r.stars, r.std_error, r.t_value, r.p_value, r.ci_low, r.ci_high};
}

std::string fixed4(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

std::string rating_column_label(int code) { return decode_rating(code) + " (" + std::to_string(code) + ")"; }

Table descriptive_table(const BondDataset& ds) {
    Table t;
    t.id = "descriptive";
    t.title = "Descriptive statistics";
    t.columns = {{"Variable", CellKind::text}, {"N", CellKind::integer}, {"Mean", CellKind::stat},
                 {"Std. Dev.", CellKind::stat}, {"Min", CellKind::stat},  {"Max", CellKind::stat}};
    for (const auto& r : descriptive_stats(ds))
        t.add_row({r.variable, static_cast<long long>(r.n), r.mean, r.std_dev, r.min, r.max});
    t.n = ds.size();
    return t;
}

Table correlation_table(const BondDataset& ds, const std::vector<std::string>& covariates) {
    std::vector<std::string> names{"i_ra"};
    names.insert(names.end(), covariates.begin(), covariates.end());
    auto cm = correlation_matrix(ds, names);
    Table t;
    t.id = "correlation";
    t.title = "Pearson correlation matrix";
    t.columns.push_back({"Variable", CellKind::text});
    for (const auto& n : cm.names) t.columns.push_back({n, CellKind::stat});
    for (std::size_t i = 0; i < cm.names.size(); ++i) {
        std::vector<Cell> row{cm.names[i]};
        for (std::size_t j = 0; j < cm.names.size(); ++j) {
            if (j <= i)
                row.emplace_back(cm.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            else
                row.emplace_back(std::monostate{});
        }
        t.add_row(std::move(row));
    }
    t.n = ds.size();
    return t;
}

Table rating_year_table(const BondDataset& ds) {
    auto ct = rating_by_year(ds);
    Table t;
    t.id = "rating_by_year";
    t.title = "Bond ratings by issue year";
    t.columns.push_back({"Rating", CellKind::text});
    for (int y : ct.years) t.columns.push_back({std::to_string(y), CellKind::integer});
    t.columns.push_back({"Total", CellKind::integer});
    for (int c = 1; c <= kRatingCategories; ++c) {
        std::vector<Cell> row{decode_rating(c)};
        for (std::size_t k = 0; k < ct.years.size(); ++k)
            row.emplace_back(static_cast<long long>(ct.counts[static_cast<std::size_t>(c - 1)][k]));
        row.emplace_back(static_cast<long long>(ct.row_totals[static_cast<std::size_t>(c - 1)]));
        t.add_row(std::move(row));
    }
    std::vector<Cell> total{std::string("Total")};
    for (auto v : ct.column_totals) total.emplace_back(static_cast<long long>(v));
    total.emplace_back(static_cast<long long>(ct.total));
    t.add_row(std::move(total));
    t.n = ct.total;
    return t;
}

Table coefficient_table(std::string id, std::string title, const std::vector<CoefRow>& rows, std::size_t n) {
    Table t;
    t.id = std::move(id);
    t.title = std::move(title);
    t.columns = coefficient_columns(false);
    for (const auto& r : rows) t.add_row(coefficient_cells(r));
    t.n = n;
    t.notes.push_back("*** p<0.01, ** p<0.05, * p<0.1");
    return t;
}

Table olm_table(const OlmFit& fit, std::string id, std::string title) {
    Table t = coefficient_table(std::move(id), std::move(title), summarize(fit), fit.n_obs);
    t.notes.push_back("Link: " + to_string(fit.spec.link) + "; standard errors: " + fit.vcov_type);
    t.notes.push_back("Log likelihood = " + fixed4(fit.loglik) + "; null = " + fixed4(fit.loglik_null));
    t.notes.push_back("Pseudo R2 = " + fixed4(pseudo_r2(fit)));
    for (const auto& w : fit.warnings) t.notes.push_back("Warning: " + w);
    return t;
}

Table mnl_table(const MnlFit& fit, std::string id, std::string title) {
    Table t;
    t.id = std::move(id);
    t.title = std::move(title);
    t.columns = coefficient_columns(true);
    for (const auto& r : summarize(fit)) {
        std::vector<Cell> row{rating_column_label(r.category)};
        auto cells = coefficient_cells(r.row);
        row.insert(row.end(), cells.begin(), cells.end());
        t.add_row(std::move(row));
    }
    t.n = fit.n_obs;
    t.notes.push_back("*** p<0.01, ** p<0.05, * p<0.1");
    t.notes.push_back("Base category: " + rating_column_label(fit.params.baseline));
    t.notes.push_back("Log likelihood = " + fixed4(fit.loglik) + "; null = " + fixed4(fit.loglik_null));
    t.notes.push_back("Pseudo R2 = " + fixed4(pseudo_r2(fit)));
    for (const auto& w : fit.warnings) t.notes.push_back("Warning: " + w);
    return t;
}

Table comparison_table(const Comparison& cmp) {
    Table t;
    t.id = "mnl_vs_olm";
    t.title = "Ordered versus multinomial logit";
    t.columns = {{"Variable", CellKind::text},      {"OLM coef.", CellKind::coefficient},
                 {"OLM sig.", CellKind::text, true}, {"Category", CellKind::text},
                 {"MNL coef.", CellKind::coefficient}, {"MNL sig.", CellKind::text, true},
                 {"Expected sign", CellKind::text},  {"Sig. decreased", CellKind::text},
                 {"Sign flip", CellKind::text}};
    auto stars = [](int tier) { return std::string(static_cast<std::size_t>(tier), '*'); };
    for (const auto& r : cmp.rows)
        t.add_row({r.covariate, r.olm_coefficient, stars(r.olm_tier), rating_column_label(r.category), r.mnl_coefficient,
                   stars(r.mnl_tier), std::string(r.expected_sign > 0 ? "+" : (r.expected_sign < 0 ? "-" : "0")),
                   std::string(r.significance_decreased ? "yes" : "no"), std::string(r.sign_flip ? "yes" : "no")});
    t.n = cmp.n_obs;
    t.notes.push_back("Base category: " + rating_column_label(cmp.baseline));
    t.notes.push_back("Pseudo R2: OLM = " + fixed4(cmp.olm_pseudo_r2) + ", MNL = " + fixed4(cmp.mnl_pseudo_r2));
    return t;
}

Table policy_score_table(const std::vector<PolicyDocument>& docs, const std::vector<PmcScore>& scores,
                         const IndicatorScheme& scheme) {
    Table t;
    t.id = "policy_scores";
    t.title = "Policy consistency scores";
    t.columns = {{"Document", CellKind::text}, {"Year", CellKind::integer}};
    for (const auto& p : scheme.primaries) t.columns.push_back({p.code, CellKind::stat});
    t.columns.push_back({"PMC", CellKind::stat});
    t.columns.push_back({"G", CellKind::stat});
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::vector<Cell> row{docs[i].id, static_cast<long long>(docs[i].issue_year)};
        for (const auto& f : scores[i].per_primary) row.emplace_back(to_double(f));
        row.emplace_back(scores[i].value());
        row.emplace_back(to_double(scores[i].guarantee()));
        t.add_row(std::move(row));
    }
    t.n = docs.size();
    if (!scheme.notice.empty()) t.notes.push_back("Scheme: " + scheme.notice);
    return t;
}

Table series_table(const GuaranteeSeries& series, std::size_t documents) {
    Table t;
    t.id = "guarantee_series";
    t.title = "Implicit guarantee strength by year";
    t.columns = {{"Year", CellKind::integer}, {"G", CellKind::stat}, {"im_guarantee", CellKind::stat}};
    for (const auto& [year, g] : series.values())
        t.add_row({static_cast<long long>(year), g, series.scaled(year)});
    t.n = documents;
    t.notes.push_back("Aggregation: " + to_string(series.mode) + "; scaling: " + to_string(series.scaling));
    return t;
}

}  // namespace igrate
