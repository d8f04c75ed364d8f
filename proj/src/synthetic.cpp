#include "igrate/synthetic.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "igrate/errors.hpp"
#include "igrate/rng.hpp"

namespace igrate {

namespace {

constexpr std::uint32_t kSlotYear = 0;
constexpr std::uint32_t kSlotProvince = 1;
constexpr std::uint32_t kSlotIssuer = 2;
constexpr std::uint32_t kSlotResponse = 15;
constexpr std::uint32_t kSlotCovariate = 16;

void validate_law(const CovariateLaw& law, const std::string& name) {
    using K = CovariateLaw::Kind;
    bool ok = true;
    switch (law.kind) {
        case K::normal: ok = std::isfinite(law.a) && law.b >= 0.0; break;
        case K::bernoulli: ok = law.a >= 0.0 && law.a <= 1.0; break;
        case K::uniform: ok = std::isfinite(law.a) && std::isfinite(law.b) && law.a < law.b; break;
        case K::lognormal: ok = law.a > 0.0 && law.b > 0.0; break;
        case K::by_year: ok = name == "im_guarantee"; break;
    }
    if (!ok) throw ConfigError("invalid covariate law for '" + name + "'");
}

double draw(const CovariateLaw& law, const rng::Stream& s, std::uint64_t row, std::uint32_t slot) {
    using K = CovariateLaw::Kind;
    switch (law.kind) {
        case K::normal: return law.a + law.b * s.normal(row, slot);
        case K::bernoulli: return s.bernoulli(row, slot, law.a) ? 1.0 : 0.0;
        case K::uniform: return law.a + (law.b - law.a) * s.uniform(row, slot);
        case K::lognormal: {
            double var_log = std::log1p((law.b * law.b) / (law.a * law.a));
            double mu = std::log(law.a) - 0.5 * var_log;
            return std::exp(mu + std::sqrt(var_log) * s.normal(row, slot));
        }
        case K::by_year: break;
    }
    return 0.0;
}

// Inverse-CDF draw of a category code from a probability vector.
int draw_category(const Eigen::VectorXd& probs, double u) {
    double cum = 0.0;
    for (Eigen::Index c = 0; c + 1 < probs.size(); ++c) {
        cum += probs(c);
        if (u < cum) return static_cast<int>(c) + 1;
    }
    return static_cast<int>(probs.size());
}

struct RowDraw {
    int year;
    Eigen::VectorXd x;
    int y;
};

RowDraw draw_row(const OlmDgp& dgp, const rng::Stream& s, std::uint64_t i) {
    RowDraw r;
    auto span = static_cast<std::uint64_t>(dgp.last_year - dgp.first_year + 1);
    r.year = dgp.first_year + static_cast<int>(s.below(i, kSlotYear, span));
    auto k = static_cast<Eigen::Index>(dgp.covariates.size());
    r.x.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& law = dgp.laws[static_cast<std::size_t>(j)];
        r.x(j) = law.kind == CovariateLaw::Kind::by_year ? dgp.guarantee_series->scaled(r.year)
                                                         : draw(law, s, i, kSlotCovariate + static_cast<std::uint32_t>(j));
    }
    Eigen::VectorXd probs = category_probs(r.x, OlmParams{dgp.beta_true, dgp.cutpoints_true}, dgp.link);
    r.y = draw_category(probs, s.uniform(i, kSlotResponse));
    return r;
}

void set_field(BondRecord& r, const std::string& name, double v) {
    if (name == "im_guarantee")
        r.im_guarantee = v;
    else if (name == "amount")
        r.amount = v;
    else if (name == "term")
        r.term = v;
    else if (name == "option")
        r.option = v != 0.0 ? 1 : 0;
    else if (name == "ROA")
        r.roa = v;
    else if (name == "DTA")
        r.dta = v;
    else if (name == "AT")
        r.at = v;
    else if (name == "GDP_growth")
        r.gdp_growth = v;
    else
        throw ConfigError("simulate_bonds: unknown covariate '" + name + "'");
}

}  // namespace

void validate(const OlmDgp& dgp) {
    auto k = dgp.covariates.size();
    if (dgp.n < 1) throw ConfigError("synthetic DGP needs n >= 1");
    if (static_cast<std::size_t>(dgp.beta_true.size()) != k || dgp.laws.size() != k)
        throw ConfigError("synthetic DGP: covariates, beta and laws differ in length");
    if (dgp.cutpoints_true.size() < 1) throw ConfigError("synthetic DGP needs at least one cutpoint");
    for (Eigen::Index c = 1; c < dgp.cutpoints_true.size(); ++c)
        if (!(dgp.cutpoints_true(c) > dgp.cutpoints_true(c - 1)))
            throw ConfigError("synthetic DGP: cutpoints must be strictly increasing");
    for (std::size_t j = 0; j < k; ++j) {
        validate_law(dgp.laws[j], dgp.covariates[j]);
        if (dgp.laws[j].kind == CovariateLaw::Kind::by_year) {
            if (!dgp.guarantee_series) throw ConfigError("synthetic DGP: by_year law needs a guarantee series");
            for (int y = dgp.first_year; y <= dgp.last_year; ++y)
                if (!dgp.guarantee_series->covers(y))
                    throw ConfigError("synthetic DGP: guarantee series does not cover " + std::to_string(y));
        }
    }
    if (dgp.last_year < dgp.first_year) throw ConfigError("synthetic DGP: year range is empty");
    if (dgp.provinces.empty() || dgp.issuers == 0) throw ConfigError("synthetic DGP needs provinces and issuers");
}

OlmDgp facsimile_dgp(std::size_t n, std::uint64_t seed) {
    OlmDgp d;
    d.covariates = default_covariates();
    d.beta_true.resize(8);
    d.beta_true << -3.781, -0.051, -0.150, 0.115, 0.096, -0.030, 0.586, 4.383;
    d.cutpoints_true.resize(2);
    d.cutpoints_true << -4.007, -2.379;
    d.laws = {CovariateLaw::normal(0.2919, 0.0476),    CovariateLaw::lognormal(8.4809, 5.1610),
              CovariateLaw::lognormal(5.7734, 1.9760), CovariateLaw::bernoulli(0.7453),
              CovariateLaw::normal(1.5996, 1.1095),    CovariateLaw::normal(52.8133, 13.7823),
              CovariateLaw::lognormal(0.0713, 0.0639), CovariateLaw::normal(0.0802, 0.0335)};
    d.n = n;
    d.seed = seed;
    return d;
}

Design simulate_design(const OlmDgp& dgp) {
    validate(dgp);
    rng::Stream stream(dgp.seed, "bonds");
    Design d;
    d.names = dgp.covariates;
    d.x.resize(static_cast<Eigen::Index>(dgp.n), static_cast<Eigen::Index>(dgp.covariates.size()));
    d.y.resize(dgp.n);
    for (std::size_t i = 0; i < dgp.n; ++i) {
        RowDraw r = draw_row(dgp, stream, i);
        d.x.row(static_cast<Eigen::Index>(i)) = r.x.transpose();
        d.y[i] = r.y;
    }
    return d;
}

BondDataset simulate_bonds(const OlmDgp& dgp) {
    validate(dgp);
    if (dgp.cutpoints_true.size() != kRatingCategories - 1)
        throw ConfigError("simulate_bonds: bond ratings have 3 categories, so the DGP needs 2 cutpoints");
    rng::Stream stream(dgp.seed, "bonds");
    BondDataset ds;
    ds.rows.reserve(dgp.n);
    for (std::size_t i = 0; i < dgp.n; ++i) {
        RowDraw draw = draw_row(dgp, stream, i);
        BondRecord r;
        r.bond_id = fmt::format("{}{:06d}", dgp.id_prefix, i + 1);
        r.issue_year = draw.year;
        r.rating_label = decode_rating(draw.y);
        r.term = 1.0;
        for (std::size_t j = 0; j < dgp.covariates.size(); ++j) set_field(r, dgp.covariates[j], draw.x(static_cast<Eigen::Index>(j)));
        r.province = dgp.provinces[stream.below(i, kSlotProvince, dgp.provinces.size())];
        r.issuer_id = fmt::format("{}I{:05d}", dgp.id_prefix, stream.below(i, kSlotIssuer, dgp.issuers) + 1);
        ds.rows.push_back(std::move(r));
    }
    ds.report.rows_read = ds.rows.size();
    return ds;
}

Design simulate_mnl_design(const MnlDgp& dgp) {
    if (dgp.n < 1) throw ConfigError("synthetic DGP needs n >= 1");
    auto k = static_cast<Eigen::Index>(dgp.laws.size());
    for (const auto& [c, b] : dgp.params.per_category)
        if (b.beta.size() != k) throw ConfigError("synthetic MNL DGP: beta length differs from the number of laws");
    for (const auto& law : dgp.laws) validate_law(law, "x");
    rng::Stream stream(dgp.seed, "mnl");
    Design d;
    for (Eigen::Index j = 0; j < k; ++j) d.names.push_back("x" + std::to_string(j + 1));
    d.x.resize(static_cast<Eigen::Index>(dgp.n), k);
    d.y.resize(dgp.n);
    for (std::size_t i = 0; i < dgp.n; ++i) {
        Eigen::VectorXd x(k);
        for (Eigen::Index j = 0; j < k; ++j) x(j) = draw(dgp.laws[static_cast<std::size_t>(j)], stream, i, kSlotCovariate + static_cast<std::uint32_t>(j));
        d.x.row(static_cast<Eigen::Index>(i)) = x.transpose();
        d.y[i] = draw_category(mnl_probs(x, dgp.params), stream.uniform(i, kSlotResponse));
    }
    return d;
}

double ProbabilitySchedule::at(int year) const {
    if (knots.empty()) throw ConfigError("probability schedule has no knots");
    if (year <= knots.front().first) return knots.front().second;
    if (year >= knots.back().first) return knots.back().second;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (year <= knots[i].first) {
            auto [y0, p0] = knots[i - 1];
            auto [y1, p1] = knots[i];
            return p0 + (p1 - p0) * static_cast<double>(year - y0) / static_cast<double>(y1 - y0);
        }
    }
    return knots.back().second;
}

void validate(const CorpusDgp& dgp) {
    if (!dgp.scheme.validated()) throw ConfigError("corpus DGP: indicator scheme has not been validated");
    if (dgp.last_year < dgp.first_year) throw ConfigError("corpus DGP: year range is empty");
    auto check = [](const ProbabilitySchedule& s, const std::string& what) {
        if (s.knots.empty()) throw ConfigError("corpus DGP: schedule for " + what + " has no knots");
        for (std::size_t i = 0; i < s.knots.size(); ++i) {
            if (!(s.knots[i].second >= 0.0 && s.knots[i].second <= 1.0))
                throw ConfigError("corpus DGP: probability outside [0, 1] in schedule for " + what);
            if (i > 0 && s.knots[i].first <= s.knots[i - 1].first)
                throw ConfigError("corpus DGP: schedule years must increase for " + what);
        }
    };
    check(dgp.default_schedule, "the default");
    auto codes = dgp.scheme.secondary_codes();
    std::set<std::string> known(codes.begin(), codes.end());
    for (const auto& [code, s] : dgp.schedules) {
        if (!known.count(code)) throw ConfigError("corpus DGP: schedule for unknown indicator " + code);
        check(s, code);
    }
    std::map<std::string, std::string> owner;
    for (const auto& p : dgp.scheme.primaries)
        for (const auto& s : p.secondaries)
            for (const auto& t : s.rule.terms) {
                std::string key = dgp.tokenizer.case_folding ? fold_case(t) : t;
                auto [it, inserted] = owner.emplace(key, s.code);
                if (!inserted && it->second != s.code)
                    throw ConfigError("corpus DGP: term '" + t + "' is shared by " + it->second + " and " + s.code +
                                      "; generated documents could not reproduce their scorecards");
            }
}

std::vector<SimulatedPolicy> simulate_policies(const CorpusDgp& dgp) {
    validate(dgp);
    static const char* const kBodies[] = {"State Council", "Ministry of Finance", "People's Bank of China",
                                          "National Development and Reform Commission"};
    const std::string filler = "~";
    rng::Stream stream(dgp.seed, "policies");

    std::vector<SimulatedPolicy> out;
    std::uint64_t row = 0;
    for (int year = dgp.first_year; year <= dgp.last_year; ++year) {
        auto it = dgp.docs_in_year.find(year);
        int count = it == dgp.docs_in_year.end() ? dgp.docs_per_year : it->second;
        for (int j = 0; j < count; ++j, ++row) {
            SimulatedPolicy sp;
            sp.document.id = fmt::format("doc{}_{:02d}", year, j + 1);
            sp.document.title = fmt::format("Synthetic municipal bond policy {}-{}", year, j + 1);
            sp.document.issuing_body = kBodies[stream.below(row, 0xFFFF, 4)];
            sp.document.issue_year = year;
            sp.drawn.document_id = sp.document.id;
            std::uint32_t slot = 0;
            std::string body;
            for (const auto& p : dgp.scheme.primaries) {
                for (const auto& s : p.secondaries) {
                    auto sched = dgp.schedules.find(s.code);
                    double prob = (sched == dgp.schedules.end() ? dgp.default_schedule : sched->second).at(year);
                    bool on = stream.bernoulli(row, slot++, prob);
                    sp.drawn.values[s.code] = on ? 1 : 0;
                    if (!on) continue;
                    if (s.rule.kind == RuleKind::any_of) {
                        body += s.rule.terms.front() + "\n";
                    } else {
                        for (const auto& t : s.rule.terms) body += t + "\n";
                    }
                }
            }
            sp.document.body = body.empty() ? filler + "\n" : body;
            if (score_document(sp.document, dgp.scheme, dgp.tokenizer) != sp.drawn)
                throw ConfigError("simulate_policies: the tokenizer does not reproduce indicator terms as tokens; "
                                  "use dictionary mode for synthetic corpora");
            out.push_back(std::move(sp));
        }
    }
    return out;
}

CovariateLaw law_from_json(const nlohmann::json& j) {
    try {
        std::string kind = j.at("law").get<std::string>();
        if (kind == "normal") return CovariateLaw::normal(j.at("mean"), j.at("sd"));
        if (kind == "lognormal") return CovariateLaw::lognormal(j.at("mean"), j.at("sd"));
        if (kind == "bernoulli") return CovariateLaw::bernoulli(j.at("p"));
        if (kind == "uniform") return CovariateLaw::uniform(j.at("low"), j.at("high"));
        if (kind == "by_year") return CovariateLaw::by_year();
        throw ConfigError("unknown covariate law '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("covariate law: ") + e.what());
    }
}

}  // namespace igrate
