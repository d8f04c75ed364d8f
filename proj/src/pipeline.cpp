#include "igrate/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/version.hpp>
#include <fmt/format.h>

#include "igrate/chart.hpp"
#include "igrate/csv.hpp"
#include "igrate/errors.hpp"
#include "igrate/fit_io.hpp"
#include "igrate/multinomial_logit.hpp"
#include "igrate/report.hpp"
#include "igrate/rng.hpp"

namespace igrate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class F>
auto in_stage(const std::string& stage, const std::string& hint, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e, hint);
    } catch (const json::exception& e) {
        throw StageError(stage, ConfigError(e.what()), hint);
    } catch (const std::exception& e) {
        throw StageError(stage, Error(e.what()), hint);
    }
}

ProbabilitySchedule schedule_from_json(const json& j) {
    ProbabilitySchedule s;
    for (const auto& knot : j) s.knots.emplace_back(knot.at(0).get<int>(), knot.at(1).get<double>());
    return s;
}

Eigen::VectorXd vector_from_json(const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SyntheticRegion region_from_json(const json& j) {
    SyntheticRegion r;
    r.share = j.value("share", 0.5);
    if (j.contains("beta")) r.beta = j.at("beta").get<std::map<std::string, double>>();
    if (j.contains("cutpoints")) r.cutpoints = vector_from_json(j.at("cutpoints"));
    return r;
}

SyntheticConfig synthetic_from_json(const json& j) {
    SyntheticConfig s;
    if (j.contains("corpus")) {
        const auto& c = j.at("corpus");
        s.corpus_first_year = c.value("first_year", s.corpus_first_year);
        s.corpus_last_year = c.value("last_year", s.corpus_last_year);
        s.docs_per_year = c.value("docs_per_year", s.docs_per_year);
        if (c.contains("docs_in_year"))
            for (const auto& [year, count] : c.at("docs_in_year").items()) s.docs_in_year[std::stoi(year)] = count.get<int>();
        if (c.contains("default_schedule")) s.default_schedule = schedule_from_json(c.at("default_schedule"));
        if (c.contains("schedules"))
            for (const auto& [code, sched] : c.at("schedules").items()) s.schedules[code] = schedule_from_json(sched);
    }
    if (j.contains("bonds")) {
        const auto& b = j.at("bonds");
        s.n = b.value("n", s.n);
        s.first_year = b.value("first_year", s.first_year);
        s.last_year = b.value("last_year", s.last_year);
        s.issuers = b.value("issuers", s.issuers);
        if (b.contains("beta")) s.beta = b.at("beta").get<std::map<std::string, double>>();
        if (b.contains("cutpoints")) s.cutpoints = vector_from_json(b.at("cutpoints"));
        if (b.contains("laws"))
            for (const auto& [name, law] : b.at("laws").items()) s.laws[name] = law_from_json(law);
        if (b.contains("regions")) {
            const auto& r = b.at("regions");
            if (r.contains("east")) s.regions[Region::east] = region_from_json(r.at("east"));
            if (r.contains("central_west")) s.regions[Region::central_west] = region_from_json(r.at("central_west"));
        }
    }
    return s;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

// Covariate names that exist on a bond record.
void check_covariates(const std::vector<std::string>& names) {
    const auto& known = default_covariates();
    for (const auto& n : names)
        if (std::find(known.begin(), known.end(), n) == known.end())
            throw ConfigError("model: unknown covariate '" + n + "'");
}

void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError(what + " is not set");
    if (!fs::exists(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

std::vector<std::string> provinces_of(const RegionMap& map, Region region) {
    std::vector<std::string> out;
    for (const auto& [p, r] : map.province_region)
        if (r == region) out.push_back(p);
    return out;
}

std::string category_list(const std::vector<int>& codes) {
    std::string s;
    for (int c : codes) s += (s.empty() ? "" : ", ") + decode_rating(c);
    return s;
}

json fit_diagnostics(const OlmFit& f) {
    return {{"n", f.n_obs},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"gradient_max_norm", f.gradient_max_norm},
            {"loglik", f.loglik},
            {"loglik_null", f.loglik_null},
            {"floored_terms", f.floored_terms},
            {"vcov_type", f.vcov_type},
            {"data_fingerprint", hex64(f.data_fingerprint)},
            {"warnings", f.warnings}};
}

json fit_diagnostics(const MnlFit& f) {
    return {{"n", f.n_obs},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"gradient_max_norm", f.gradient_max_norm},
            {"loglik", f.loglik},
            {"loglik_null", f.loglik_null},
            {"baseline", f.params.baseline},
            {"vcov_type", f.vcov_type},
            {"data_fingerprint", hex64(f.data_fingerprint)},
            {"warnings", f.warnings}};
}

json load_report_json(const LoadReport& r) {
    json fences = json::object();
    for (const auto& [col, fence] : r.fences) fences[col] = {fence.first, fence.second};
    return {{"rows_read", r.rows_read},
            {"dropped_missing", r.dropped_missing},
            {"missing_by_column", r.missing_by_column},
            {"dropped_outliers", r.dropped_outliers},
            {"outliers_by_column", r.outliers_by_column},
            {"fences", fences}};
}

OlmDgp region_dgp(const PipelineConfig& cfg, Region region, std::size_t n, const GuaranteeSeries& series,
                  const RegionMap& map) {
    const auto& s = cfg.synthetic;
    OlmDgp dgp = facsimile_dgp(n, rng::derive_seed(cfg.seed, "bonds/" + to_string(region)));
    auto set_beta = [&](const std::map<std::string, double>& overrides) {
        for (const auto& [name, value] : overrides) {
            auto it = std::find(dgp.covariates.begin(), dgp.covariates.end(), name);
            if (it == dgp.covariates.end()) throw ConfigError("synthetic bonds: unknown covariate '" + name + "'");
            dgp.beta_true(it - dgp.covariates.begin()) = value;
        }
    };
    set_beta(s.beta);
    if (s.cutpoints) dgp.cutpoints_true = *s.cutpoints;
    for (const auto& [name, law] : s.laws) {
        auto it = std::find(dgp.covariates.begin(), dgp.covariates.end(), name);
        if (it == dgp.covariates.end()) throw ConfigError("synthetic bonds: unknown covariate '" + name + "'");
        dgp.laws[static_cast<std::size_t>(it - dgp.covariates.begin())] = law;
    }
    if (auto r = s.regions.find(region); r != s.regions.end()) {
        set_beta(r->second.beta);
        if (r->second.cutpoints) dgp.cutpoints_true = *r->second.cutpoints;
    }
    dgp.laws[0] = CovariateLaw::by_year();
    dgp.guarantee_series = series;
    dgp.link = cfg.model.link;
    dgp.first_year = s.first_year;
    dgp.last_year = s.last_year;
    dgp.provinces = provinces_of(map, region);
    if (dgp.provinces.empty()) throw ConfigError("region map has no " + to_string(region) + " provinces");
    dgp.issuers = std::max<std::size_t>(1, s.issuers / 2);
    dgp.id_prefix = region == Region::east ? "E" : "W";
    return dgp;
}

}  // namespace

fs::path resolve(const PipelineConfig& cfg, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return cfg.base_dir / p;
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
    PipelineConfig cfg;
    cfg.base_dir = base_dir;
    cfg.raw = j;
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        static const std::set<std::string> known{"seed",  "workers",   "output_dir", "format",     "source",
                                                 "scheme", "tokenizer", "corpus",     "series",     "bonds",
                                                 "region_map", "model", "mnl",        "heterogeneity", "synthetic"};
        for (const auto& [key, value] : j.items())
            if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        cfg.seed = j.value("seed", cfg.seed);
        cfg.workers = j.value("workers", cfg.workers);
        cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
        cfg.format = parse_format(j.value("format", std::string("plain")));
        std::string source = j.value("source", std::string("synthetic"));
        if (source == "synthetic")
            cfg.source = DataSource::synthetic;
        else if (source == "files")
            cfg.source = DataSource::files;
        else
            throw ConfigError("config: source must be 'synthetic' or 'files'");
        cfg.scheme_path = j.value("scheme", std::string());
        if (j.contains("tokenizer")) cfg.tokenizer = tokenizer_from_json(j.at("tokenizer"));
        if (j.contains("corpus")) {
            cfg.corpus_directory = j.at("corpus").value("directory", std::string());
            cfg.corpus_manifest = j.at("corpus").value("manifest", std::string());
        }
        if (j.contains("series")) {
            const auto& s = j.at("series");
            cfg.series_start = s.value("start", cfg.series_start);
            cfg.series_end = s.value("end", cfg.series_end);
            cfg.aggregation = parse_aggregation(s.value("aggregation", to_string(cfg.aggregation)));
            cfg.scaling = parse_scaling(s.value("scaling", to_string(cfg.scaling)));
        }
        if (j.contains("bonds")) {
            cfg.bonds_path = j.at("bonds").value("path", std::string());
            cfg.bond_schema = schema_from_json(j.at("bonds"));
        }
        cfg.region_map_path = j.value("region_map", std::string());
        if (j.contains("model")) {
            const auto& m = j.at("model");
            cfg.model.covariates = m.value("covariates", cfg.model.covariates);
            cfg.model.n_categories = m.value("n_categories", cfg.model.n_categories);
            cfg.model.link = parse_link(m.value("link", std::string("logit")));
            cfg.fit_options.max_iter = m.value("max_iter", cfg.fit_options.max_iter);
            cfg.fit_options.gradient_tol = m.value("gradient_tol", cfg.fit_options.gradient_tol);
            cfg.fit_options.loglik_rel_tol = m.value("loglik_rel_tol", cfg.fit_options.loglik_rel_tol);
            cfg.fit_options.cluster_column = m.value("cluster_column", std::string());
        }
        if (j.contains("mnl")) {
            cfg.mnl_enabled = j.at("mnl").value("enabled", true);
            cfg.mnl_baseline = j.at("mnl").value("baseline", 2);
        }
        if (j.contains("heterogeneity")) cfg.heterogeneity_enabled = j.at("heterogeneity").value("enabled", true);
        if (j.contains("synthetic")) cfg.synthetic = synthetic_from_json(j.at("synthetic"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = csv::read_text_file(path.string());
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

void validate(const PipelineConfig& cfg) {
    if (cfg.workers < 1) throw ConfigError("config: workers must be at least 1");
    if (cfg.model.n_categories != kRatingCategories)
        throw ConfigError("config: the rating pipeline needs model.n_categories = 3 (AAA, AA+, AA)");
    validate(cfg.model);
    check_covariates(cfg.model.covariates);
    if (cfg.mnl_baseline < 1 || cfg.mnl_baseline > cfg.model.n_categories)
        throw ConfigError("config: mnl.baseline must be a rating code between 1 and 3");
    if (cfg.series_end < cfg.series_start) throw ConfigError("config: series.end precedes series.start");
    if (cfg.fit_options.max_iter < 1) throw ConfigError("config: model.max_iter must be positive");
    const auto& cc = cfg.fit_options.cluster_column;
    if (!cc.empty() && cc != "issuer_id" && cc != "province" && cc != "bond_id")
        throw ConfigError("config: model.cluster_column must be issuer_id, province or bond_id");
    // Dictionary mode takes its entries from the scheme, so an empty list is fine here.
    if (cfg.tokenizer.mode != TokenizerMode::dictionary) validate(cfg.tokenizer);
    if (cfg.tokenizer.min_token_length < 0) throw ConfigError("tokenizer: min_token_length must be >= 0");
    require_file(resolve(cfg, cfg.scheme_path), "scheme");
    if (cfg.heterogeneity_enabled || cfg.source == DataSource::synthetic)
        require_file(resolve(cfg, cfg.region_map_path), "region_map");
    if (cfg.source == DataSource::files) {
        require_file(resolve(cfg, cfg.corpus_manifest), "corpus.manifest");
        require_file(resolve(cfg, cfg.corpus_directory), "corpus.directory");
        require_file(resolve(cfg, cfg.bonds_path), "bonds.path");
    } else {
        const auto& s = cfg.synthetic;
        if (s.n < 2) throw ConfigError("synthetic.bonds.n must be at least 2");
        if (s.last_year < s.first_year) throw ConfigError("synthetic bond years are empty");
        if (s.first_year < cfg.series_start || s.last_year > cfg.series_end)
            throw ConfigError("synthetic bond years must lie inside the series range");
        if (s.corpus_first_year > cfg.series_start)
            throw ConfigError("synthetic corpus must start no later than series.start");
        double share = 0.0;
        for (auto region : {Region::east, Region::central_west}) {
            auto it = s.regions.find(region);
            double v = it == s.regions.end() ? 0.5 : it->second.share;
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("synthetic region shares must lie in [0, 1]");
            share += v;
        }
        if (std::abs(share - 1.0) > 1e-9) throw ConfigError("synthetic region shares must sum to 1");
    }
}

Target parse_target(const std::string& verb) {
    static const std::map<std::string, Target> verbs{
        {"score-corpus", Target::score_corpus}, {"series", Target::series},
        {"describe", Target::describe},         {"fit-olm", Target::fit_olm},
        {"fit-mnl", Target::fit_mnl},           {"heterogeneity", Target::heterogeneity},
        {"run-all", Target::all},               {"simulate", Target::simulate}};
    auto it = verbs.find(verb);
    if (it == verbs.end()) throw ConfigError("unknown verb '" + verb + "'");
    return it->second;
}

HeterogeneityResult heterogeneity(const BondDataset& ds, const RegionMap& map, const OlmSpec& spec,
                                  const FitOptions& options) {
    HeterogeneityResult result;
    auto split = split_region(ds, map);
    auto run = [&](RegionOutcome& out, Region region, const BondDataset& sub) {
        out.region = region;
        out.n = sub.size();
        std::vector<int> missing;
        std::vector<bool> seen(static_cast<std::size_t>(spec.n_categories) + 1, false);
        for (const auto& r : sub.rows) seen[static_cast<std::size_t>(r.rating_code())] = true;
        for (int c = 1; c <= spec.n_categories; ++c)
            if (!seen[static_cast<std::size_t>(c)]) missing.push_back(c);
        if (!missing.empty()) {
            out.refusal = "subsample lacks rating categor" + std::string(missing.size() > 1 ? "ies " : "y ") +
                          category_list(missing) + "; not refitted with fewer categories";
            return;
        }
        out.fit = fit(sub, spec, options);
        if (!out.fit->converged) out.refusal = "fit did not converge";
    };
    run(result.east, Region::east, split.east);
    run(result.central_west, Region::central_west, split.central_west);

    auto it = std::find(spec.covariates.begin(), spec.covariates.end(), result.focus);
    if (it != spec.covariates.end() && result.east.refusal.empty() && result.central_west.refusal.empty()) {
        auto k = it - spec.covariates.begin();
        double e = std::abs(result.east.fit->params.beta(k));
        double w = std::abs(result.central_west.fit->params.beta(k));
        if (e != w) result.larger_magnitude = e > w ? Region::east : Region::central_west;
    }
    return result;
}

Table heterogeneity_table(const HeterogeneityResult& result) {
    Table t;
    t.id = "heterogeneity";
    t.title = "Regional heterogeneity of " + result.focus;
    t.columns = {{"Region", CellKind::text},           {"N", CellKind::integer},
                 {"Coef.", CellKind::coefficient},     {"Sig.", CellKind::text, true},
                 {"Std. Err.", CellKind::coefficient}, {"|Coef.|", CellKind::coefficient},
                 {"Status", CellKind::text}};
    for (const auto* o : {&result.east, &result.central_west}) {
        std::vector<Cell> row{to_string(o->region), static_cast<long long>(o->n)};
        std::optional<CoefRow> focus;
        if (o->fit && o->fit->converged)
            for (const auto& r : summarize(*o->fit))
                if (r.name == result.focus) focus = r;
        if (focus) {
            row.insert(row.end(), {focus->coefficient, focus->stars, focus->std_error, std::abs(focus->coefficient)});
        } else {
            row.insert(row.end(), {std::monostate{}, std::string(), std::monostate{}, std::monostate{}});
        }
        row.emplace_back(o->refusal.empty() ? std::string("fitted") : "refused: " + o->refusal);
        t.add_row(std::move(row));
    }
    t.n = result.east.n + result.central_west.n;
    if (result.larger_magnitude)
        t.notes.push_back("Larger |" + result.focus + "| coefficient: " + to_string(*result.larger_magnitude));
    else
        t.notes.push_back("Magnitudes not compared");
    t.notes.push_back("Descriptive comparison of point estimates; no test of equality is implied");
    return t;
}

const Table* ReportBundle::table(const std::string& id) const {
    for (const auto& t : tables)
        if (t.id == id) return &t;
    return nullptr;
}

ReportBundle run_pipeline(const PipelineConfig& cfg, Target target) {
    in_stage("config", "fix the configuration file", [&] {
        validate(cfg);
        if (target == Target::simulate && cfg.source != DataSource::synthetic)
            throw ConfigError("simulate needs source = synthetic");
    });

    ReportBundle bundle;
    const std::string ext = extension(cfg.format);
    auto add_table = [&](Table t) {
        bundle.files["tables/" + t.id + ext] = render(t, cfg.format);
        bundle.tables.push_back(std::move(t));
    };
    FitOptions options = cfg.fit_options;
    options.workers = cfg.workers;
    json stages = json::object();

    // Policy corpus -> scores.
    IndicatorScheme scheme = in_stage("scheme", "check the indicator scheme file", [&] {
        return load_scheme(resolve(cfg, cfg.scheme_path));
    });
    std::optional<RegionMap> regions;
    if (cfg.heterogeneity_enabled || cfg.source == DataSource::synthetic)
        regions = in_stage("region_map", "check the region map file", [&] { return load_region_map(resolve(cfg, cfg.region_map_path)); });

    std::vector<PolicyDocument> docs = in_stage("corpus", "check the corpus manifest and documents", [&] {
        if (cfg.source == DataSource::files)
            return load_corpus(resolve(cfg, cfg.corpus_manifest), resolve(cfg, cfg.corpus_directory));
        CorpusDgp dgp;
        dgp.scheme = scheme;
        dgp.tokenizer = cfg.tokenizer;
        dgp.first_year = cfg.synthetic.corpus_first_year;
        dgp.last_year = cfg.synthetic.corpus_last_year;
        dgp.docs_per_year = cfg.synthetic.docs_per_year;
        dgp.docs_in_year = cfg.synthetic.docs_in_year;
        dgp.default_schedule = cfg.synthetic.default_schedule;
        dgp.schedules = cfg.synthetic.schedules;
        dgp.seed = rng::derive_seed(cfg.seed, "corpus");
        std::vector<PolicyDocument> out;
        for (auto& sp : simulate_policies(dgp)) out.push_back(std::move(sp.document));
        return out;
    });
    std::vector<PmcScore> scores = in_stage("score", "check that the scheme matches the corpus", [&] {
        std::vector<PmcScore> out;
        for (const auto& d : docs) out.push_back(pmc_score(score_document(d, scheme, cfg.tokenizer), scheme));
        return out;
    });
    stages["corpus"] = {{"documents", docs.size()}, {"scheme_notice", scheme.notice}, {"scheme_warnings", scheme.warnings()}};

    GuaranteeSeries series = in_stage("series", "widen the series range or add earlier documents", [&] {
        return yearly_series(docs, scores, cfg.aggregation, cfg.scaling, cfg.series_start, cfg.series_end);
    });
    bundle.series = series;

    if (target == Target::score_corpus || target == Target::series || target == Target::all)
        add_table(policy_score_table(docs, scores, scheme));
    if (target == Target::series || target == Target::all) {
        add_table(series_table(series, docs.size()));
        bundle.files["guarantee_series.svg"] = render_series_chart(series);
    }

    // Bonds.
    std::optional<BondDataset> bonds;
    bool need_bonds = target != Target::score_corpus && target != Target::series;
    if (need_bonds) {
        bonds = in_stage("bonds", "check the bond file, its column mapping and the series coverage", [&] {
            BondDataset raw;
            if (cfg.source == DataSource::files) {
                raw = load_bonds(resolve(cfg, cfg.bonds_path), cfg.bond_schema);
            } else {
                const auto& s = cfg.synthetic;
                auto share = [&](Region r) {
                    auto it = s.regions.find(r);
                    return it == s.regions.end() ? 0.5 : it->second.share;
                };
                auto n_east = static_cast<std::size_t>(std::llround(static_cast<double>(s.n) * share(Region::east)));
                BondDataset sim;
                for (auto [region, n] : {std::pair{Region::east, n_east}, std::pair{Region::central_west, s.n - n_east}}) {
                    if (n == 0) continue;
                    auto part = simulate_bonds(region_dgp(cfg, region, n, series, *regions));
                    sim.rows.insert(sim.rows.end(), part.rows.begin(), part.rows.end());
                }
                // Synthetic rows take the same loading path as files.
                std::string text = bonds_to_csv(sim);
                bundle.files["data/bonds.csv"] = text;
                BondSchema schema = cfg.bond_schema;
                schema.delimiter = ',';
                schema.columns.clear();
                raw = parse_bonds(text, schema);
            }
            return join_guarantee(raw, series);
        });
        stages["bonds"] = load_report_json(bonds->report);
        stages["bonds"]["rows_used"] = bonds->size();
        if (cfg.source == DataSource::synthetic) {
            std::string manifest_csv;
            {
                std::ostringstream m;
                csv::write_row(m, {"id", "title", "issuing_body", "issue_year", "filename"});
                for (const auto& d : docs) {
                    csv::write_row(m, {d.id, d.title, d.issuing_body, std::to_string(d.issue_year), d.id + ".txt"});
                    bundle.files["data/corpus/" + d.id + ".txt"] = d.body;
                }
                manifest_csv = m.str();
            }
            bundle.files["data/corpus/manifest.csv"] = manifest_csv;
        }
    }

    if (target == Target::describe || target == Target::all) {
        in_stage("describe", "check for constant columns in the bond data", [&] {
            add_table(descriptive_table(*bonds));
            add_table(correlation_table(*bonds, cfg.model.covariates));
            add_table(rating_year_table(*bonds));
        });
    }

    bool need_olm = target == Target::fit_olm || target == Target::fit_mnl || target == Target::all;
    if (need_olm) {
        bundle.olm = in_stage("fit_olm", "raise model.max_iter or drop collinear or separating covariates", [&] {
            return fit(*bonds, cfg.model, options);
        });
        stages["olm"] = fit_diagnostics(*bundle.olm);
        in_stage("fit_olm", "raise model.max_iter or drop separating covariates", [&] {
            add_table(olm_table(*bundle.olm, "olm", "Ordered logit: rating on implicit guarantee"));
            bundle.files["fits/olm.json"] = to_json(*bundle.olm).dump(2) + "\n";
        });
    }

    bool want_mnl = target == Target::fit_mnl || (target == Target::all && cfg.mnl_enabled);
    if (want_mnl) {
        bundle.mnl = in_stage("fit_mnl", "raise model.max_iter or choose another mnl.baseline", [&] {
            return mnl_fit(*bonds, cfg.model, cfg.mnl_baseline, options);
        });
        stages["mnl"] = fit_diagnostics(*bundle.mnl);
        in_stage("fit_mnl", "raise model.max_iter or choose another mnl.baseline", [&] {
            add_table(mnl_table(*bundle.mnl, "mnl", "Multinomial logit robustness check"));
            add_table(comparison_table(compare(*bundle.olm, *bundle.mnl)));
            bundle.files["fits/mnl.json"] = to_json(*bundle.mnl).dump(2) + "\n";
        });
    } else if (target == Target::all) {
        stages["mnl"] = {{"enabled", false}};
    }

    bool want_regions = target == Target::heterogeneity || (target == Target::all && cfg.heterogeneity_enabled);
    if (want_regions) {
        if (!regions) throw StageError("heterogeneity", ConfigError("heterogeneity.enabled is false"), "enable it in the config");
        bundle.regions = in_stage("heterogeneity", "check the region map and the regional subsample sizes", [&] {
            return heterogeneity(*bonds, *regions, cfg.model, options);
        });
        json h = json::object();
        in_stage("heterogeneity", "check the regional subsample sizes", [&] {
            for (const auto* o : {&bundle.regions->east, &bundle.regions->central_west}) {
                std::string name = to_string(o->region);
                if (o->fit && o->fit->converged) {
                    add_table(olm_table(*o->fit, "olm_" + name, "Ordered logit, " + name + " provinces"));
                    bundle.files["fits/olm_" + name + ".json"] = to_json(*o->fit).dump(2) + "\n";
                    h[name] = fit_diagnostics(*o->fit);
                } else {
                    Table t = coefficient_table("olm_" + name, "Ordered logit, " + name + " provinces", {}, o->n);
                    t.notes.push_back("Refused: " + o->refusal);
                    if (o->fit) h[name] = fit_diagnostics(*o->fit);
                    add_table(std::move(t));
                }
                h[name]["refusal"] = o->refusal;
            }
            add_table(heterogeneity_table(*bundle.regions));
        });
        stages["heterogeneity"] = h;
    }

    // Manifest: inputs and diagnostics only, so identical inputs give an
    // identical manifest regardless of worker count or output location.
    json config = cfg.raw;
    config.erase("workers");
    config.erase("output_dir");
    config["seed"] = cfg.seed;
    config["format"] = to_string(cfg.format);
    json files = json::object();
    for (const auto& [path, content] : bundle.files) files[path] = hex64(rng::fnv1a64(content));
    bundle.manifest = {{"tool", "igrate"},
                       {"version", kVersion},
                       {"libraries",
                        {{"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                         {"boost", BOOST_LIB_VERSION},
                         {"fmt", std::to_string(FMT_VERSION)},
                         {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                                       NLOHMANN_JSON_VERSION_PATCH)}}},
                       {"seed", cfg.seed},
                       {"source", cfg.source == DataSource::synthetic ? "synthetic" : "files"},
                       {"config", config},
                       {"stages", stages},
                       {"tables", json::object()},
                       {"files", files}};
    for (const auto& t : bundle.tables) bundle.manifest["tables"][t.id] = {{"n", t.n}, {"rows", t.rows.size()}};
    bundle.files["manifest.json"] = bundle.manifest.dump(2) + "\n";
    return bundle;
}

void write_bundle(const ReportBundle& bundle, const fs::path& directory) {
    if (directory.empty()) throw ConfigError("output directory is not set");
    fs::path target = fs::absolute(directory).lexically_normal();
    if (target.filename().empty()) target = target.parent_path();
    fs::path staging = target;
    staging += ".partial";
    std::error_code ec;
    fs::remove_all(staging, ec);
    try {
        fs::create_directories(staging);
        for (const auto& [rel, content] : bundle.files) {
            fs::path p = staging / rel;
            fs::create_directories(p.parent_path());
            std::ofstream out(p, std::ios::binary);
            if (!out) throw Error("cannot write '" + p.string() + "'");
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            if (!out) throw Error("write failed for '" + p.string() + "'");
        }
        if (fs::exists(target)) fs::remove_all(target);
        fs::rename(staging, target);
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(staging, ec);
        throw Error(std::string("cannot write output directory: ") + e.what());
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
}

}  // namespace igrate
