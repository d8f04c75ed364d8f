#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "igrate/bond_data.hpp"
#include "igrate/ordered_logit.hpp"
#include "igrate/pmc_index.hpp"
#include "igrate/policy_text.hpp"
#include "igrate/synthetic.hpp"
#include "igrate/table.hpp"

namespace igrate {

inline constexpr const char* kVersion = "0.1.0";

enum class DataSource { synthetic, files };

struct SyntheticRegion {
    double share = 0.5;
    std::map<std::string, double> beta;  // overrides by covariate
    std::optional<Eigen::VectorXd> cutpoints;
};

struct SyntheticConfig {
    // Policy corpus.
    int corpus_first_year = 2008;
    int corpus_last_year = 2024;
    int docs_per_year = 1;
    std::map<int, int> docs_in_year;
    ProbabilitySchedule default_schedule{{{2008, 0.5}, {2024, 0.75}}};
    std::map<std::string, ProbabilitySchedule> schedules;

    // Bonds. Every default covariate is generated; im_guarantee always follows
    // the simulated guarantee series of the row's issue year.
    std::size_t n = 9788;
    int first_year = 2015;
    int last_year = 2023;
    std::size_t issuers = 1800;
    std::map<std::string, double> beta;
    std::optional<Eigen::VectorXd> cutpoints;
    std::map<std::string, CovariateLaw> laws;
    std::map<Region, SyntheticRegion> regions;
};

struct PipelineConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    std::uint64_t seed = 1;
    int workers = 1;
    std::filesystem::path output_dir = "igrate_out";
    TableFormat format = TableFormat::plain;
    DataSource source = DataSource::synthetic;

    std::filesystem::path scheme_path;
    TokenizerConfig tokenizer;
    std::filesystem::path corpus_directory;
    std::filesystem::path corpus_manifest;

    int series_start = 2008;
    int series_end = 2024;
    AggregationMode aggregation = AggregationMode::issue_year_mean;
    Scaling scaling = Scaling::divide_by_10;

    std::filesystem::path bonds_path;
    BondSchema bond_schema;
    std::filesystem::path region_map_path;

    OlmSpec model;
    FitOptions fit_options;
    bool mnl_enabled = true;
    int mnl_baseline = 2;
    bool heterogeneity_enabled = true;

    SyntheticConfig synthetic;
    nlohmann::json raw;  // as read, for the manifest
};

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
std::filesystem::path resolve(const PipelineConfig& cfg, const std::filesystem::path& p);

// Checks values and that every referenced input exists. Throws ConfigError.
void validate(const PipelineConfig& cfg);

struct RegionOutcome {
    Region region = Region::east;
    std::size_t n = 0;
    std::optional<OlmFit> fit;
    std::string refusal;  // set when the subsample cannot be fitted as specified
};

struct HeterogeneityResult {
    RegionOutcome east;
    RegionOutcome central_west;
    std::string focus = "im_guarantee";
    std::optional<Region> larger_magnitude;  // by |coefficient of focus|
};

// Splits by region and refits the ordered model on each side. A region whose
// subsample lacks a rating category is refused rather than refitted with fewer
// categories.
HeterogeneityResult heterogeneity(const BondDataset& ds, const RegionMap& map, const OlmSpec& spec,
                                  const FitOptions& options);
Table heterogeneity_table(const HeterogeneityResult& result);

enum class Target { score_corpus, series, describe, fit_olm, fit_mnl, heterogeneity, all, simulate };
Target parse_target(const std::string& verb);

struct ReportBundle {
    std::vector<Table> tables;
    std::optional<GuaranteeSeries> series;
    std::optional<OlmFit> olm;
    std::optional<MnlFit> mnl;
    std::optional<HeterogeneityResult> regions;
    nlohmann::json manifest;
    // Rendered artifacts by path relative to the output directory.
    std::map<std::string, std::string> files;

    const Table* table(const std::string& id) const;
};

// Runs the stages needed for `target` in order. Errors surface as StageError
// naming the stage; nothing is written.
ReportBundle run_pipeline(const PipelineConfig& cfg, Target target = Target::all);

// Writes every file into a sibling temporary directory, then renames it over
// `directory`, so a failed run never leaves a partial bundle.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& directory);

}  // namespace igrate
