#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "igrate/pmc_index.hpp"

namespace igrate {

// Model covariates in the column order of the variable summary table.
inline const std::vector<std::string>& default_covariates() {
    static const std::vector<std::string> names{"im_guarantee", "amount", "term", "option",
                                                "ROA",          "DTA",    "AT",   "GDP_growth"};
    return names;
}

inline constexpr int kRatingCategories = 3;

// AAA -> 1, AA+ -> 2, AA -> 3. Anything else is rejected: only AA or better
// is admitted for issuance.
int encode_rating(std::string_view label);
std::string decode_rating(int code);

struct BondRecord {
    std::string bond_id;
    int issue_year = 0;
    std::string rating_label;
    double amount = 0.0;      // 100 million yuan
    double term = 0.0;        // years, > 0
    int option = 0;           // 0/1
    double roa = 0.0;         // %
    double dta = 0.0;         // %
    double at = 0.0;          // times
    double gdp_growth = 0.0;  // fraction
    std::string province;
    std::string issuer_id;
    std::optional<double> im_guarantee;

    int rating_code() const { return encode_rating(rating_label); }
    // Numeric value of a model column ("i_ra" or a covariate name).
    double value(std::string_view column) const;

    bool operator==(const BondRecord&) const = default;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t dropped_missing = 0;
    std::map<std::string, std::size_t> missing_by_column;
    std::size_t dropped_outliers = 0;
    std::map<std::string, std::size_t> outliers_by_column;
    std::map<std::string, std::pair<double, double>> fences;
};

struct BondSchema {
    char delimiter = ',';
    // field -> header name; fields: bond_id issue_year rating amount term option
    // ROA DTA AT GDP_growth province issuer_id im_guarantee
    std::map<std::string, std::string> columns;
    bool screen_outliers = true;
    double iqr_multiplier = 3.0;
    std::vector<std::string> outlier_columns{"amount", "term", "ROA", "DTA", "AT", "GDP_growth"};

    std::string header_for(const std::string& field) const;
};

BondSchema schema_from_json(const nlohmann::json& j);

class BondDataset {
public:
    std::vector<BondRecord> rows;
    LoadReport report;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
    bool has_guarantee() const;

    std::vector<double> column(std::string_view name) const;
    std::vector<int> response() const;
    Eigen::MatrixXd covariate_matrix(const std::vector<std::string>& names) const;
};

// Reads delimited text with a header. Rows with a blank/NA model field are
// dropped and counted; malformed cells abort with the line number. Numeric
// screening then drops rows outside [Q1 - m IQR, Q3 + m IQR] of any screened
// column, with fences computed once on the surviving rows.
BondDataset load_bonds(const std::filesystem::path& path, const BondSchema& schema = {});
BondDataset parse_bonds(std::string_view text, const BondSchema& schema = {});

std::string bonds_to_csv(const BondDataset& ds, bool include_guarantee = false, char delimiter = ',');
void write_bonds(const BondDataset& ds, const std::filesystem::path& path, bool include_guarantee = false,
                 char delimiter = ',');

// Linear-interpolation sample quantile (type 7).
double quantile(std::vector<double> values, double q);

struct DescriptiveRow {
    std::string variable;
    std::size_t n = 0;
    double mean = 0.0;
    double std_dev = 0.0;  // n - 1 denominator
    double min = 0.0;
    double max = 0.0;
};

// i_ra first, then covariates; im_guarantee only when attached.
std::vector<DescriptiveRow> descriptive_stats(const BondDataset& ds);
DescriptiveRow describe_column(std::string name, const std::vector<double>& values);

struct CorrelationMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd r;
};

CorrelationMatrix correlation_matrix(const BondDataset& ds);
CorrelationMatrix correlation_matrix(const BondDataset& ds, const std::vector<std::string>& names);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct CrossTab {
    std::vector<int> years;
    std::array<std::vector<std::size_t>, kRatingCategories> counts;  // [rating code - 1][year index]
    std::array<std::size_t, kRatingCategories> row_totals{};
    std::vector<std::size_t> column_totals;
    std::size_t total = 0;
};

// Years absent from the data are omitted unless a range is given.
CrossTab rating_by_year(const BondDataset& ds, std::optional<std::pair<int, int>> year_range = std::nullopt);

enum class Region { east, central_west };
std::string to_string(Region region);

struct RegionMap {
    std::map<std::string, Region> province_region;

    Region lookup(const std::string& province) const;
};

RegionMap region_map_from_json(const nlohmann::json& j);
RegionMap load_region_map(const std::filesystem::path& path);

struct RegionSplit {
    BondDataset east;
    BondDataset central_west;
};

RegionSplit split_region(const BondDataset& ds, const RegionMap& map);

// im_guarantee = scaled G(issue_year) for every row.
BondDataset join_guarantee(const BondDataset& ds, const GuaranteeSeries& series);

}  // namespace igrate
