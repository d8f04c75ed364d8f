#include "igrate/bond_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <set>

#include "igrate/csv.hpp"
#include "igrate/errors.hpp"

namespace igrate {

namespace {

const char* const kRatingLabels[kRatingCategories] = {"AAA", "AA+", "AA"};

bool is_missing(std::string_view cell) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    return cell.empty() || cell == "NA" || cell == "N/A" || cell == "NaN" || cell == "nan" || cell == "." ||
           cell == "null";
}

std::string trimmed(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace

int encode_rating(std::string_view label) {
    std::string l = trimmed(label);
    for (int c = 0; c < kRatingCategories; ++c)
        if (l == kRatingLabels[c]) return c + 1;
    throw DataError("rating '" + l + "' is not admitted: issuance requires at least AA rating or above (AAA, AA+, AA)");
}

std::string decode_rating(int code) {
    if (code < 1 || code > kRatingCategories) throw DataError("rating code " + std::to_string(code) + " outside 1..3");
    return kRatingLabels[code - 1];
}

double BondRecord::value(std::string_view column) const {
    if (column == "i_ra") return rating_code();
    if (column == "im_guarantee") {
        if (!im_guarantee) throw DataError("bond '" + bond_id + "' has no im_guarantee attached");
        return *im_guarantee;
    }
    if (column == "amount") return amount;
    if (column == "term") return term;
    if (column == "option") return option;
    if (column == "ROA") return roa;
    if (column == "DTA") return dta;
    if (column == "AT") return at;
    if (column == "GDP_growth") return gdp_growth;
    if (column == "issue_year") return issue_year;
    throw ConfigError("unknown bond column '" + std::string(column) + "'");
}

std::string BondSchema::header_for(const std::string& field) const {
    auto it = columns.find(field);
    return it == columns.end() ? field : it->second;
}

BondSchema schema_from_json(const nlohmann::json& j) {
    BondSchema s;
    try {
        std::string delim = j.value("delimiter", ",");
        if (delim == "\\t" || delim == "tab") delim = "\t";
        if (delim.size() != 1) throw ConfigError("bond schema: delimiter must be a single character");
        s.delimiter = delim[0];
        if (j.contains("columns")) s.columns = j.at("columns").get<std::map<std::string, std::string>>();
        if (j.contains("outliers")) {
            const auto& o = j.at("outliers");
            s.screen_outliers = o.value("enabled", true);
            s.iqr_multiplier = o.value("iqr_multiplier", 3.0);
            if (o.contains("columns")) s.outlier_columns = o.at("columns").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bond schema: ") + e.what());
    }
    if (!(s.iqr_multiplier > 0.0)) throw ConfigError("bond schema: iqr_multiplier must be positive");
    return s;
}

bool BondDataset::has_guarantee() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const BondRecord& r) { return r.im_guarantee.has_value(); });
}

std::vector<double> BondDataset::column(std::string_view name) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.value(name));
    return out;
}

std::vector<int> BondDataset::response() const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.rating_code());
    return out;
}

Eigen::MatrixXd BondDataset::covariate_matrix(const std::vector<std::string>& names) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].value(names[j]);
    return x;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile of an empty column");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BondDataset parse_bonds(std::string_view text, const BondSchema& schema) {
    csv::Document doc = csv::parse(text, schema.delimiter);

    const std::vector<std::string> required{"issue_year", "rating", "amount", "term", "option",
                                            "ROA",        "DTA",    "AT",     "GDP_growth"};
    const std::vector<std::string> optional{"bond_id", "province", "issuer_id", "im_guarantee"};
    std::map<std::string, std::size_t> idx;
    for (const auto& f : required) {
        auto c = doc.column(schema.header_for(f));
        if (!c) throw DataError("bond data lacks required column '" + schema.header_for(f) + "'");
        idx[f] = *c;
    }
    for (const auto& f : optional)
        if (auto c = doc.column(schema.header_for(f))) idx[f] = *c;

    BondDataset ds;
    ds.report.rows_read = doc.rows.size();

    for (const auto& row : doc.rows) {
        auto where = [&](const std::string& f) {
            return "bond data line " + std::to_string(row.line) + ", column '" + schema.header_for(f) + "'";
        };
        if (row.fields.size() != doc.header.size())
            throw DataError("bond data line " + std::to_string(row.line) + ": expected " +
                            std::to_string(doc.header.size()) + " fields, found " + std::to_string(row.fields.size()));
        bool missing = false;
        for (const auto& [field, col] : idx) {
            if (field == "bond_id" || field == "province" || field == "issuer_id") continue;
            if (is_missing(row.fields[col])) {
                ++ds.report.missing_by_column[schema.header_for(field)];
                missing = true;
            }
        }
        if (missing) {
            ++ds.report.dropped_missing;
            continue;
        }
        auto number = [&](const std::string& f) {
            auto v = csv::parse_double(row.fields[idx.at(f)]);
            if (!v || !std::isfinite(*v)) throw DataError(where(f) + ": unparseable number '" + row.fields[idx.at(f)] + "'");
            return *v;
        };

        BondRecord r;
        r.bond_id = idx.count("bond_id") ? trimmed(row.fields[idx["bond_id"]]) : "line" + std::to_string(row.line);
        auto year = csv::parse_int(row.fields[idx["issue_year"]]);
        if (!year) throw DataError(where("issue_year") + ": unparseable year '" + row.fields[idx["issue_year"]] + "'");
        r.issue_year = static_cast<int>(*year);
        r.rating_label = trimmed(row.fields[idx["rating"]]);
        try {
            encode_rating(r.rating_label);
        } catch (const DataError& e) {
            throw DataError(where("rating") + ": " + e.what());
        }
        r.amount = number("amount");
        r.term = number("term");
        if (!(r.term > 0.0)) throw DataError(where("term") + ": term must be positive");
        double opt = number("option");
        if (opt != 0.0 && opt != 1.0) throw DataError(where("option") + ": option must be 0 or 1");
        r.option = static_cast<int>(opt);
        r.roa = number("ROA");
        r.dta = number("DTA");
        r.at = number("AT");
        r.gdp_growth = number("GDP_growth");
        if (idx.count("province")) r.province = trimmed(row.fields[idx["province"]]);
        if (idx.count("issuer_id")) r.issuer_id = trimmed(row.fields[idx["issuer_id"]]);
        if (idx.count("im_guarantee")) r.im_guarantee = number("im_guarantee");
        ds.rows.push_back(std::move(r));
    }

    if (schema.screen_outliers && !ds.rows.empty()) {
        std::vector<bool> drop(ds.rows.size(), false);
        for (const auto& col : schema.outlier_columns) {
            std::vector<double> values = ds.column(col);
            double q1 = quantile(values, 0.25), q3 = quantile(values, 0.75);
            double lo = q1 - schema.iqr_multiplier * (q3 - q1);
            double hi = q3 + schema.iqr_multiplier * (q3 - q1);
            ds.report.fences[col] = {lo, hi};
            std::size_t count = 0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (values[i] < lo || values[i] > hi) {
                    drop[i] = true;
                    ++count;
                }
            }
            ds.report.outliers_by_column[col] = count;
        }
        std::vector<BondRecord> kept;
        kept.reserve(ds.rows.size());
        for (std::size_t i = 0; i < ds.rows.size(); ++i) {
            if (drop[i])
                ++ds.report.dropped_outliers;
            else
                kept.push_back(std::move(ds.rows[i]));
        }
        ds.rows = std::move(kept);
    }
    return ds;
}

BondDataset load_bonds(const std::filesystem::path& path, const BondSchema& schema) {
    return parse_bonds(csv::read_text_file(path.string()), schema);
}

std::string bonds_to_csv(const BondDataset& ds, bool include_guarantee, char delimiter) {
    std::ostringstream out;
    std::vector<std::string> header{"bond_id", "issue_year", "rating", "amount",     "term",     "option",   "ROA",
                                    "DTA",     "AT",         "GDP_growth", "province", "issuer_id"};
    if (include_guarantee) header.push_back("im_guarantee");
    csv::write_row(out, header, delimiter);
    auto f = csv::format_lossless;
    for (const auto& r : ds.rows) {
        std::vector<std::string> fields{r.bond_id, std::to_string(r.issue_year), r.rating_label, f(r.amount),
                                        f(r.term), std::to_string(r.option),    f(r.roa),       f(r.dta),
                                        f(r.at),   f(r.gdp_growth),             r.province,     r.issuer_id};
        if (include_guarantee) fields.push_back(r.im_guarantee ? f(*r.im_guarantee) : "");
        csv::write_row(out, fields, delimiter);
    }
    return out.str();
}

void write_bonds(const BondDataset& ds, const std::filesystem::path& path, bool include_guarantee, char delimiter) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write bond file '" + path.string() + "'");
    out << bonds_to_csv(ds, include_guarantee, delimiter);
}

DescriptiveRow describe_column(std::string name, const std::vector<double>& values) {
    if (values.empty()) throw DataError("descriptive statistics of empty column '" + name + "'");
    DescriptiveRow row;
    row.variable = std::move(name);
    row.n = values.size();
    double sum = 0.0;
    row.min = row.max = values.front();
    for (double v : values) {
        sum += v;
        row.min = std::min(row.min, v);
        row.max = std::max(row.max, v);
    }
    row.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std_dev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return row;
}

std::vector<DescriptiveRow> descriptive_stats(const BondDataset& ds) {
    if (ds.empty()) throw DataError("descriptive statistics of an empty dataset");
    std::vector<DescriptiveRow> out;
    std::vector<double> ratings;
    for (int c : ds.response()) ratings.push_back(c);
    out.push_back(describe_column("i_ra", ratings));
    bool guarantee = ds.has_guarantee();
    for (const auto& name : default_covariates()) {
        if (name == "im_guarantee" && !guarantee) continue;
        out.push_back(describe_column(name, ds.column(name)));
    }
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw DataError("correlation needs two equal-length columns of n >= 2");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

CorrelationMatrix correlation_matrix(const BondDataset& ds, const std::vector<std::string>& names) {
    if (ds.size() < 2) throw DataError("correlation matrix needs at least two rows");
    std::vector<std::vector<double>> cols;
    for (const auto& n : names) {
        cols.push_back(ds.column(n));
        const auto& c = cols.back();
        if (std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); }))
            throw DataError("correlation matrix: column '" + n + "' is constant");
    }
    CorrelationMatrix m;
    m.names = names;
    auto k = static_cast<Eigen::Index>(names.size());
    m.r = Eigen::MatrixXd::Identity(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < i; ++j) m.r(i, j) = m.r(j, i) = pearson(cols[i], cols[j]);
    return m;
}

CorrelationMatrix correlation_matrix(const BondDataset& ds) {
    std::vector<std::string> names;
    bool guarantee = ds.has_guarantee();
    for (const auto& n : default_covariates())
        if (n != "im_guarantee" || guarantee) names.push_back(n);
    return correlation_matrix(ds, names);
}

CrossTab rating_by_year(const BondDataset& ds, std::optional<std::pair<int, int>> year_range) {
    std::set<int> years;
    for (const auto& r : ds.rows) years.insert(r.issue_year);
    if (year_range)
        for (int y = year_range->first; y <= year_range->second; ++y) years.insert(y);
    CrossTab t;
    t.years.assign(years.begin(), years.end());
    for (auto& row : t.counts) row.assign(t.years.size(), 0);
    t.column_totals.assign(t.years.size(), 0);
    for (const auto& r : ds.rows) {
        auto j = static_cast<std::size_t>(std::lower_bound(t.years.begin(), t.years.end(), r.issue_year) - t.years.begin());
        ++t.counts[static_cast<std::size_t>(r.rating_code() - 1)][j];
    }
    for (std::size_t c = 0; c < kRatingCategories; ++c)
        for (std::size_t j = 0; j < t.years.size(); ++j) {
            t.row_totals[c] += t.counts[c][j];
            t.column_totals[j] += t.counts[c][j];
            t.total += t.counts[c][j];
        }
    return t;
}

std::string to_string(Region region) { return region == Region::east ? "east" : "central_west"; }

Region RegionMap::lookup(const std::string& province) const {
    auto it = province_region.find(province);
    if (it == province_region.end()) throw DataError("province '" + province + "' is not in the region map");
    return it->second;
}

RegionMap region_map_from_json(const nlohmann::json& j) {
    RegionMap m;
    try {
        for (const auto& [key, region] : {std::pair{"east", Region::east}, std::pair{"central_west", Region::central_west}}) {
            if (!j.contains(key)) throw ConfigError(std::string("region map lacks the '") + key + "' list");
            for (const auto& p : j.at(key).get<std::vector<std::string>>()) {
                if (!m.province_region.emplace(p, region).second)
                    throw ConfigError("region map lists province '" + p + "' twice");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("region map: ") + e.what());
    }
    return m;
}

RegionMap load_region_map(const std::filesystem::path& path) {
    std::string text;
    try {
        text = csv::read_text_file(path.string());
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    try {
        return region_map_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("region map '" + path.string() + "': " + e.what());
    }
}

RegionSplit split_region(const BondDataset& ds, const RegionMap& map) {
    std::set<std::string> unmapped;
    for (const auto& r : ds.rows)
        if (!map.province_region.count(r.province)) unmapped.insert(r.province);
    if (!unmapped.empty()) {
        std::string list;
        for (const auto& p : unmapped) list += (list.empty() ? "'" : ", '") + p + "'";
        throw DataError("provinces missing from the region map: " + list);
    }
    RegionSplit split;
    split.east.report = split.central_west.report = ds.report;
    for (const auto& r : ds.rows) (map.lookup(r.province) == Region::east ? split.east : split.central_west).rows.push_back(r);
    return split;
}

BondDataset join_guarantee(const BondDataset& ds, const GuaranteeSeries& series) {
    std::set<int> uncovered;
    for (const auto& r : ds.rows)
        if (!series.covers(r.issue_year)) uncovered.insert(r.issue_year);
    if (!uncovered.empty()) {
        std::string list;
        for (int y : uncovered) list += (list.empty() ? "" : ", ") + std::to_string(y);
        throw DataError("guarantee series (" + std::to_string(series.start) + "-" + std::to_string(series.end) +
                        ") does not cover issue years: " + list);
    }
    BondDataset out = ds;
    for (auto& r : out.rows) r.im_guarantee = series.scaled(r.issue_year);
    return out;
}

}  // namespace igrate
