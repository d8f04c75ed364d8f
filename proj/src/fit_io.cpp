#include "igrate/fit_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "igrate/csv.hpp"
#include "igrate/errors.hpp"

namespace igrate {

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
    return a;
}

Eigen::VectorXd vector_from(const nlohmann::json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from(a[i]);
    return v;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& rows) {
    auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) throw DataError("fit file: vcov is not square");
        m.row(i) = vector_from(rows[static_cast<std::size_t>(i)]).transpose();
    }
    return m;
}

nlohmann::json common(const OlmSpec& spec, double loglik, double loglik_null, std::size_t n_obs, bool converged,
                      int iterations, double gmax, std::uint64_t fp, const std::vector<std::string>& warnings,
                      const std::string& vcov_type) {
    return {{"covariates", spec.covariates},
            {"response", spec.response},
            {"n_categories", spec.n_categories},
            {"link", to_string(spec.link)},
            {"loglik", number(loglik)},
            {"loglik_null", number(loglik_null)},
            {"n_obs", n_obs},
            {"converged", converged},
            {"iterations", iterations},
            {"gradient_max_norm", number(gmax)},
            {"data_fingerprint", fp},
            {"warnings", warnings},
            {"vcov_type", vcov_type}};
}

OlmSpec spec_from(const nlohmann::json& j) {
    OlmSpec s;
    s.covariates = j.at("covariates").get<std::vector<std::string>>();
    s.response = j.at("response").get<std::string>();
    s.n_categories = j.at("n_categories").get<int>();
    s.link = parse_link(j.at("link").get<std::string>());
    return s;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write fit file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace

std::string fit_family(const nlohmann::json& j) {
    if (!j.contains("family")) throw DataError("fit file lacks a 'family' tag");
    return j.at("family").get<std::string>();
}

nlohmann::json to_json(const OlmFit& f) {
    nlohmann::json j = common(f.spec, f.loglik, f.loglik_null, f.n_obs, f.converged, f.iterations, f.gradient_max_norm,
                              f.data_fingerprint, f.warnings, f.vcov_type);
    j["family"] = "ordered_logit";
    j["beta"] = vector_json(f.params.beta);
    j["cutpoints"] = vector_json(f.params.cutpoints);
    j["floored_terms"] = f.floored_terms;
    j["vcov"] = matrix_json(f.vcov);
    return j;
}

nlohmann::json to_json(const MnlFit& f) {
    nlohmann::json j = common(f.spec, f.loglik, f.loglik_null, f.n_obs, f.converged, f.iterations, f.gradient_max_norm,
                              f.data_fingerprint, f.warnings, f.vcov_type);
    j["family"] = "multinomial_logit";
    j["baseline"] = f.params.baseline;
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& [c, b] : f.params.per_category)
        blocks.push_back({{"category", c}, {"intercept", number(b.intercept)}, {"beta", vector_json(b.beta)}});
    j["blocks"] = blocks;
    j["vcov"] = matrix_json(f.vcov);
    return j;
}

OlmFit olm_fit_from_json(const nlohmann::json& j) {
    if (fit_family(j) != "ordered_logit") throw DataError("fit file is not an ordered_logit fit");
    try {
        OlmFit f;
        f.spec = spec_from(j);
        f.params.beta = vector_from(j.at("beta"));
        f.params.cutpoints = vector_from(j.at("cutpoints"));
        f.loglik = number_from(j.at("loglik"));
        f.loglik_null = number_from(j.at("loglik_null"));
        f.vcov = matrix_from(j.at("vcov"));
        f.vcov_type = j.at("vcov_type").get<std::string>();
        f.n_obs = j.at("n_obs").get<std::size_t>();
        f.converged = j.at("converged").get<bool>();
        f.iterations = j.at("iterations").get<int>();
        f.gradient_max_norm = number_from(j.at("gradient_max_norm"));
        f.floored_terms = j.at("floored_terms").get<std::size_t>();
        f.data_fingerprint = j.at("data_fingerprint").get<std::uint64_t>();
        f.warnings = j.at("warnings").get<std::vector<std::string>>();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed ordered_logit fit file: ") + e.what());
    }
}

MnlFit mnl_fit_from_json(const nlohmann::json& j) {
    if (fit_family(j) != "multinomial_logit") throw DataError("fit file is not a multinomial_logit fit");
    try {
        MnlFit f;
        f.spec = spec_from(j);
        f.params.baseline = j.at("baseline").get<int>();
        for (const auto& b : j.at("blocks"))
            f.params.per_category[b.at("category").get<int>()] = MnlBlock{number_from(b.at("intercept")), vector_from(b.at("beta"))};
        f.loglik = number_from(j.at("loglik"));
        f.loglik_null = number_from(j.at("loglik_null"));
        f.vcov = matrix_from(j.at("vcov"));
        f.vcov_type = j.at("vcov_type").get<std::string>();
        f.n_obs = j.at("n_obs").get<std::size_t>();
        f.converged = j.at("converged").get<bool>();
        f.iterations = j.at("iterations").get<int>();
        f.gradient_max_norm = number_from(j.at("gradient_max_norm"));
        f.data_fingerprint = j.at("data_fingerprint").get<std::uint64_t>();
        f.warnings = j.at("warnings").get<std::vector<std::string>>();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed multinomial_logit fit file: ") + e.what());
    }
}

void save_fit(const OlmFit& fit, const std::filesystem::path& path) { write_json(to_json(fit), path); }
void save_fit(const MnlFit& fit, const std::filesystem::path& path) { write_json(to_json(fit), path); }

nlohmann::json load_fit_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(csv::read_text_file(path.string()));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("fit file '" + path.string() + "': " + e.what());
    }
}

}  // namespace igrate
