#include "igrate/links.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "igrate/errors.hpp"

namespace igrate {

Link parse_link(const std::string& name) {
    if (name == "logit") return Link::logit;
    if (name == "probit") return Link::probit;
    throw ConfigError("unknown link '" + name + "' (expected logit or probit)");
}

std::string to_string(Link link) { return link == Link::logit ? "logit" : "probit"; }

double logistic_cdf(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double link_cdf(Link link, double z) noexcept { return link == Link::logit ? logistic_cdf(z) : normal_cdf(z); }

double link_sf(Link link, double z) noexcept { return link == Link::logit ? logistic_cdf(-z) : normal_cdf(-z); }

double link_pdf(Link link, double z) noexcept {
    if (!std::isfinite(z)) return 0.0;
    if (link == Link::logit) return logistic_cdf(z) * logistic_cdf(-z);
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double link_dpdf(Link link, double z) noexcept {
    if (!std::isfinite(z)) return 0.0;
    if (link == Link::logit) {
        double f = logistic_cdf(z), s = logistic_cdf(-z);
        return f * s * (s - f);
    }
    return -z * link_pdf(Link::probit, z);
}

double link_quantile(Link link, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("link quantile needs p in (0, 1)");
    if (link == Link::logit) return std::log(p / (1.0 - p));
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double link_interval(Link link, double lower, double upper) noexcept {
    if (lower > 0.0) return link_sf(link, lower) - link_sf(link, upper);
    return link_cdf(link, upper) - link_cdf(link, lower);
}

}  // namespace igrate
