#pragma once

#include <string>

namespace igrate {

enum class Link { logit, probit };

Link parse_link(const std::string& name);
std::string to_string(Link link);

// e^z / (1 + e^z), evaluated on the branch that never forms exp of a large
// positive argument. Accepts +/-infinity.
double logistic_cdf(double z) noexcept;
double normal_cdf(double z) noexcept;

// F(z), 1 - F(z), F'(z) and F''(z) for the latent error distribution.
// The survival function is computed directly so upper-tail differences keep
// full relative precision. Infinite arguments give the limiting values.
double link_cdf(Link link, double z) noexcept;
double link_sf(Link link, double z) noexcept;
double link_pdf(Link link, double z) noexcept;
double link_dpdf(Link link, double z) noexcept;
double link_quantile(Link link, double p);

// F(upper) - F(lower) for lower < upper, picking the tail with less
// cancellation.
double link_interval(Link link, double lower, double upper) noexcept;

}  // namespace igrate
