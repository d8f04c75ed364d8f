#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "igrate/multinomial_logit.hpp"
#include "igrate/ordered_logit.hpp"

namespace igrate {

// Fit files are JSON objects tagged by "family" ("ordered_logit" or
// "multinomial_logit"); doubles use shortest round-trip text and NaN is
// written as null.
nlohmann::json to_json(const OlmFit& fit);
nlohmann::json to_json(const MnlFit& fit);
OlmFit olm_fit_from_json(const nlohmann::json& j);
MnlFit mnl_fit_from_json(const nlohmann::json& j);

std::string fit_family(const nlohmann::json& j);

void save_fit(const OlmFit& fit, const std::filesystem::path& path);
void save_fit(const MnlFit& fit, const std::filesystem::path& path);
nlohmann::json load_fit_json(const std::filesystem::path& path);

}  // namespace igrate
