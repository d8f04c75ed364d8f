#pragma once

#include <string>
#include <vector>

#include "igrate/bond_data.hpp"
#include "igrate/multinomial_logit.hpp"
#include "igrate/ordered_logit.hpp"
#include "igrate/pmc_index.hpp"
#include "igrate/policy_text.hpp"
#include "igrate/table.hpp"

namespace igrate {

std::string rating_column_label(int code);  // "AAA (1)"

Table descriptive_table(const BondDataset& ds);
Table correlation_table(const BondDataset& ds, const std::vector<std::string>& covariates);
Table rating_year_table(const BondDataset& ds);

// Variable, coefficient with stars, standard error, t, p, 95% interval.
Table coefficient_table(std::string id, std::string title, const std::vector<CoefRow>& rows, std::size_t n);
Table olm_table(const OlmFit& fit, std::string id, std::string title);
Table mnl_table(const MnlFit& fit, std::string id, std::string title);
Table comparison_table(const Comparison& cmp);

Table policy_score_table(const std::vector<PolicyDocument>& docs, const std::vector<PmcScore>& scores,
                         const IndicatorScheme& scheme);
Table series_table(const GuaranteeSeries& series, std::size_t documents);

}  // namespace igrate
