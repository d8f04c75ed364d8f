#pragma once

#include <filesystem>
#include <string>

#include "igrate/pmc_index.hpp"

namespace igrate {

// SVG line chart of raw G by year: one path vertex per year, coordinates at
// two decimals, no timestamps, so equal series give equal bytes.
std::string render_series_chart(const GuaranteeSeries& series, const std::string& title = "Implicit guarantee strength");
void emit_series_chart(const GuaranteeSeries& series, const std::filesystem::path& path,
                       const std::string& title = "Implicit guarantee strength");

}  // namespace igrate
