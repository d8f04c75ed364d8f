#include "igrate/chart.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "igrate/errors.hpp"
#include "igrate/table.hpp"

namespace igrate {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_series_chart(const GuaranteeSeries& series, const std::string& title) {
    auto values = series.values();
    if (values.empty()) throw DataError("cannot chart an empty guarantee series");

    double lo = values.begin()->second, hi = lo;
    for (const auto& [year, g] : values) {
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    double y_min = std::floor(lo * 2.0) / 2.0;
    double y_max = std::ceil(hi * 2.0) / 2.0;
    if (y_max - y_min < 0.5) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    int first = values.begin()->first;
    int last = values.rbegin()->first;
    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    auto px = [&](int year) {
        return last == first ? kLeft + plot_w / 2.0 : kLeft + plot_w * (year - first) / static_cast<double>(last - first);
    };
    auto py = [&](double g) { return kTop + plot_h * (y_max - g) / (y_max - y_min); };

    std::string svg;
    svg += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
        kWidth, kHeight, kWidth, kHeight);
    svg += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", kWidth, kHeight);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"24.00\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       kWidth / 2.0, escape(title));
    svg += fmt::format("<line class=\"axis\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                       kLeft, kTop, kTop + plot_h);
    svg += fmt::format("<line class=\"axis\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
                       kLeft, kTop + plot_h, kLeft + plot_w);

    int steps = static_cast<int>(std::lround((y_max - y_min) / 0.5));
    int stride = std::max(1, steps / 8);
    for (int i = 0; i <= steps; i += stride) {
        double g = y_min + 0.5 * i;
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"10\">{:.1f}</text>\n",
                           kLeft - 6.0, py(g) + 3.0, g);
    }
    for (const auto& [year, g] : values)
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n", px(year),
                           kTop + plot_h + 16.0, year);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"11\">Year</text>\n",
                       kLeft + plot_w / 2.0, kHeight - 10.0);
    svg += fmt::format(
        "<text x=\"14.00\" y=\"{0:.2f}\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 14.00 {0:.2f})\">G</text>\n",
        kTop + plot_h / 2.0);

    std::string d;
    for (const auto& [year, g] : values)
        d += fmt::format("{}{:.2f},{:.2f}", d.empty() ? "M " : " L ", px(year), py(g));
    svg += "<path class=\"series\" d=\"" + d + "\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"2\"/>\n";
    for (const auto& [year, g] : values)
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"#1f4e79\"/>\n", px(year), py(g));
    svg += "</svg>\n";
    return svg;
}

void emit_series_chart(const GuaranteeSeries& series, const std::filesystem::path& path, const std::string& title) {
    write_file(path, render_series_chart(series, title));
}

}  // namespace igrate
