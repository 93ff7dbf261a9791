#include <algorithm>
#include <array>
#include <cmath>

#include "quanteval/errors.hpp"
#include "quanteval/report.hpp"

namespace quanteval {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 200, kTop = 40, kBottom = 60;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

constexpr std::array<std::string_view, 9> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                      "#8c564b", "#e377c2", "#17becf", "#7f7f7f"};

std::string xml_escape(std::string_view s) {
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

std::string decade_label(int exponent) {
    static constexpr std::array<std::string_view, 5> suffix = {"", "K", "M", "B", "T"};
    if (exponent < 0) return "1e" + std::to_string(exponent);
    const int group = std::min(exponent / 3, 4);
    long long mantissa = 1;
    for (int i = 0; i < exponent - 3 * group; ++i) mantissa *= 10;
    return std::to_string(mantissa) + std::string(suffix[static_cast<std::size_t>(group)]);
}

std::string num(double v) { return format_fixed(v, 2); }

}  // namespace

std::string render_scaling_plot(std::span<const ScalingPoint> table, std::span<const MetricFamily> families,
                                std::string_view title) {
    if (table.empty()) throw ArgumentError("scaling table is empty");
    if (families.empty()) throw ArgumentError("no metric families selected");

    double lo_p = std::log10(static_cast<double>(table.front().parameter_count));
    double hi_p = lo_p;
    for (const auto& p : table) {
        const double lp = std::log10(static_cast<double>(p.parameter_count));
        lo_p = std::min(lo_p, lp);
        hi_p = std::max(hi_p, lp);
    }
    const int lo = static_cast<int>(std::floor(lo_p + 1e-9));
    int hi = static_cast<int>(std::ceil(hi_p - 1e-9));
    if (hi <= lo) hi = lo + 1;
    auto x_of = [&](std::uint64_t params) {
        return kLeft + (std::log10(static_cast<double>(params)) - lo) / (hi - lo) * kPlotW;
    };
    auto y_of = [&](double acc) { return kTop + (1.0 - acc) * kPlotH; };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
    s += "<text class=\"title\" x=\"" + num(kLeft + kPlotW / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(title) + "</text>\n";

    // Accuracy grid.
    for (int i = 0; i <= 5; ++i) {
        const double acc = i / 5.0;
        const double y = y_of(acc);
        s += "<line class=\"grid\" x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + kPlotW) +
             "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text class=\"tick\" x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
             "\" text-anchor=\"end\" font-size=\"11\">" + format_fixed(acc, 1) + "</text>\n";
    }
    // Decade ticks.
    for (int e = lo; e <= hi; ++e) {
        const double x = kLeft + static_cast<double>(e - lo) / (hi - lo) * kPlotW;
        s += "<line class=\"tick\" x1=\"" + num(x) + "\" y1=\"" + num(kTop + kPlotH) + "\" x2=\"" + num(x) +
             "\" y2=\"" + num(kTop + kPlotH + 5) + "\" stroke=\"black\"/>\n";
        s += "<text class=\"tick\" x=\"" + num(x) + "\" y=\"" + num(kTop + kPlotH + 19) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + decade_label(e) + "</text>\n";
    }
    s += "<line class=\"axis\" x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + kPlotH) + "\" x2=\"" +
         num(kLeft + kPlotW) + "\" y2=\"" + num(kTop + kPlotH) + "\" stroke=\"black\"/>\n";
    s += "<line class=\"axis\" x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kTop + kPlotH) + "\" stroke=\"black\"/>\n";
    s += "<text class=\"axis-label\" x=\"" + num(kLeft + kPlotW / 2) + "\" y=\"" + num(kHeight - 16) +
         "\" text-anchor=\"middle\" font-size=\"12\">Parameters (log scale)</text>\n";
    s += "<text class=\"axis-label\" x=\"18\" y=\"" + num(kTop + kPlotH / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " + num(kTop + kPlotH / 2) +
         ")\">Accuracy</text>\n";

    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        const auto family = families[fi];
        const auto color = kPalette[static_cast<std::size_t>(family) % kPalette.size()];
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : table) {
            auto it = p.accuracy.find(family);
            if (it != p.accuracy.end()) pts.emplace_back(x_of(p.parameter_count), y_of(it->second));
        }
        s += "<g class=\"series\" data-family=\"" + std::string(to_string(family)) + "\">\n";
        if (pts.size() >= 2) {
            s += "<polyline class=\"series-line\" fill=\"none\" stroke=\"" + std::string(color) +
                 "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (i) s += ' ';
                s += num(pts[i].first) + "," + num(pts[i].second);
            }
            s += "\"/>\n";
        }
        for (const auto& [x, y] : pts)
            s += "<circle class=\"marker\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3.5\" fill=\"" +
                 std::string(color) + "\"/>\n";
        s += "</g>\n";

        const double ly = kTop + 10 + 20.0 * static_cast<double>(fi);
        const double lx = kLeft + kPlotW + 20;
        s += "<rect class=\"legend-swatch\" x=\"" + num(lx) + "\" y=\"" + num(ly - 8) +
             "\" width=\"14\" height=\"4\" fill=\"" + std::string(color) + "\"/>\n";
        s += "<text class=\"legend\" x=\"" + num(lx + 20) + "\" y=\"" + num(ly - 2) + "\" font-size=\"11\">" +
             std::string(to_string(family)) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace quanteval
