#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quanteval/metrics.hpp"
#include "quanteval/model_spec.hpp"

namespace quanteval {

enum class ResultFormat { Csv, Json };

// CSV: header "model_id,metric_family,numerator,denominator,accuracy", accuracy at 6 decimals.
// JSON: full precision, with breakdowns and outcomes. Rows keep input order.
std::string emit_results(std::span<const MetricResult> results, ResultFormat format);

std::vector<MetricResult> parse_results_json(std::string_view text);
// Outcomes and breakdowns are not part of the CSV form.
std::vector<MetricResult> parse_results_csv(std::string_view text);

std::string emit_critique_json(std::span<const CritiqueDelta> deltas);

struct ScalingPoint {
    std::string model_id;
    std::uint64_t parameter_count = 0;
    std::map<MetricFamily, double> accuracy;
};

// One point per model, ascending parameter_count, ties broken by model_id.
std::vector<ScalingPoint> build_scaling_table(std::span<const MetricResult> results,
                                              std::span<const ModelSpec> specs);

// Standalone SVG: log-scaled parameter axis, accuracy axis [0, 1], one series per family. A
// family with a single point is drawn as a lone marker without a polyline.
std::string render_scaling_plot(std::span<const ScalingPoint> table, std::span<const MetricFamily> families,
                                std::string_view title = "Quantifier accuracy vs. parameter count");

std::string format_fixed(double value, int decimals);

}  // namespace quanteval
