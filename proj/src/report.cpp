#include "quanteval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "quanteval/errors.hpp"

namespace quanteval {

using ojson = nlohmann::ordered_json;

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

namespace {

constexpr std::string_view kCsvHeader = "model_id,metric_family,numerator,denominator,accuracy";

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quoted field");
    return fields;
}

ojson outcome_json(const ComparisonOutcome& o) {
    ojson j;
    j["group_id"] = o.group_id;
    j["detail"] = o.detail;
    j["lhs_surprisal"] = o.lhs_surprisal;
    j["rhs_surprisal"] = o.rhs_surprisal;
    j["relation"] = o.relation == Relation::Less ? "<" : ">";
    j["passed"] = o.passed;
    j["tie"] = o.tie;
    j["used_normalized"] = o.used_normalized;
    j["lhs_subwords"] = o.lhs_subwords;
    j["rhs_subwords"] = o.rhs_subwords;
    j["subword_mismatch"] = o.subword_mismatch;
    return j;
}

}  // namespace

std::string emit_results(std::span<const MetricResult> results, ResultFormat format) {
    if (results.empty()) throw ArgumentError("no results to emit");
    if (format == ResultFormat::Csv) {
        std::string out(kCsvHeader);
        out += '\n';
        for (const auto& r : results) {
            out += csv_field(r.model_id);
            out += ',';
            out += to_string(r.family);
            out += ',' + std::to_string(r.numerator) + ',' + std::to_string(r.denominator) + ',';
            out += format_fixed(r.accuracy, 6);
            out += '\n';
        }
        return out;
    }
    ojson doc;
    auto arr = ojson::array();
    for (const auto& r : results) {
        ojson j;
        j["model_id"] = r.model_id;
        j["metric_family"] = to_string(r.family);
        j["numerator"] = r.numerator;
        j["denominator"] = r.denominator;
        j["accuracy"] = r.accuracy;
        auto subs = ojson::array();
        for (const auto& s : r.breakdown)
            subs.push_back({{"label", s.label}, {"numerator", s.numerator}, {"denominator", s.denominator},
                            {"accuracy", s.accuracy}});
        j["breakdown"] = std::move(subs);
        auto outs = ojson::array();
        for (const auto& o : r.outcomes) outs.push_back(outcome_json(o));
        j["outcomes"] = std::move(outs);
        arr.push_back(std::move(j));
    }
    doc["results"] = std::move(arr);
    return doc.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
}

std::vector<MetricResult> parse_results_json(std::string_view text) {
    std::vector<MetricResult> out;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& j : doc.at("results")) {
            MetricResult r;
            r.model_id = j.at("model_id").get<std::string>();
            r.family = metric_family_from_string(j.at("metric_family").get<std::string>());
            r.numerator = j.at("numerator").get<long>();
            r.denominator = j.at("denominator").get<long>();
            r.accuracy = j.at("accuracy").get<double>();
            if (j.contains("breakdown")) {
                for (const auto& s : j.at("breakdown"))
                    r.breakdown.push_back({s.at("label").get<std::string>(), s.at("numerator").get<long>(),
                                           s.at("denominator").get<long>(), s.at("accuracy").get<double>()});
            }
            if (j.contains("outcomes")) {
                for (const auto& o : j.at("outcomes")) {
                    ComparisonOutcome c;
                    c.group_id = o.at("group_id").get<std::string>();
                    c.detail = o.at("detail").get<std::string>();
                    c.lhs_surprisal = o.at("lhs_surprisal").get<double>();
                    c.rhs_surprisal = o.at("rhs_surprisal").get<double>();
                    c.relation = o.at("relation").get<std::string>() == "<" ? Relation::Less : Relation::Greater;
                    c.passed = o.at("passed").get<bool>();
                    c.tie = o.at("tie").get<bool>();
                    c.used_normalized = o.at("used_normalized").get<bool>();
                    c.lhs_subwords = o.at("lhs_subwords").get<std::size_t>();
                    c.rhs_subwords = o.at("rhs_subwords").get<std::size_t>();
                    c.subword_mismatch = o.at("subword_mismatch").get<bool>();
                    r.outcomes.push_back(std::move(c));
                }
            }
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed results JSON: ") + e.what());
    }
    return out;
}

std::vector<MetricResult> parse_results_csv(std::string_view text) {
    std::vector<MetricResult> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kCsvHeader) throw ParseError(line_no, "unexpected CSV header");
            continue;
        }
        auto f = split_csv_line(line, line_no);
        if (f.size() != 5) throw ParseError(line_no, "expected 5 fields");
        MetricResult r;
        try {
            r.model_id = f[0];
            r.family = metric_family_from_string(f[1]);
            r.numerator = std::stol(f[2]);
            r.denominator = std::stol(f[3]);
            r.accuracy = std::stod(f[4]);
        } catch (const std::invalid_argument&) {
            throw ParseError(line_no, "malformed number");
        } catch (const ArgumentError& e) {
            throw ParseError(line_no, e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string emit_critique_json(std::span<const CritiqueDelta> deltas) {
    auto arr = ojson::array();
    for (const auto& d : deltas) {
        ojson j;
        j["model_id"] = d.model_id;
        j["prior_most"] = d.prior_most;
        j["baseline_typ"] = d.baseline_typ;
        j["delta_most"] = d.delta_most;
        j["prior_few"] = d.prior_few;
        j["baseline_atyp"] = d.baseline_atyp;
        j["delta_few"] = d.delta_few;
        j["agreement"] = d.agreement;
        j["agreement_most"] = d.agreement_most;
        j["agreement_few"] = d.agreement_few;
        arr.push_back(std::move(j));
    }
    ojson doc;
    doc["critique"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::vector<ScalingPoint> build_scaling_table(std::span<const MetricResult> results,
                                              std::span<const ModelSpec> specs) {
    std::map<std::string, const ModelSpec*> by_id;
    for (const auto& s : specs) {
        if (!by_id.emplace(s.model_id, &s).second)
            throw ConfigError("duplicate model_id '" + s.model_id + "'");
        if (s.parameter_count == 0) throw ConfigError("model '" + s.model_id + "' has no parameter_count");
    }
    std::map<std::string, ScalingPoint> points;
    for (const auto& r : results) {
        auto spec = by_id.find(r.model_id);
        if (spec == by_id.end()) throw ConfigError("no model spec for '" + r.model_id + "'");
        auto& p = points[r.model_id];
        p.model_id = r.model_id;
        p.parameter_count = spec->second->parameter_count;
        if (!p.accuracy.emplace(r.family, r.accuracy).second)
            throw ConfigError("duplicate " + std::string(to_string(r.family)) + " result for model '" +
                              r.model_id + "'");
    }
    std::vector<ScalingPoint> out;
    out.reserve(points.size());
    for (auto& [_, p] : points) out.push_back(std::move(p));
    std::sort(out.begin(), out.end(), [](const ScalingPoint& a, const ScalingPoint& b) {
        if (a.parameter_count != b.parameter_count) return a.parameter_count < b.parameter_count;
        return a.model_id < b.model_id;
    });
    return out;
}

}  // namespace quanteval
