#include "quanteval/table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "quanteval/errors.hpp"

namespace quanteval {

using nlohmann::json;

namespace {

void check_probability(double p, std::string_view what) {
    if (!(p > 0.0 && p <= 1.0))
        throw ValidationError(std::string(what) + " must lie in (0, 1], got " + std::to_string(p));
}

const std::map<std::string, double, std::less<>> kEmpty;

}  // namespace

void ProbabilityTable::set(std::string_view context, std::string_view continuation, double probability) {
    check_probability(probability, "probability");
    auto it = table_.find(context);
    if (it == table_.end()) it = table_.emplace(std::string(context), kEmpty).first;
    it->second.insert_or_assign(std::string(continuation), probability);
}

void ProbabilityTable::set_floor(std::string_view context, double probability) {
    check_probability(probability, "floor probability");
    floors_.insert_or_assign(std::string(context), probability);
}

void ProbabilityTable::set_default_floor(double probability) {
    check_probability(probability, "default floor probability");
    default_floor_ = probability;
}

bool ProbabilityTable::has_context(std::string_view context) const {
    return table_.find(context) != table_.end();
}

std::optional<double> ProbabilityTable::listed(std::string_view context,
                                               std::string_view continuation) const {
    auto it = table_.find(context);
    if (it == table_.end()) return std::nullopt;
    auto jt = it->second.find(continuation);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
}

double ProbabilityTable::floor(std::string_view context) const {
    auto it = floors_.find(context);
    return it == floors_.end() ? default_floor_ : it->second;
}

double ProbabilityTable::residual(std::string_view context) const {
    double mass = 0.0;
    for (const auto& [_, p] : continuations(context)) mass += p;
    return std::max(0.0, 1.0 - mass);
}

const std::map<std::string, double, std::less<>>& ProbabilityTable::continuations(
    std::string_view context) const {
    auto it = table_.find(context);
    if (it == table_.end()) throw UnknownContextError("unknown context '" + std::string(context) + "'");
    return it->second;
}

std::vector<std::string> ProbabilityTable::contexts() const {
    std::vector<std::string> out;
    out.reserve(table_.size());
    for (const auto& [ctx, _] : table_) out.push_back(ctx);
    return out;
}

void ProbabilityTable::validate() const {
    for (const auto& [ctx, conts] : table_) {
        double mass = 0.0;
        for (const auto& [_, p] : conts) mass += p;
        if (mass > 1.0 + 1e-12)
            throw ValidationError("probabilities for context '" + ctx + "' sum to " + std::to_string(mass));
    }
}

ProbabilityTable ProbabilityTable::from_json(const json& doc) {
    ProbabilityTable t;
    try {
        if (doc.contains("default_floor")) t.set_default_floor(doc.at("default_floor").get<double>());
        for (const auto& [ctx, conts] : doc.at("contexts").items()) {
            if (conts.empty()) t.table_.emplace(ctx, kEmpty);
            for (const auto& [cont, p] : conts.items()) t.set(ctx, cont, p.get<double>());
        }
        if (doc.contains("floors")) {
            for (const auto& [ctx, p] : doc.at("floors").items()) t.set_floor(ctx, p.get<double>());
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed probability table: ") + e.what());
    }
    t.validate();
    return t;
}

ProbabilityTable ProbabilityTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read probability table " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("probability table " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

json ProbabilityTable::to_json() const {
    json doc;
    doc["default_floor"] = default_floor_;
    doc["contexts"] = json::object();
    for (const auto& [ctx, conts] : table_) {
        auto& entry = doc["contexts"][ctx];
        entry = json::object();
        for (const auto& [cont, p] : conts) entry[cont] = p;
    }
    if (!floors_.empty()) {
        for (const auto& [ctx, p] : floors_) doc["floors"][ctx] = p;
    }
    return doc;
}

std::vector<TokenScore> table_score(const ProbabilityTable& table, std::string_view context,
                                    std::string_view continuation) {
    if (!table.has_context(context))
        throw UnknownContextError("unknown context '" + std::string(context) + "'");
    const double p = table.listed(context, continuation).value_or(table.floor(context));
    return {TokenScore{std::string(continuation), std::log(p), context.size(),
                       context.size() + continuation.size()}};
}

NextTokenDistribution table_distribution(const ProbabilityTable& table, std::string_view context) {
    NextTokenDistribution dist;
    for (const auto& [cont, p] : table.continuations(context)) dist.entries.emplace_back(cont, std::log(p));
    std::stable_sort(dist.entries.begin(), dist.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    dist.exhaustive = false;
    return dist;
}

TableScorer::TableScorer(ProbabilityTable table) : table_(std::move(table)) { table_.validate(); }

std::vector<TokenScore> TableScorer::score(std::string_view context,
                                           std::string_view continuation) const {
    return table_score(table_, context, continuation);
}

NextTokenDistribution TableScorer::next_token_distribution(std::string_view context) const {
    return table_distribution(table_, context);
}

}  // namespace quanteval
