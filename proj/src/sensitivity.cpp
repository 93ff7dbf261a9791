#include "quanteval/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "quanteval/errors.hpp"
#include "quanteval/util.hpp"

namespace quanteval {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

SensitivityScorer::SensitivityScorer(ProbabilityTable base_table, double lambda,
                                     std::map<std::string, Polarity, std::less<>> quantifiers,
                                     std::map<std::string, CriticalWords, std::less<>> roles)
    : base_(std::move(base_table)), lambda_(lambda), roles_(std::move(roles)) {
    if (!(lambda >= -1.0 && lambda <= 1.0)) throw ArgumentError("lambda must lie in [-1, 1]");
    base_.validate();
    for (auto& [surface, polarity] : quantifiers) {
        if (polarity == Polarity::None) throw ArgumentError("quantifier '" + surface + "' has no polarity");
        quantifiers_.emplace_back(lower(surface), polarity);
    }
    std::stable_sort(quantifiers_.begin(), quantifiers_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

SensitivityScorer SensitivityScorer::from_corpus(std::span<const BackboneGroup> groups,
                                                 ProbabilityTable base_table, double lambda) {
    std::map<std::string, Polarity, std::less<>> quantifiers;
    std::map<std::string, CriticalWords, std::less<>> roles;
    auto add_quantifier = [&](const std::string& q, Polarity p) {
        auto [it, inserted] = quantifiers.emplace(lower(q), p);
        if (!inserted && it->second != p)
            throw ArgumentError("quantifier '" + q + "' appears with both polarities");
    };
    for (const auto& g : groups) {
        for (const auto& q : g.most_quantifiers) add_quantifier(q, Polarity::Most);
        for (const auto& q : g.few_quantifiers) add_quantifier(q, Polarity::Few);
        auto bare = realize_text(std::nullopt, g.backbone, g.typical);
        CriticalWords words{bare.continuation, " " + g.atypical};
        auto [it, inserted] = roles.emplace(bare.context, words);
        if (!inserted && (it->second.typical != words.typical || it->second.atypical != words.atypical))
            throw ArgumentError("bare context '" + bare.context + "' has conflicting critical words");
    }
    return {std::move(base_table), lambda, std::move(quantifiers), std::move(roles)};
}

SensitivityScorer::Mapping SensitivityScorer::map_context(std::string_view context) const {
    if (base_.has_context(context)) return {std::string(context), Polarity::None};
    const auto low = lower(context);
    for (const auto& [surface, polarity] : quantifiers_) {
        if (low.size() > surface.size() + 1 && low.compare(0, surface.size(), surface) == 0 &&
            low[surface.size()] == ' ') {
            auto base = capitalize_first(context.substr(surface.size() + 1));
            if (base_.has_context(base)) return {std::move(base), polarity};
        }
    }
    throw UnknownContextError("cannot map context '" + std::string(context) + "' to a bare backbone");
}

double SensitivityScorer::factor(const Mapping& m, std::string_view continuation) const {
    if (m.polarity == Polarity::None) return 1.0;
    auto it = roles_.find(m.base_context);
    if (it == roles_.end()) return 1.0;
    double sign = 0.0;
    if (continuation == it->second.typical) sign = 1.0;
    else if (continuation == it->second.atypical) sign = -1.0;
    if (m.polarity == Polarity::Few) sign = -sign;
    return 1.0 + lambda_ * kSensitivityBoost * sign;
}

double SensitivityScorer::normalizer(const Mapping& m) const {
    double z = base_.residual(m.base_context);
    for (const auto& [cont, p] : base_.continuations(m.base_context)) z += p * factor(m, cont);
    return z;
}

double SensitivityScorer::probability(std::string_view context, std::string_view continuation) const {
    const auto m = map_context(context);
    const double base = base_.listed(m.base_context, continuation).value_or(base_.floor(m.base_context));
    if (lambda_ == 0.0 || m.polarity == Polarity::None) return base;
    const bool listed = base_.listed(m.base_context, continuation).has_value();
    return base * (listed ? factor(m, continuation) : 1.0) / normalizer(m);
}

std::vector<TokenScore> SensitivityScorer::score(std::string_view context,
                                                 std::string_view continuation) const {
    const double p = probability(context, continuation);
    return {TokenScore{std::string(continuation), std::log(p), context.size(),
                       context.size() + continuation.size()}};
}

NextTokenDistribution SensitivityScorer::next_token_distribution(std::string_view context) const {
    const auto m = map_context(context);
    NextTokenDistribution dist;
    for (const auto& [cont, _] : base_.continuations(m.base_context))
        dist.entries.emplace_back(cont, std::log(probability(context, cont)));
    std::stable_sort(dist.entries.begin(), dist.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return dist;
}

ProbabilityTable synthesize_base_table(std::span<const BackboneGroup> groups, std::uint64_t seed) {
    ProbabilityTable table;
    for (const auto& g : groups) {
        std::mt19937_64 rng(seed ^ fnv1a64(g.group_id));
        double typ = draw_range(rng, 0.05, 0.6);
        double atyp = draw_range(rng, 0.005, 0.3);
        if (std::abs(typ - atyp) < 1e-3) atyp = typ / 2.0;
        auto bare = realize_text(std::nullopt, g.backbone, g.typical);
        table.set(bare.context, bare.continuation, typ);
        table.set(bare.context, " " + g.atypical, atyp);
    }
    return table;
}

}  // namespace quanteval
