#include "quanteval/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "quanteval/errors.hpp"
#include "quanteval/util.hpp"

namespace quanteval {

NextTokenDistribution ScorerBackend::next_token_distribution(std::string_view) const {
    throw CapabilityError("backend does not expose a next-token distribution");
}

std::size_t validate_token_scores(std::span<const TokenScore> tokens, std::string_view context,
                                  std::string_view continuation) {
    const std::size_t boundary = context.size();
    const std::size_t total = context.size() + continuation.size();
    if (tokens.empty()) throw ProtocolError("no tokens returned for continuation");
    if (tokens.front().char_start > boundary)
        throw ProtocolError("tokens do not cover the start of the continuation");
    std::size_t cursor = tokens.front().char_start;
    for (const auto& t : tokens) {
        if (!std::isfinite(t.logprob)) throw ProtocolError("non-finite logprob for '" + t.text + "'");
        if (t.logprob > 0.0)
            throw ProtocolError("positive logprob " + std::to_string(t.logprob) + " for '" + t.text + "'");
        if (t.char_start != cursor || t.char_end <= t.char_start)
            throw ProtocolError("token offsets are not contiguous and ordered");
        cursor = t.char_end;
    }
    if (cursor != total) throw ProtocolError("tokens do not end at the end of the continuation");
    return boundary - tokens.front().char_start;
}

std::vector<TokenScore> score_continuation(const ScorerBackend& backend, std::string_view context,
                                           std::string_view continuation) {
    if (continuation.empty()) throw ArgumentError("continuation must be nonempty");
    std::vector<TokenScore> tokens;
    try {
        tokens = backend.score(context, continuation);
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScoringError(context_hash(context), e.what());
    }
    validate_token_scores(tokens, context, continuation);
    return tokens;
}

double surprisal_summed(std::span<const TokenScore> tokens) {
    if (tokens.empty()) throw ArgumentError("surprisal of an empty token list");
    double sum = 0.0;
    for (const auto& t : tokens) sum -= t.logprob;
    return sum + 0.0;  // -0.0 -> 0.0
}

double surprisal_normalized(std::span<const TokenScore> tokens) {
    return surprisal_summed(tokens) / static_cast<double>(tokens.size());
}

std::string ContinuationRank::to_string() const {
    return rank ? std::to_string(*rank) : "beyond-" + std::to_string(k);
}

ContinuationRank continuation_rank(const ScorerBackend& backend, std::string_view context,
                                   std::string_view first_token) {
    if (!backend.has_distribution())
        throw CapabilityError("backend does not expose a next-token distribution");
    const auto dist = backend.next_token_distribution(context);
    ContinuationRank out;
    out.k = dist.entries.size();
    auto it = std::find_if(dist.entries.begin(), dist.entries.end(),
                           [&](const auto& e) { return e.first == first_token; });
    if (it == dist.entries.end()) {
        if (dist.exhaustive)
            throw ArgumentError("token '" + std::string(first_token) + "' is not in the vocabulary");
        return out;
    }
    const double lp = it->second;
    int above = 0;
    for (const auto& e : dist.entries)
        if (e.second > lp) ++above;
    out.rank = above + 1;
    return out;
}

SurprisalRecord make_record(std::string_view model_id, const StimulusItem& item,
                            std::vector<TokenScore> tokens) {
    SurprisalRecord r;
    r.model_id = std::string(model_id);
    r.group_id = item.group_id;
    r.polarity = item.polarity;
    r.quantifier_index = item.quantifier_index;
    r.word_role = item.word_role;
    r.context = item.context;
    r.continuation = item.continuation;
    r.boundary_shift = validate_token_scores(tokens, item.context, item.continuation);
    r.subword_count = tokens.size();
    r.surprisal_summed = surprisal_summed(tokens);
    r.surprisal_normalized = surprisal_normalized(tokens);
    r.tokens = std::move(tokens);
    return r;
}

}  // namespace quanteval
