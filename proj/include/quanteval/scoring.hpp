#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "quanteval/corpus.hpp"

namespace quanteval {

// One scored subword. Offsets are byte offsets into context + continuation.
struct TokenScore {
    std::string text;
    double logprob = 0.0;  // natural log
    std::size_t char_start = 0;
    std::size_t char_end = 0;

    bool operator==(const TokenScore&) const = default;
};

// Next-token distribution, sorted by descending logprob. When not exhaustive only the
// listed entries are visible (top-k).
struct NextTokenDistribution {
    std::vector<std::pair<std::string, double>> entries;
    bool exhaustive = false;
};

class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;

    // Token scores covering exactly the continuation span of context + continuation.
    virtual std::vector<TokenScore> score(std::string_view context,
                                          std::string_view continuation) const = 0;

    virtual bool has_distribution() const { return false; }
    virtual NextTokenDistribution next_token_distribution(std::string_view context) const;
};

// Checks the token contract: contiguous, ordered, ending at the end of the continuation, all
// logprobs finite and <= 0. The first token may start before the continuation only when a
// boundary fallback moved it there; the returned value is that shift in bytes.
std::size_t validate_token_scores(std::span<const TokenScore> tokens, std::string_view context,
                                  std::string_view continuation);

// Calls the backend and validates its answer. Backend failures other than protocol violations
// are rethrown as ScoringError carrying the context hash.
std::vector<TokenScore> score_continuation(const ScorerBackend& backend, std::string_view context,
                                           std::string_view continuation);

double surprisal_summed(std::span<const TokenScore> tokens);
double surprisal_normalized(std::span<const TokenScore> tokens);

struct ContinuationRank {
    std::optional<int> rank;  // 1-based; empty when beyond the visible top-k
    std::size_t k = 0;        // visible entries

    bool beyond_k() const { return !rank.has_value(); }
    std::string to_string() const;
};

// Competition ranking: 1 + number of entries with strictly larger probability.
ContinuationRank continuation_rank(const ScorerBackend& backend, std::string_view context,
                                   std::string_view first_token);

struct SurprisalRecord {
    std::string model_id;
    std::string group_id;
    Polarity polarity = Polarity::None;
    int quantifier_index = 0;
    WordRole word_role = WordRole::Typical;
    std::string context;
    std::string continuation;
    std::size_t subword_count = 0;
    double surprisal_summed = 0.0;
    double surprisal_normalized = 0.0;
    std::size_t boundary_shift = 0;  // bytes of context folded into the first token
    std::vector<TokenScore> tokens;

    bool operator==(const SurprisalRecord&) const = default;
};

SurprisalRecord make_record(std::string_view model_id, const StimulusItem& item,
                            std::vector<TokenScore> tokens);

}  // namespace quanteval
