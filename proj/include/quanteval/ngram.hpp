#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "quanteval/scoring.hpp"

namespace quanteval {

// Add-alpha smoothed n-gram model over whitespace tokens. Each training line is one sentence,
// left-padded with order-1 "<s>" markers; the markers never enter the vocabulary.
//
//   p(w | h) = (c(h, w) + alpha) / (c(h) + alpha * V)
//
// Histories never seen in training fall back to the uniform 1/V.
class NgramModel {
public:
    static constexpr std::string_view kBos = "<s>";

    NgramModel(int order, double alpha);

    int order() const { return order_; }
    double alpha() const { return alpha_; }
    std::size_t vocabulary_size() const { return vocab_.size(); }
    const std::vector<std::string>& vocabulary() const { return vocab_; }
    bool in_vocabulary(std::string_view word) const;

    // History is the full left context; only the last order-1 tokens are used.
    double probability(std::span<const std::string> history, std::string_view word) const;
    // Probabilities over the vocabulary in vocabulary order.
    std::vector<double> distribution(std::span<const std::string> history) const;

private:
    friend NgramModel ngram_train(std::string_view, int, double);

    std::string history_key(std::span<const std::string> history) const;

    int order_;
    double alpha_;
    std::vector<std::string> vocab_;  // sorted
    std::unordered_map<std::string, std::unordered_map<std::string, long>> counts_;
    std::unordered_map<std::string, long> history_totals_;
};

NgramModel ngram_train(std::string_view corpus_text, int order, double smoothing_alpha);

std::vector<std::string> whitespace_tokens(std::string_view text);

// Scores each whitespace-delimited word of the continuation as one token whose span includes
// its leading whitespace (" mail"). Out-of-vocabulary words are rejected.
class NgramScorer final : public ScorerBackend {
public:
    explicit NgramScorer(NgramModel model);

    std::vector<TokenScore> score(std::string_view context,
                                  std::string_view continuation) const override;
    bool has_distribution() const override { return true; }
    // Entries are rendered with a leading space, matching continuation tokens.
    NextTokenDistribution next_token_distribution(std::string_view context) const override;

    const NgramModel& model() const { return model_; }

private:
    NgramModel model_;
};

}  // namespace quanteval
