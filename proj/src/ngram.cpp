#include "quanteval/ngram.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "quanteval/errors.hpp"

namespace quanteval {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

NgramModel::NgramModel(int order, double alpha) : order_(order), alpha_(alpha) {
    if (order < 1) throw ArgumentError("n-gram order must be >= 1");
    if (!(alpha > 0.0)) throw ArgumentError("smoothing alpha must be > 0");
}

bool NgramModel::in_vocabulary(std::string_view word) const {
    return std::binary_search(vocab_.begin(), vocab_.end(), word);
}

std::string NgramModel::history_key(std::span<const std::string> history) const {
    const auto need = static_cast<std::size_t>(order_ - 1);
    std::string key;
    for (std::size_t i = 0; i < need; ++i) {
        // Missing positions on the left are sentence-start padding.
        if (i > 0) key += ' ';
        const std::size_t from_end = need - i;
        if (from_end > history.size()) key += kBos;
        else key += history[history.size() - from_end];
    }
    return key;
}

double NgramModel::probability(std::span<const std::string> history, std::string_view word) const {
    if (!in_vocabulary(word))
        throw ArgumentError("word '" + std::string(word) + "' is out of vocabulary");
    const double v = static_cast<double>(vocab_.size());
    const auto key = history_key(history);
    auto total = history_totals_.find(key);
    if (total == history_totals_.end()) return 1.0 / v;
    const auto& row = counts_.at(key);
    auto c = row.find(std::string(word));
    const double count = c == row.end() ? 0.0 : static_cast<double>(c->second);
    return (count + alpha_) / (static_cast<double>(total->second) + alpha_ * v);
}

std::vector<double> NgramModel::distribution(std::span<const std::string> history) const {
    std::vector<double> out;
    out.reserve(vocab_.size());
    for (const auto& w : vocab_) out.push_back(probability(history, w));
    return out;
}

NgramModel ngram_train(std::string_view corpus_text, int order, double smoothing_alpha) {
    NgramModel model(order, smoothing_alpha);
    std::set<std::string> vocab;
    std::size_t pos = 0;
    while (pos <= corpus_text.size()) {
        auto end = corpus_text.find('\n', pos);
        if (end == std::string_view::npos) end = corpus_text.size();
        auto words = whitespace_tokens(corpus_text.substr(pos, end - pos));
        pos = end + 1;
        if (words.empty()) continue;
        for (std::size_t i = 0; i < words.size(); ++i) {
            const auto key = model.history_key(std::span<const std::string>(words.data(), i));
            ++model.counts_[key][words[i]];
            ++model.history_totals_[key];
            vocab.insert(words[i]);
        }
    }
    if (vocab.empty()) throw ArgumentError("n-gram training text has no tokens");
    model.vocab_.assign(vocab.begin(), vocab.end());
    return model;
}

NgramScorer::NgramScorer(NgramModel model) : model_(std::move(model)) {}

std::vector<TokenScore> NgramScorer::score(std::string_view context,
                                           std::string_view continuation) const {
    auto history = whitespace_tokens(context);
    std::vector<TokenScore> out;
    const std::size_t base = context.size();
    std::size_t i = 0;
    while (i < continuation.size()) {
        std::size_t start = i;
        while (i < continuation.size() && is_space(continuation[i])) ++i;
        std::size_t word_begin = i;
        while (i < continuation.size() && !is_space(continuation[i])) ++i;
        if (i == word_begin) {
            // Trailing whitespace joins the previous token.
            if (out.empty()) throw ArgumentError("continuation has no words");
            out.back().char_end = base + i;
            out.back().text += std::string(continuation.substr(start, i - start));
            break;
        }
        std::string word(continuation.substr(word_begin, i - word_begin));
        const double p = model_.probability(history, word);
        out.push_back({std::string(continuation.substr(start, i - start)), std::log(p), base + start,
                       base + i});
        history.push_back(std::move(word));
    }
    return out;
}

NextTokenDistribution NgramScorer::next_token_distribution(std::string_view context) const {
    const auto history = whitespace_tokens(context);
    const auto probs = model_.distribution(history);
    NextTokenDistribution dist;
    dist.exhaustive = true;
    dist.entries.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        dist.entries.emplace_back(" " + model_.vocabulary()[i], std::log(probs[i]));
    std::stable_sort(dist.entries.begin(), dist.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return dist;
}

}  // namespace quanteval
