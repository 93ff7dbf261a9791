#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quanteval/corpus.hpp"
#include "quanteval/table.hpp"

namespace quanteval {

// Relative strength of the quantifier effect at |lambda| = 1; keeps every factor positive.
inline constexpr double kSensitivityBoost = 0.5;

// Parametric oracle built on a table of bare-backbone distributions. A quantified context is
// mapped back to its bare context and the typical/atypical probabilities are reweighted:
//
//   MOST:  p'(w) = p(w) * (1 + lambda * boost * s(w)) / Z,   s(typ) = +1, s(atyp) = -1
//   FEW:   same with s inverted
//
// Z renormalizes over the listed continuations plus the residual mass. lambda = 0 returns the
// bare distribution unchanged, giving a quantifier-blind model.
class SensitivityScorer final : public ScorerBackend {
public:
    struct CriticalWords {
        std::string typical;   // continuation text, e.g. " mail"
        std::string atypical;
    };

    SensitivityScorer(ProbabilityTable base_table, double lambda,
                      std::map<std::string, Polarity, std::less<>> quantifiers,
                      std::map<std::string, CriticalWords, std::less<>> roles);

    // Quantifier lexicon and word roles are taken from the corpus groups.
    static SensitivityScorer from_corpus(std::span<const BackboneGroup> groups,
                                         ProbabilityTable base_table, double lambda);

    std::vector<TokenScore> score(std::string_view context,
                                  std::string_view continuation) const override;
    bool has_distribution() const override { return true; }
    NextTokenDistribution next_token_distribution(std::string_view context) const override;

    double lambda() const { return lambda_; }
    const ProbabilityTable& base_table() const { return base_; }

    struct Mapping {
        std::string base_context;
        Polarity polarity = Polarity::None;
    };
    // Strips a known quantifier prefix (case-insensitive, longest match first).
    Mapping map_context(std::string_view context) const;

    double probability(std::string_view context, std::string_view continuation) const;

private:
    double factor(const Mapping& m, std::string_view continuation) const;
    double normalizer(const Mapping& m) const;

    ProbabilityTable base_;
    double lambda_;
    std::vector<std::pair<std::string, Polarity>> quantifiers_;  // lowercase, longest first
    std::map<std::string, CriticalWords, std::less<>> roles_;
};

// Bare-context table for synthetic runs: per group p(typ) and p(atyp) drawn from the seed, with
// the atypical word occasionally more probable than the typical one.
ProbabilityTable synthesize_base_table(std::span<const BackboneGroup> groups, std::uint64_t seed);

}  // namespace quanteval
