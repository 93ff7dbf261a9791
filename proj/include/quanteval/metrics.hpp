#pragma once

#include <array>
#include <string>
#include <string_view>
#include <span>
#include <utility>
#include <vector>

#include "quanteval/scoring.hpp"

namespace quanteval {

enum class MetricFamily {
    PriorMost,
    PriorFew,
    BaselineTyp,
    BaselineAtyp,
    Exp1,
    Exp1Typ,
    Exp1Atyp,
    Exp2Most,
    Exp2Few,
};

inline constexpr std::array<MetricFamily, 9> kAllFamilies = {
    MetricFamily::PriorMost, MetricFamily::PriorFew, MetricFamily::BaselineTyp,
    MetricFamily::BaselineAtyp, MetricFamily::Exp1, MetricFamily::Exp1Typ,
    MetricFamily::Exp1Atyp, MetricFamily::Exp2Most, MetricFamily::Exp2Few};

std::string_view to_string(MetricFamily f);
MetricFamily metric_family_from_string(std::string_view s);

enum class Pairing { Index, AllPairs };
enum class Exp2Mode { PerCheck, Conjunctive };
enum class SurprisalVariant { Normalized, Summed };

enum class Relation { Less, Greater };

// One strict-inequality judgment: passed iff lhs <relation> rhs. Ties never pass.
struct ComparisonOutcome {
    std::string group_id;
    std::string detail;
    double lhs_surprisal = 0.0;
    double rhs_surprisal = 0.0;
    Relation relation = Relation::Less;
    bool passed = false;
    bool tie = false;
    bool used_normalized = true;
    std::size_t lhs_subwords = 0;
    std::size_t rhs_subwords = 0;
    // Both sides score the same continuation text but the tokenizer split it differently.
    bool subword_mismatch = false;

    bool operator==(const ComparisonOutcome&) const = default;
};

struct SubResult {
    std::string label;
    long numerator = 0;
    long denominator = 0;
    double accuracy = 0.0;

    bool operator==(const SubResult&) const = default;
};

struct MetricResult {
    std::string model_id;
    MetricFamily family = MetricFamily::Exp1;
    long numerator = 0;
    long denominator = 0;
    double accuracy = 0.0;
    std::vector<SubResult> breakdown;
    std::vector<ComparisonOutcome> outcomes;

    bool operator==(const MetricResult&) const = default;
};

struct MetricOptions {
    Pairing pairing = Pairing::Index;
    Exp2Mode exp2_mode = Exp2Mode::PerCheck;
    SurprisalVariant variant = SurprisalVariant::Normalized;
};

// typ vs atyp under a fixed quantified context: S(typ|MBP) < S(atyp|MBP) for MOST and
// S(atyp|FBP) < S(typ|FBP) for FEW.
std::pair<MetricResult, MetricResult> prior_accuracy(std::span<const SurprisalRecord> records,
                                                     const MetricOptions& options = {});

// Same comparison on bare backbones: S(typ|BP) < S(atyp|BP), and the reverse.
std::pair<MetricResult, MetricResult> typicality_baseline(std::span<const SurprisalRecord> records,
                                                          const MetricOptions& options = {});

// Fixed critical word, most vs few quantifier:
//   S(typ|MBP) < S(typ|FBP)     S(atyp|MBP) > S(atyp|FBP)
// Returns {EXP1, EXP1_TYP, EXP1_ATYP}.
std::array<MetricResult, 3> exp1_accuracy(std::span<const SurprisalRecord> records,
                                          const MetricOptions& options = {});

// Fixed critical word, quantified vs bare:
//   MOST: S(typ|MBP) < S(typ|BP)   S(atyp|MBP) > S(atyp|BP)
//   FEW:  S(typ|FBP) > S(typ|BP)   S(atyp|FBP) < S(atyp|BP)
std::pair<MetricResult, MetricResult> exp2_accuracy(std::span<const SurprisalRecord> records,
                                                    const MetricOptions& options = {});

struct CritiqueDelta {
    std::string model_id;
    double prior_most = 0.0;
    double baseline_typ = 0.0;
    double delta_most = 0.0;
    double prior_few = 0.0;
    double baseline_atyp = 0.0;
    double delta_few = 0.0;
    // Fraction of prior judgments that match the bare-backbone judgment of the same group.
    double agreement = 0.0;
    double agreement_most = 0.0;
    double agreement_few = 0.0;
};

CritiqueDelta critique_delta(std::span<const SurprisalRecord> records, const MetricOptions& options = {});

struct MetricWarning {
    std::string model_id;
    MetricFamily family;
    std::string group_id;
    std::string detail;
    std::size_t lhs_subwords;
    std::size_t rhs_subwords;
};

struct MetricsBundle {
    std::vector<MetricResult> results;  // kAllFamilies order
    CritiqueDelta delta;
    std::vector<MetricWarning> warnings;
};

MetricsBundle compute_all_metrics(std::span<const SurprisalRecord> records,
                                  const MetricOptions& options = {});

// Fraction of outcomes where the opposite strict inequality holds.
double reversed_accuracy(const MetricResult& result);

}  // namespace quanteval
