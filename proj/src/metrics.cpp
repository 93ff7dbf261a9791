#include "quanteval/metrics.hpp"

#include <map>
#include <set>

#include "quanteval/errors.hpp"

namespace quanteval {

std::string_view to_string(MetricFamily f) {
    switch (f) {
        case MetricFamily::PriorMost: return "PRIOR_MOST";
        case MetricFamily::PriorFew: return "PRIOR_FEW";
        case MetricFamily::BaselineTyp: return "BASELINE_TYP";
        case MetricFamily::BaselineAtyp: return "BASELINE_ATYP";
        case MetricFamily::Exp1: return "EXP1";
        case MetricFamily::Exp1Typ: return "EXP1_TYP";
        case MetricFamily::Exp1Atyp: return "EXP1_ATYP";
        case MetricFamily::Exp2Most: return "EXP2_MOST";
        case MetricFamily::Exp2Few: return "EXP2_FEW";
    }
    return "";
}

MetricFamily metric_family_from_string(std::string_view s) {
    for (auto f : kAllFamilies)
        if (to_string(f) == s) return f;
    throw ArgumentError("unknown metric family '" + std::string(s) + "'");
}

namespace {

using RoleMap = std::map<WordRole, const SurprisalRecord*>;

struct GroupRecords {
    std::map<int, RoleMap> most;
    std::map<int, RoleMap> few;
    RoleMap bare;
};

struct RecordIndex {
    std::string model_id;
    std::map<std::string, GroupRecords> groups;
};

RecordIndex index_records(std::span<const SurprisalRecord> records) {
    if (records.empty()) throw IncompleteDataError("no records");
    RecordIndex idx;
    idx.model_id = records.front().model_id;
    for (const auto& r : records) {
        if (r.model_id != idx.model_id)
            throw ArgumentError("records mix models '" + idx.model_id + "' and '" + r.model_id + "'");
        auto& g = idx.groups[r.group_id];
        RoleMap* slot = nullptr;
        switch (r.polarity) {
            case Polarity::Most: slot = &g.most[r.quantifier_index]; break;
            case Polarity::Few: slot = &g.few[r.quantifier_index]; break;
            case Polarity::None: slot = &g.bare; break;
        }
        if (!slot->emplace(r.word_role, &r).second)
            throw ArgumentError("duplicate record for context '" + r.context + "' continuation '" +
                                r.continuation + "'");
    }
    return idx;
}

std::string_view role_tag(WordRole r) { return r == WordRole::Typical ? "typ" : "atyp"; }

std::string context_tag(Polarity p, int index) {
    switch (p) {
        case Polarity::Most: return "MBP[" + std::to_string(index) + "]";
        case Polarity::Few: return "FBP[" + std::to_string(index) + "]";
        case Polarity::None: return "BP";
    }
    return "BP";
}

const SurprisalRecord& require(const RoleMap& roles, WordRole role, const std::string& group_id,
                               Polarity p, int index) {
    auto it = roles.find(role);
    if (it != roles.end()) return *it->second;
    std::string ctx;
    if (!roles.empty()) ctx = " (context '" + roles.begin()->second->context + "')";
    throw IncompleteDataError("group '" + group_id + "': missing " + std::string(to_string(role)) +
                              " record for " + context_tag(p, index) + ctx);
}

const RoleMap& require_context(const std::map<int, RoleMap>& m, int index, const std::string& group_id,
                               Polarity p) {
    auto it = m.find(index);
    if (it == m.end())
        throw IncompleteDataError("group '" + group_id + "': missing records for " + context_tag(p, index));
    return it->second;
}

ComparisonOutcome compare(const std::string& group_id, std::string detail, const SurprisalRecord& lhs,
                          Relation rel, const SurprisalRecord& rhs, const MetricOptions& options) {
    ComparisonOutcome o;
    o.group_id = group_id;
    o.detail = std::move(detail);
    o.relation = rel;
    o.lhs_subwords = lhs.subword_count;
    o.rhs_subwords = rhs.subword_count;
    o.subword_mismatch = lhs.continuation == rhs.continuation && lhs.subword_count != rhs.subword_count;
    o.used_normalized = options.variant == SurprisalVariant::Normalized || o.subword_mismatch;
    o.lhs_surprisal = o.used_normalized ? lhs.surprisal_normalized : lhs.surprisal_summed;
    o.rhs_surprisal = o.used_normalized ? rhs.surprisal_normalized : rhs.surprisal_summed;
    o.tie = o.lhs_surprisal == o.rhs_surprisal;
    o.passed = !o.tie && (rel == Relation::Less ? o.lhs_surprisal < o.rhs_surprisal
                                                : o.lhs_surprisal > o.rhs_surprisal);
    return o;
}

std::string describe(WordRole lrole, Polarity lp, int li, Relation rel, WordRole rrole, Polarity rp, int ri) {
    return "S(" + std::string(role_tag(lrole)) + "|" + context_tag(lp, li) + ") " +
           (rel == Relation::Less ? "<" : ">") + " S(" + std::string(role_tag(rrole)) + "|" +
           context_tag(rp, ri) + ")";
}

// Accumulates outcomes and labelled sub-counts in first-seen label order.
class ResultBuilder {
public:
    ResultBuilder(std::string model_id, MetricFamily family) {
        result_.model_id = std::move(model_id);
        result_.family = family;
    }

    SubResult& slot(const std::string& label) {
        auto it = labels_.find(label);
        if (it == labels_.end()) {
            it = labels_.emplace(label, result_.breakdown.size()).first;
            result_.breakdown.push_back({label, 0, 0, 0.0});
        }
        return result_.breakdown[it->second];
    }

    void add(ComparisonOutcome o, const std::string& label) {
        auto& sub = slot(label);
        ++sub.denominator;
        if (o.passed) ++sub.numerator;
        ++result_.denominator;
        if (o.passed) ++result_.numerator;
        result_.outcomes.push_back(std::move(o));
    }

    // Breakdown-only tally; does not touch the headline counts.
    void add_sub(const std::string& label, bool passed) {
        auto& sub = slot(label);
        ++sub.denominator;
        if (passed) ++sub.numerator;
    }

    MetricResult finish() {
        if (result_.denominator == 0)
            throw IncompleteDataError("no comparisons available for " + std::string(to_string(result_.family)));
        result_.accuracy = static_cast<double>(result_.numerator) / static_cast<double>(result_.denominator);
        for (auto& sub : result_.breakdown)
            sub.accuracy = static_cast<double>(sub.numerator) / static_cast<double>(sub.denominator);
        return std::move(result_);
    }

private:
    MetricResult result_;
    std::map<std::string, std::size_t> labels_;
};

void require_bare(const GroupRecords& g, const std::string& group_id) {
    if (g.bare.empty())
        throw IncompleteDataError("group '" + group_id + "': missing bare-backbone records");
}

}  // namespace

std::pair<MetricResult, MetricResult> prior_accuracy(std::span<const SurprisalRecord> records,
                                                     const MetricOptions& options) {
    const auto idx = index_records(records);
    ResultBuilder most(idx.model_id, MetricFamily::PriorMost);
    ResultBuilder few(idx.model_id, MetricFamily::PriorFew);
    constexpr auto T = WordRole::Typical;
    constexpr auto A = WordRole::Atypical;
    for (const auto& [gid, g] : idx.groups) {
        for (const auto& [i, roles] : g.most) {
            const auto& typ = require(roles, T, gid, Polarity::Most, i);
            const auto& atyp = require(roles, A, gid, Polarity::Most, i);
            most.add(compare(gid, describe(T, Polarity::Most, i, Relation::Less, A, Polarity::Most, i), typ,
                             Relation::Less, atyp, options),
                     context_tag(Polarity::Most, i));
        }
        for (const auto& [i, roles] : g.few) {
            const auto& typ = require(roles, T, gid, Polarity::Few, i);
            const auto& atyp = require(roles, A, gid, Polarity::Few, i);
            few.add(compare(gid, describe(A, Polarity::Few, i, Relation::Less, T, Polarity::Few, i), atyp,
                            Relation::Less, typ, options),
                    context_tag(Polarity::Few, i));
        }
    }
    return {most.finish(), few.finish()};
}

std::pair<MetricResult, MetricResult> typicality_baseline(std::span<const SurprisalRecord> records,
                                                          const MetricOptions& options) {
    const auto idx = index_records(records);
    ResultBuilder typ_first(idx.model_id, MetricFamily::BaselineTyp);
    ResultBuilder atyp_first(idx.model_id, MetricFamily::BaselineAtyp);
    constexpr auto T = WordRole::Typical;
    constexpr auto A = WordRole::Atypical;
    for (const auto& [gid, g] : idx.groups) {
        require_bare(g, gid);
        const auto& typ = require(g.bare, T, gid, Polarity::None, 0);
        const auto& atyp = require(g.bare, A, gid, Polarity::None, 0);
        typ_first.add(compare(gid, describe(T, Polarity::None, 0, Relation::Less, A, Polarity::None, 0), typ,
                              Relation::Less, atyp, options),
                      "BP");
        atyp_first.add(compare(gid, describe(A, Polarity::None, 0, Relation::Less, T, Polarity::None, 0), atyp,
                               Relation::Less, typ, options),
                       "BP");
    }
    return {typ_first.finish(), atyp_first.finish()};
}

std::array<MetricResult, 3> exp1_accuracy(std::span<const SurprisalRecord> records,
                                          const MetricOptions& options) {
    const auto idx = index_records(records);
    ResultBuilder all(idx.model_id, MetricFamily::Exp1);
    ResultBuilder typ_only(idx.model_id, MetricFamily::Exp1Typ);
    ResultBuilder atyp_only(idx.model_id, MetricFamily::Exp1Atyp);
    constexpr auto T = WordRole::Typical;
    constexpr auto A = WordRole::Atypical;
    for (const auto& [gid, g] : idx.groups) {
        std::vector<std::pair<int, int>> pairs;
        if (options.pairing == Pairing::Index) {
            std::set<int> most_idx, few_idx;
            for (const auto& [i, _] : g.most) most_idx.insert(i);
            for (const auto& [i, _] : g.few) few_idx.insert(i);
            if (most_idx != few_idx)
                throw ConfigError("group '" + gid +
                                  "': index pairing impossible, most and few quantifier indices differ");
            for (int i : most_idx) pairs.emplace_back(i, i);
        } else {
            for (const auto& [i, _] : g.most)
                for (const auto& [j, __] : g.few) pairs.emplace_back(i, j);
        }
        for (auto [i, j] : pairs) {
            const auto& m = require_context(g.most, i, gid, Polarity::Most);
            const auto& f = require_context(g.few, j, gid, Polarity::Few);
            const std::string label = context_tag(Polarity::Most, i) + "/" + context_tag(Polarity::Few, j);
            auto typ = compare(gid, describe(T, Polarity::Most, i, Relation::Less, T, Polarity::Few, j),
                               require(m, T, gid, Polarity::Most, i), Relation::Less,
                               require(f, T, gid, Polarity::Few, j), options);
            auto atyp = compare(gid, describe(A, Polarity::Most, i, Relation::Greater, A, Polarity::Few, j),
                                require(m, A, gid, Polarity::Most, i), Relation::Greater,
                                require(f, A, gid, Polarity::Few, j), options);
            all.add(typ, label);
            all.add(atyp, label);
            typ_only.add(std::move(typ), label);
            atyp_only.add(std::move(atyp), label);
        }
    }
    return {all.finish(), typ_only.finish(), atyp_only.finish()};
}

std::pair<MetricResult, MetricResult> exp2_accuracy(std::span<const SurprisalRecord> records,
                                                    const MetricOptions& options) {
    const auto idx = index_records(records);
    ResultBuilder most(idx.model_id, MetricFamily::Exp2Most);
    ResultBuilder few(idx.model_id, MetricFamily::Exp2Few);
    constexpr auto T = WordRole::Typical;
    constexpr auto A = WordRole::Atypical;

    // Checks are labelled "typ" / "atyp"; in conjunctive mode the per-check tallies still
    // appear in the breakdown, next to the "both" tally that forms the headline number.
    auto run = [&](ResultBuilder& out, const std::string& gid, const GroupRecords& g, Polarity p,
                   const std::map<int, RoleMap>& contexts) {
        const Relation typ_rel = p == Polarity::Most ? Relation::Less : Relation::Greater;
        const Relation atyp_rel = p == Polarity::Most ? Relation::Greater : Relation::Less;
        for (const auto& [i, roles] : contexts) {
            require_bare(g, gid);
            auto typ = compare(gid, describe(T, p, i, typ_rel, T, Polarity::None, 0), require(roles, T, gid, p, i),
                               typ_rel, require(g.bare, T, gid, Polarity::None, 0), options);
            auto atyp = compare(gid, describe(A, p, i, atyp_rel, A, Polarity::None, 0),
                                require(roles, A, gid, p, i), atyp_rel,
                                require(g.bare, A, gid, Polarity::None, 0), options);
            if (options.exp2_mode == Exp2Mode::PerCheck) {
                out.add(std::move(typ), "typ");
                out.add(std::move(atyp), "atyp");
            } else {
                ComparisonOutcome both = typ;
                both.detail = typ.detail + " and " + atyp.detail;
                both.passed = typ.passed && atyp.passed;
                both.tie = typ.tie || atyp.tie;
                both.subword_mismatch = typ.subword_mismatch || atyp.subword_mismatch;
                both.used_normalized = typ.used_normalized || atyp.used_normalized;
                out.add(std::move(both), "both");
                out.add_sub("typ", typ.passed);
                out.add_sub("atyp", atyp.passed);
            }
        }
    };
    for (const auto& [gid, g] : idx.groups) {
        run(most, gid, g, Polarity::Most, g.most);
        run(few, gid, g, Polarity::Few, g.few);
    }
    return {most.finish(), few.finish()};
}

CritiqueDelta critique_delta(std::span<const SurprisalRecord> records, const MetricOptions& options) {
    auto [prior_most, prior_few] = prior_accuracy(records, options);
    auto [base_typ, base_atyp] = typicality_baseline(records, options);
    CritiqueDelta d;
    d.model_id = prior_most.model_id;
    d.prior_most = prior_most.accuracy;
    d.baseline_typ = base_typ.accuracy;
    d.delta_most = prior_most.accuracy - base_typ.accuracy;
    d.prior_few = prior_few.accuracy;
    d.baseline_atyp = base_atyp.accuracy;
    d.delta_few = prior_few.accuracy - base_atyp.accuracy;

    auto agreement = [](const MetricResult& prior, const MetricResult& baseline, long& agree) {
        std::map<std::string, bool> bare;
        for (const auto& o : baseline.outcomes) bare[o.group_id] = o.passed;
        agree = 0;
        for (const auto& o : prior.outcomes) {
            auto it = bare.find(o.group_id);
            if (it != bare.end() && it->second == o.passed) ++agree;
        }
        return static_cast<double>(agree) / static_cast<double>(prior.outcomes.size());
    };
    long agree_most = 0, agree_few = 0;
    d.agreement_most = agreement(prior_most, base_typ, agree_most);
    d.agreement_few = agreement(prior_few, base_atyp, agree_few);
    d.agreement = static_cast<double>(agree_most + agree_few) /
                  static_cast<double>(prior_most.outcomes.size() + prior_few.outcomes.size());
    return d;
}

MetricsBundle compute_all_metrics(std::span<const SurprisalRecord> records, const MetricOptions& options) {
    MetricsBundle b;
    auto [pm, pf] = prior_accuracy(records, options);
    auto [bt, ba] = typicality_baseline(records, options);
    auto e1 = exp1_accuracy(records, options);
    auto [e2m, e2f] = exp2_accuracy(records, options);
    b.results = {std::move(pm), std::move(pf), std::move(bt), std::move(ba), std::move(e1[0]),
                 std::move(e1[1]), std::move(e1[2]), std::move(e2m), std::move(e2f)};
    b.delta = critique_delta(records, options);
    for (const auto& r : b.results) {
        // EXP1 repeats the outcomes of EXP1_TYP and EXP1_ATYP.
        if (r.family == MetricFamily::Exp1Typ || r.family == MetricFamily::Exp1Atyp) continue;
        for (const auto& o : r.outcomes) {
            if (o.subword_mismatch)
                b.warnings.push_back({r.model_id, r.family, o.group_id, o.detail, o.lhs_subwords, o.rhs_subwords});
        }
    }
    return b;
}

double reversed_accuracy(const MetricResult& result) {
    if (result.outcomes.empty()) return 0.0;
    long reversed = 0;
    for (const auto& o : result.outcomes)
        if (!o.passed && !o.tie) ++reversed;
    return static_cast<double>(reversed) / static_cast<double>(result.outcomes.size());
}

}  // namespace quanteval
