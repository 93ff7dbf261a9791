#include "quanteval/batch.hpp"

#include <atomic>
#include <optional>

#include "quanteval/errors.hpp"

namespace quanteval {

namespace {

struct ItemOutcome {
    std::optional<SurprisalRecord> record;
    std::string error;
};

// Shared by both runners so the parallel path differs only in scheduling.
ItemOutcome score_item(const ScorerBackend& backend, std::string_view model_id,
                       const StimulusItem& item, ScoreCache& cache, std::atomic<std::size_t>& calls,
                       std::atomic<std::size_t>& hits) {
    ItemOutcome out;
    try {
        auto cached = cache.lookup(model_id, item.context, item.continuation);
        std::vector<TokenScore> tokens;
        if (cached) {
            hits.fetch_add(1, std::memory_order_relaxed);
            tokens = std::move(*cached);
        } else {
            calls.fetch_add(1, std::memory_order_relaxed);
            tokens = score_continuation(backend, item.context, item.continuation);
            cache.store(model_id, item.context, item.continuation, tokens);
        }
        out.record = make_record(model_id, item, std::move(tokens));
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<SurprisalRecord> collect(std::vector<ItemOutcome>& outcomes) {
    std::vector<FailedItem> failed;
    std::vector<SurprisalRecord> records;
    records.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].record) records.push_back(std::move(*outcomes[i].record));
        else failed.push_back({i, std::move(outcomes[i].error)});
    }
    if (!failed.empty()) throw JobError(std::move(failed));
    return records;
}

}  // namespace

std::vector<SurprisalRecord> run_scoring_job(const ScorerBackend& backend, std::string_view model_id,
                                             std::span<const StimulusItem> items, ScoreCache& cache,
                                             int parallelism, JobStats* stats) {
    if (parallelism < 1) throw ArgumentError("parallelism must be >= 1");
    std::vector<ItemOutcome> outcomes(items.size());
    std::atomic<std::size_t> calls{0};
    std::atomic<std::size_t> hits{0};
    const auto n = static_cast<std::ptrdiff_t>(items.size());

#pragma omp parallel for num_threads(parallelism) schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        outcomes[idx] = score_item(backend, model_id, items[idx], cache, calls, hits);
    }

    if (stats) *stats = {calls.load(), hits.load()};
    return collect(outcomes);
}

namespace reference {

std::vector<SurprisalRecord> run_scoring_job_serial(const ScorerBackend& backend,
                                                    std::string_view model_id,
                                                    std::span<const StimulusItem> items,
                                                    ScoreCache& cache, JobStats* stats) {
    std::vector<ItemOutcome> outcomes;
    outcomes.reserve(items.size());
    std::atomic<std::size_t> calls{0};
    std::atomic<std::size_t> hits{0};
    for (const auto& item : items) outcomes.push_back(score_item(backend, model_id, item, cache, calls, hits));
    if (stats) *stats = {calls.load(), hits.load()};
    return collect(outcomes);
}

}  // namespace reference

}  // namespace quanteval
