#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "quanteval/cache.hpp"
#include "quanteval/corpus.hpp"
#include "quanteval/scoring.hpp"

namespace quanteval {

struct JobStats {
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
};

// Scores every item, consulting the cache first and storing fresh results. Up to
// `parallelism` backend calls run concurrently (OpenMP); records come back in input order.
// Failed items are collected and raised together as a JobError after the loop; successful
// items are already in the cache by then.
std::vector<SurprisalRecord> run_scoring_job(const ScorerBackend& backend, std::string_view model_id,
                                             std::span<const StimulusItem> items, ScoreCache& cache,
                                             int parallelism, JobStats* stats = nullptr);

namespace reference {

// Single-threaded loop with the same contract; kept as the oracle for the parallel runner.
std::vector<SurprisalRecord> run_scoring_job_serial(const ScorerBackend& backend,
                                                    std::string_view model_id,
                                                    std::span<const StimulusItem> items,
                                                    ScoreCache& cache, JobStats* stats = nullptr);

}  // namespace reference

}  // namespace quanteval
