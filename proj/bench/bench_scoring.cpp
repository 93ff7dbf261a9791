// Serial reference vs the OpenMP batch runner. The backend sleeps per call to stand in for
// network latency, which is where the parallel runner earns its keep.
#include <benchmark/benchmark.h>

#include <chrono>
#include <thread>

#include "quanteval/batch.hpp"
#include "quanteval/sensitivity.hpp"

using namespace quanteval;

namespace {

class LatencyBackend final : public ScorerBackend {
public:
    LatencyBackend(const ScorerBackend& inner, std::chrono::microseconds delay) : inner_(inner), delay_(delay) {}
    std::vector<TokenScore> score(std::string_view c, std::string_view k) const override {
        if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
        return inner_.score(c, k);
    }

private:
    const ScorerBackend& inner_;
    std::chrono::microseconds delay_;
};

struct Fixture {
    std::vector<BackboneGroup> groups = generate_synthetic_corpus(60, 11);
    std::vector<StimulusItem> items = expand_corpus(groups);
    SensitivityScorer scorer = SensitivityScorer::from_corpus(groups, synthesize_base_table(groups, 11), 1.0);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_Serial(benchmark::State& state) {
    const auto& f = fixture();
    LatencyBackend backend(f.scorer, std::chrono::microseconds(state.range(0)));
    for (auto _ : state) {
        ScoreCache cache;
        benchmark::DoNotOptimize(reference::run_scoring_job_serial(backend, "bench", f.items, cache));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(f.items.size()));
}

void BM_Parallel(benchmark::State& state) {
    const auto& f = fixture();
    LatencyBackend backend(f.scorer, std::chrono::microseconds(state.range(0)));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) {
        ScoreCache cache;
        benchmark::DoNotOptimize(run_scoring_job(backend, "bench", f.items, cache, threads));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(f.items.size()));
}

}  // namespace

BENCHMARK(BM_Serial)->Arg(0)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Parallel)
    ->ArgsProduct({{0, 200}, {2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
