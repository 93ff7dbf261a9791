#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "doctest.h"
#include "quanteval/batch.hpp"
#include "quanteval/cache.hpp"
#include "quanteval/errors.hpp"
#include "quanteval/scoring.hpp"
#include "quanteval/sensitivity.hpp"
#include "quanteval/table.hpp"
#include "quanteval/util.hpp"
#include "support.hpp"

using namespace quanteval;

namespace {

std::vector<TokenScore> tokens_of(std::initializer_list<double> lps) {
    std::vector<TokenScore> out;
    std::size_t pos = 0;
    for (double lp : lps) {
        out.push_back({"t", lp, pos, pos + 1});
        ++pos;
    }
    return out;
}

// Backend returning whatever tokens it was given, for contract tests.
class FixedBackend final : public ScorerBackend {
public:
    explicit FixedBackend(std::vector<TokenScore> t) : tokens_(std::move(t)) {}
    std::vector<TokenScore> score(std::string_view, std::string_view) const override { return tokens_; }

private:
    std::vector<TokenScore> tokens_;
};

class ThrowingBackend final : public ScorerBackend {
public:
    std::vector<TokenScore> score(std::string_view, std::string_view) const override {
        throw TransportError("HTTP 503", 503, true);
    }
};

// Fails on one context, delegates otherwise.
class FlakyBackend final : public ScorerBackend {
public:
    FlakyBackend(const ScorerBackend& inner, std::string bad) : inner_(inner), bad_(std::move(bad)) {}
    std::vector<TokenScore> score(std::string_view c, std::string_view k) const override {
        if (c == bad_) throw TransportError("HTTP 500", 500, true);
        return inner_.score(c, k);
    }

private:
    const ScorerBackend& inner_;
    std::string bad_;
};

// Slow enough that the parallel runner really interleaves completions.
class JitterBackend final : public ScorerBackend {
public:
    explicit JitterBackend(const ScorerBackend& inner) : inner_(inner) {}
    std::vector<TokenScore> score(std::string_view c, std::string_view k) const override {
        std::this_thread::sleep_for(std::chrono::microseconds(fnv1a64(c) % 200));
        return inner_.score(c, k);
    }

private:
    const ScorerBackend& inner_;
};

std::string serialize(const std::vector<SurprisalRecord>& records) {
    std::string s;
    char buf[64];
    for (const auto& r : records) {
        s += r.model_id + "|" + r.group_id + "|" + std::string(to_string(r.polarity)) + "|" +
             std::to_string(r.quantifier_index) + "|" + std::string(to_string(r.word_role)) + "|" + r.context +
             "|" + r.continuation + "|" + std::to_string(r.subword_count);
        std::snprintf(buf, sizeof buf, "|%a|%a", r.surprisal_summed, r.surprisal_normalized);
        s += buf;
        for (const auto& t : r.tokens) {
            std::snprintf(buf, sizeof buf, "|%a", t.logprob);
            s += "|" + t.text + buf + ":" + std::to_string(t.char_start) + "-" + std::to_string(t.char_end);
        }
        s += "\n";
    }
    return s;
}

}  // namespace

TEST_CASE("surprisal: worked examples") {
    CHECK(surprisal_summed(tokens_of({-1.0, -3.0})) == 4.0);
    CHECK(surprisal_normalized(tokens_of({-1.0, -3.0})) == 2.0);
    CHECK(surprisal_summed(tokens_of({0.0})) == 0.0);
    CHECK_FALSE(std::signbit(surprisal_summed(tokens_of({0.0}))));
    CHECK(surprisal_summed(tokens_of({std::log(0.8)})) == doctest::Approx(0.2231435513142097).epsilon(1e-12));
    CHECK(surprisal_normalized(tokens_of({-0.5, -0.5, -0.5, -0.5})) == 0.5);
    CHECK_THROWS_AS(surprisal_summed({}), ArgumentError);
    CHECK_THROWS_AS(surprisal_normalized({}), ArgumentError);
}

TEST_CASE("property: summed equals N times normalized") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + draw_index(rng, 12);
        std::vector<TokenScore> toks;
        for (std::size_t i = 0; i < n; ++i) toks.push_back({"t", -30.0 * draw_unit(rng), i, i + 1});
        const double s = surprisal_summed(toks), m = surprisal_normalized(toks);
        CHECK(std::abs(s - static_cast<double>(n) * m) <= 1e-9);
        CHECK(s >= 0.0);
        if (n == 1) CHECK(s == m);
    }
}

TEST_CASE("property: single-token surprisal is antitone in probability") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const double p1 = draw_range(rng, 1e-9, 1.0), p2 = draw_range(rng, 1e-9, 1.0);
        if (p1 == p2) continue;
        const double s1 = surprisal_summed(tokens_of({std::log(p1)}));
        const double s2 = surprisal_summed(tokens_of({std::log(p2)}));
        CHECK((p1 < p2) == (s1 > s2));
    }
}

TEST_CASE("score_continuation: table oracle") {
    ProbabilityTable t;
    t.set("Most postmen carry", " mail", 0.8);
    t.set("Most postmen carry", " letters", 0.2);
    TableScorer scorer(t);
    auto toks = score_continuation(scorer, "Most postmen carry", " mail");
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].logprob == doctest::Approx(-0.22314355131420976).epsilon(1e-12));
    CHECK(toks[0].text == " mail");
    CHECK(toks[0].char_start == 18);
    CHECK(toks[0].char_end == 23);

    ProbabilityTable certain;
    certain.set("Postmen carry", " mail", 1.0);
    CHECK(score_continuation(TableScorer(certain), "Postmen carry", " mail")[0].logprob == 0.0);
    CHECK_THROWS_AS(score_continuation(scorer, "Most postmen carry", ""), ArgumentError);
}

TEST_CASE("score_continuation: contract violations are protocol errors") {
    const std::string ctx = "Most postmen carry", cont = " mail";
    auto ok = std::vector<TokenScore>{{" mail", -0.1, 18, 23}};
    CHECK_NOTHROW(score_continuation(FixedBackend(ok), ctx, cont));

    auto positive = ok;
    positive[0].logprob = 0.5;
    CHECK_THROWS_AS(score_continuation(FixedBackend(positive), ctx, cont), ProtocolError);
    auto nan = ok;
    nan[0].logprob = std::nan("");
    CHECK_THROWS_AS(score_continuation(FixedBackend(nan), ctx, cont), ProtocolError);
    CHECK_THROWS_AS(score_continuation(FixedBackend({}), ctx, cont), ProtocolError);
    CHECK_THROWS_AS(score_continuation(FixedBackend({{" mai", -0.1, 18, 22}}), ctx, cont), ProtocolError);
    CHECK_THROWS_AS(score_continuation(FixedBackend({{"ail", -0.1, 20, 23}}), ctx, cont), ProtocolError);
    CHECK_THROWS_AS(score_continuation(FixedBackend({{" ma", -0.1, 18, 21}, {"il", -0.1, 22, 23}}), ctx, cont),
                    ProtocolError);
    // A token reaching back into the context is allowed and reported as a shift.
    CHECK(validate_token_scores(std::vector<TokenScore>{{"ry mail", -1.0, 16, 23}}, ctx, cont) == 2);
}

TEST_CASE("score_continuation: backend failures carry the context hash") {
    try {
        score_continuation(ThrowingBackend(), "Most postmen carry", " mail");
        FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
        CHECK(e.context_hash() == context_hash("Most postmen carry"));
        CHECK(e.context_hash().size() == 16);
        CHECK(std::string(e.what()).find("503") != std::string::npos);
    }
}

TEST_CASE("continuation_rank") {
    ProbabilityTable t;
    t.set("Postmen carry", " mail", 0.5);
    t.set("Postmen carry", " letters", 0.2);
    t.set("Postmen carry", " bags", 0.1);
    t.set("Postmen carry", " parcels", 0.1);
    t.set("Postmen carry", " oil", 0.05);
    TableScorer scorer(t);
    CHECK(continuation_rank(scorer, "Postmen carry", " mail").rank == 1);
    CHECK(continuation_rank(scorer, "Postmen carry", " bags").rank == 3);
    CHECK(continuation_rank(scorer, "Postmen carry", " parcels").rank == 3);  // tie shares the rank
    CHECK(continuation_rank(scorer, "Postmen carry", " oil").rank == 5);
    const auto absent = continuation_rank(scorer, "Postmen carry", " fish");
    CHECK(absent.beyond_k());
    CHECK(absent.k == 5);
    CHECK(absent.to_string() == "beyond-5");
    CHECK(continuation_rank(scorer, "Postmen carry", " mail").to_string() == "1");

    // Third-largest of five entries.
    ProbabilityTable five;
    five.set("Postmen carry", " letters", 0.3);
    five.set("Postmen carry", " parcels", 0.25);
    five.set("Postmen carry", " mail", 0.2);
    five.set("Postmen carry", " bags", 0.15);
    five.set("Postmen carry", " oil", 0.1);
    CHECK(continuation_rank(TableScorer(five), "Postmen carry", " mail").rank == 3);

    CHECK_THROWS_AS(continuation_rank(FixedBackend({}), "Postmen carry", " mail"), CapabilityError);
}

TEST_CASE("cache: round trip through the file") {
    qtest::TempDir dir("cache");
    const auto path = dir.path() / "sub" / "cache.jsonl";
    const std::vector<TokenScore> toks = {{" ma", -0.1234567890123456789, 18, 21}, {"il", -2.5e-7, 21, 23}};
    {
        ScoreCache cache(path, [] { return std::string("2026-01-01T00:00:00Z"); });
        CHECK_FALSE(cache.lookup("m", "Most postmen carry", " mail"));
        cache.store("m", "Most postmen carry", " mail", toks);
        CHECK(cache.lookup("m", "Most postmen carry", " mail") == toks);
        CHECK_FALSE(cache.lookup("m2", "Most postmen carry", " mail"));
        CHECK_FALSE(cache.lookup("m", "Most postmen carry", " mai"));
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto obj = nlohmann::json::parse(line);
    CHECK(obj.at("model_id") == "m");
    CHECK(obj.at("context") == "Most postmen carry");
    CHECK(obj.at("continuation") == " mail");
    CHECK(obj.at("timestamp") == "2026-01-01T00:00:00Z");
    CHECK(obj.at("tokens").size() == 2);
    CHECK(obj.at("tokens")[0].at("char_start") == 18);

    ScoreCache reopened(path);
    CHECK(reopened.size() == 1);
    CHECK(reopened.lookup("m", "Most postmen carry", " mail") == toks);
}

TEST_CASE("cache: torn trailing line is skipped") {
    qtest::TempDir dir("cache-torn");
    const auto path = dir.path() / "cache.jsonl";
    {
        ScoreCache cache(path);
        cache.store("m", "A", " b", {{" b", -1.0, 1, 3}});
    }
    std::ofstream(path, std::ios::app) << R"({"model_id":"m","context":"A","contin)";
    ScoreCache cache(path);
    CHECK(cache.size() == 1);
    CHECK(cache.skipped_lines() == 1);
}

TEST_CASE("cache: concurrent readers and writers") {
    qtest::TempDir dir("cache-mt");
    ScoreCache cache(dir.path() / "cache.jsonl");
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 200; ++i) {
                const auto ctx = "ctx" + std::to_string(t) + "-" + std::to_string(i);
                cache.store("m", ctx, " w", {{" w", -0.5, ctx.size(), ctx.size() + 2}});
                auto hit = cache.lookup("m", ctx, " w");
                CHECK(hit.has_value());
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(cache.size() == 1600);
    ScoreCache reopened(dir.path() / "cache.jsonl");
    CHECK(reopened.size() == 1600);
    CHECK(reopened.skipped_lines() == 0);
}

TEST_CASE("batch: cold then warm cache") {
    auto groups = std::vector{qtest::table_a_group()};
    auto items = expand_corpus(groups);
    items.resize(6);
    TableScorer table(qtest::table_a());
    qtest::CountingBackend counting(table);
    ScoreCache cache;

    JobStats stats;
    auto cold = run_scoring_job(counting, "m", items, cache, 4, &stats);
    CHECK(cold.size() == 6);
    CHECK(counting.calls() == 6);
    CHECK(stats.backend_calls == 6);
    CHECK(stats.cache_hits == 0);

    auto warm = run_scoring_job(counting, "m", items, cache, 4, &stats);
    CHECK(counting.calls() == 6);
    CHECK(stats.backend_calls == 0);
    CHECK(stats.cache_hits == 6);
    CHECK(warm == cold);

    CHECK_THROWS_AS(run_scoring_job(counting, "m", items, cache, 0), ArgumentError);
}

TEST_CASE("batch: ten items, ten calls") {
    const auto groups = generate_synthetic_corpus(1, 7);
    const auto items = expand_corpus(groups);
    REQUIRE(items.size() == 10);
    auto scorer = SensitivityScorer::from_corpus(groups, synthesize_base_table(groups, 1), 1.0);
    qtest::CountingBackend counting(scorer);
    ScoreCache cache;
    CHECK(run_scoring_job(counting, "m", items, cache, 3).size() == 10);
    CHECK(counting.calls() == 10);
    run_scoring_job(counting, "m", items, cache, 3);
    CHECK(counting.calls() == 10);
}

TEST_CASE("batch: parallel runner matches the serial reference on 1200 items") {
    const auto groups = generate_synthetic_corpus(120, 8);
    const auto items = expand_corpus(groups);
    auto scorer = SensitivityScorer::from_corpus(groups, synthesize_base_table(groups, 8), 0.5);
    JitterBackend slow(scorer);

    ScoreCache c1, c8, cs;
    const auto p1 = run_scoring_job(slow, "m", items, c1, 1);
    const auto p8 = run_scoring_job(slow, "m", items, c8, 8);
    const auto ref = reference::run_scoring_job_serial(slow, "m", items, cs);
    CHECK(serialize(p1) == serialize(p8));
    CHECK(serialize(ref) == serialize(p8));
    for (std::size_t i = 0; i < items.size(); ++i) {
        REQUIRE(p8[i].context == items[i].context);
        REQUIRE(p8[i].continuation == items[i].continuation);
    }
}

TEST_CASE("batch: permuting items permutes records") {
    const auto groups = generate_synthetic_corpus(10, 4);
    auto items = expand_corpus(groups);
    auto scorer = SensitivityScorer::from_corpus(groups, synthesize_base_table(groups, 4), 1.0);
    ScoreCache a, b;
    const auto base = run_scoring_job(scorer, "m", items, a, 4);
    std::vector<std::size_t> perm(items.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::mt19937_64 rng(3);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[draw_index(rng, i)]);
    std::vector<StimulusItem> shuffled;
    for (auto p : perm) shuffled.push_back(items[p]);
    const auto out = run_scoring_job(scorer, "m", shuffled, b, 4);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(out[i] == base[perm[i]]);
}

TEST_CASE("batch: failures are collected and successes cached") {
    auto groups = std::vector{qtest::table_a_group()};
    const auto items = expand_corpus(groups);
    TableScorer table(qtest::table_a());
    FlakyBackend flaky(table, "Few postmen carry");
    ScoreCache cache;
    for (int par : {1, 4}) {
        CAPTURE(par);
        try {
            run_scoring_job(flaky, "m", items, cache, par);
            FAIL("expected JobError");
        } catch (const JobError& e) {
            REQUIRE(e.failed().size() == 2);
            CHECK(e.failed()[0].index == 2);
            CHECK(e.failed()[1].index == 3);
            CHECK(std::string(e.what()).find("2 item(s) failed") != std::string::npos);
        }
        CHECK(cache.size() == 4);
    }
    CHECK_THROWS_AS(reference::run_scoring_job_serial(flaky, "m", items, cache), JobError);

    // Once the backend recovers only the failed items are sent.
    qtest::CountingBackend counting(table);
    JobStats stats;
    CHECK(run_scoring_job(counting, "m", items, cache, 2, &stats).size() == 6);
    CHECK(stats.backend_calls == 2);
    CHECK(stats.cache_hits == 4);
}

TEST_CASE("make_record") {
    StimulusItem item{"g", Polarity::Most, 1, "almost all", WordRole::Atypical, "Almost all postmen carry", " oil"};
    auto r = make_record("m", item, {{" o", -1.0, 24, 26}, {"il", -2.0, 26, 28}});
    CHECK(r.subword_count == 2);
    CHECK(r.surprisal_summed == 3.0);
    CHECK(r.surprisal_normalized == 1.5);
    CHECK(r.boundary_shift == 0);
    CHECK(r.quantifier_index == 1);
    CHECK(r.word_role == WordRole::Atypical);
}
