#include <regex>

#include "doctest.h"
#include "quanteval/batch.hpp"
#include "quanteval/errors.hpp"
#include "quanteval/report.hpp"
#include "quanteval/sensitivity.hpp"
#include "quanteval/table.hpp"
#include "support.hpp"

using namespace quanteval;

namespace {

MetricResult result(std::string model, MetricFamily f, long num, long den) {
    MetricResult r;
    r.model_id = std::move(model);
    r.family = f;
    r.numerator = num;
    r.denominator = den;
    r.accuracy = static_cast<double>(num) / static_cast<double>(den);
    return r;
}

ModelSpec spec(std::string id, std::uint64_t params) {
    ModelSpec s;
    s.model_id = std::move(id);
    s.backend_kind = BackendKind::Synthetic;
    s.parameter_count = params;
    return s;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

std::vector<double> polyline_xs(const std::string& svg) {
    std::smatch m;
    std::vector<double> xs;
    if (!std::regex_search(svg, m, std::regex(R"(class="series-line"[^>]*points="([^"]*)\")"))) return xs;
    const std::string pts = m[1];
    std::regex pair(R"(([0-9.]+),([0-9.]+))");
    for (auto it = std::sregex_iterator(pts.begin(), pts.end(), pair); it != std::sregex_iterator(); ++it)
        xs.push_back(std::stod((*it)[1]));
    return xs;
}

}  // namespace

TEST_CASE("csv: formatting contract") {
    const std::vector r = {result("m1", MetricFamily::Exp1, 3, 4)};
    CHECK(emit_results(r, ResultFormat::Csv) ==
          "model_id,metric_family,numerator,denominator,accuracy\nm1,EXP1,3,4,0.750000\n");
    const std::vector third = {result("m,2", MetricFamily::PriorFew, 1, 3)};
    CHECK(emit_results(third, ResultFormat::Csv).find("\"m,2\",PRIOR_FEW,1,3,0.333333\n") != std::string::npos);
    CHECK_THROWS_AS(emit_results({}, ResultFormat::Csv), ArgumentError);
    CHECK_THROWS_AS(emit_results({}, ResultFormat::Json), ArgumentError);
    CHECK(format_fixed(-0.0000001, 6) == "0.000000");
    CHECK(format_fixed(1.0, 6) == "1.000000");
}

TEST_CASE("csv: two models times nine families") {
    std::vector<MetricResult> rs;
    for (const char* m : {"a", "b"})
        for (auto f : kAllFamilies) rs.push_back(result(m, f, 1, 2));
    const auto csv = emit_results(rs, ResultFormat::Csv);
    CHECK(count(csv, "\n") == 19);
    CHECK(csv == emit_results(rs, ResultFormat::Csv));
    const auto back = parse_results_csv(csv);
    REQUIRE(back.size() == 18);
    CHECK(back[9].model_id == "b");
    CHECK(back[9].family == MetricFamily::PriorMost);
    CHECK(back[9].accuracy == 0.5);
    CHECK_THROWS_AS(parse_results_csv("bad,header\n"), ParseError);
    CHECK_THROWS_AS(parse_results_csv("model_id,metric_family,numerator,denominator,accuracy\nm,EXP9,1,2,0.5\n"),
                    ParseError);
}

TEST_CASE("json: round trip from a real run") {
    const auto groups = generate_synthetic_corpus(6, 3);
    auto scorer = SensitivityScorer::from_corpus(groups, synthesize_base_table(groups, 3), 0.5);
    ScoreCache cache;
    const auto records = run_scoring_job(scorer, "synthetic-0.5", expand_corpus(groups), cache, 2);
    const auto bundle = compute_all_metrics(records);
    const auto text = emit_results(bundle.results, ResultFormat::Json);
    CHECK(text == emit_results(bundle.results, ResultFormat::Json));
    const auto back = parse_results_json(text);
    REQUIRE(back.size() == bundle.results.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].numerator == bundle.results[i].numerator);
        CHECK(back[i].denominator == bundle.results[i].denominator);
        CHECK(back[i].accuracy == bundle.results[i].accuracy);
        CHECK(back[i] == bundle.results[i]);
    }
    CHECK_THROWS_AS(parse_results_json("{\"results\": [{}]}"), ValidationError);
    CHECK_THROWS_AS(parse_results_json("not json"), ValidationError);
}

TEST_CASE("critique json") {
    CritiqueDelta d;
    d.model_id = "m";
    d.prior_most = 1.0;
    d.delta_few = 0.25;
    const auto doc = nlohmann::json::parse(emit_critique_json(std::vector{d}));
    CHECK(doc.at("critique").at(0).at("model_id") == "m");
    CHECK(doc.at("critique").at(0).at("delta_few") == 0.25);
}

TEST_CASE("scaling table: ordering and errors") {
    std::vector rs = {result("big", MetricFamily::Exp1, 1, 2), result("small", MetricFamily::Exp1, 1, 4),
                      result("small", MetricFamily::Exp2Most, 1, 1)};
    const std::vector specs = {spec("big", 1300000000), spec("small", 125000000)};
    const auto t = build_scaling_table(rs, specs);
    REQUIRE(t.size() == 2);
    CHECK(t[0].model_id == "small");
    CHECK(t[1].model_id == "big");
    CHECK(t[0].accuracy.at(MetricFamily::Exp1) == 0.25);
    CHECK(t[0].accuracy.size() == 2);

    const std::vector tied = {spec("b", 5), spec("a", 5)};
    std::vector tr = {result("b", MetricFamily::Exp1, 1, 1), result("a", MetricFamily::Exp1, 1, 1)};
    const auto tt = build_scaling_table(tr, tied);
    CHECK(tt[0].model_id == "a");

    CHECK_THROWS_AS(build_scaling_table(rs, std::vector{spec("big", 1)}), ConfigError);
    CHECK_THROWS_AS(build_scaling_table(rs, std::vector{spec("big", 1), spec("big", 2), spec("small", 3)}),
                    ConfigError);
    rs.push_back(result("big", MetricFamily::Exp1, 0, 2));
    CHECK_THROWS_AS(build_scaling_table(rs, specs), ConfigError);
}

TEST_CASE("scaling table: synthetic lambda sweep is monotone") {
    const auto groups = generate_synthetic_corpus(20, 21);
    const auto base = synthesize_base_table(groups, 21);
    std::vector<MetricResult> rs;
    std::vector<ModelSpec> specs;
    const double lambdas[] = {0.0, 0.5, 1.0};
    for (int i = 0; i < 3; ++i) {
        const std::string id = "lambda-" + std::to_string(i);
        auto scorer = SensitivityScorer::from_corpus(groups, base, lambdas[i]);
        ScoreCache cache;
        const auto b = compute_all_metrics(run_scoring_job(scorer, id, expand_corpus(groups), cache, 2));
        rs.insert(rs.end(), b.results.begin(), b.results.end());
        specs.push_back(spec(id, static_cast<std::uint64_t>(i + 1)));
    }
    const auto t = build_scaling_table(rs, specs);
    REQUIRE(t.size() == 3);
    CHECK(t[0].accuracy.at(MetricFamily::Exp1) == 0.0);
    CHECK(t[0].accuracy.at(MetricFamily::Exp1) <= t[1].accuracy.at(MetricFamily::Exp1));
    CHECK(t[1].accuracy.at(MetricFamily::Exp1) <= t[2].accuracy.at(MetricFamily::Exp1));
    CHECK(t[2].accuracy.at(MetricFamily::Exp1) == 1.0);
}

TEST_CASE("plot: single point has one marker and no polyline") {
    ScalingPoint p{"m", 1000000, {{MetricFamily::Exp1, 0.5}}};
    const std::vector families = {MetricFamily::Exp1};
    const auto svg = render_scaling_plot(std::vector{p}, families);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
    CHECK(count(svg, "class=\"marker\"") == 1);
    CHECK(count(svg, "<polyline") == 0);
    CHECK(svg == render_scaling_plot(std::vector{p}, families));
    CHECK(svg.find(">Accuracy<") != std::string::npos);
    CHECK(svg.find("Parameters (log scale)") != std::string::npos);
    CHECK(svg.find(">EXP1<") != std::string::npos);
}

TEST_CASE("plot: four models give one log-spaced polyline") {
    std::vector<ScalingPoint> t;
    const std::uint64_t params[] = {1000000, 10000000, 100000000, 1000000000};
    for (int i = 0; i < 4; ++i)
        t.push_back({"m" + std::to_string(i), params[i], {{MetricFamily::Exp2Most, 0.2 * i}}});
    const auto svg = render_scaling_plot(t, std::vector{MetricFamily::Exp2Most});
    CHECK(count(svg, "<polyline") == 1);
    CHECK(count(svg, "class=\"marker\"") == 4);
    const auto xs = polyline_xs(svg);
    REQUIRE(xs.size() == 4);
    const double step = xs[1] - xs[0];
    CHECK(step > 0);
    CHECK(xs[2] - xs[1] == doctest::Approx(step).epsilon(1e-3));
    CHECK(xs[3] - xs[2] == doctest::Approx(step).epsilon(1e-3));
    CHECK(svg.find(">1M<") != std::string::npos);
    CHECK(svg.find(">1B<") != std::string::npos);
    CHECK(svg.find(">100M<") != std::string::npos);
}

TEST_CASE("plot: one series per selected family, missing values skipped") {
    std::vector<ScalingPoint> t = {{"a", 10, {{MetricFamily::PriorMost, 1.0}, {MetricFamily::PriorFew, 0.5}}},
                                   {"b", 1000, {{MetricFamily::PriorMost, 0.0}}}};
    const auto svg = render_scaling_plot(t, std::vector{MetricFamily::PriorMost, MetricFamily::PriorFew});
    CHECK(count(svg, "class=\"series\"") == 2);
    CHECK(count(svg, "<polyline") == 1);
    CHECK(count(svg, "class=\"marker\"") == 3);
    CHECK(count(svg, "class=\"legend-swatch\"") == 2);
    CHECK_THROWS_AS(render_scaling_plot({}, std::vector{MetricFamily::Exp1}), ArgumentError);
    CHECK_THROWS_AS(render_scaling_plot(t, std::vector<MetricFamily>{}), ArgumentError);

    // Title text is escaped.
    CHECK(render_scaling_plot(t, std::vector{MetricFamily::PriorMost}, "a<b & c").find("a&lt;b &amp; c") !=
          std::string::npos);
}
