#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "quanteval/batch.hpp"
#include "quanteval/cache.hpp"
#include "quanteval/cli.hpp"
#include "quanteval/corpus.hpp"
#include "quanteval/errors.hpp"

namespace quanteval {

namespace fs = std::filesystem;
using nlohmann::json;

Pairing pairing_from_string(std::string_view s) {
    if (s == "INDEX" || s == "index") return Pairing::Index;
    if (s == "ALL_PAIRS" || s == "all-pairs") return Pairing::AllPairs;
    throw ConfigError("unknown pairing mode '" + std::string(s) + "'");
}

Exp2Mode exp2_mode_from_string(std::string_view s) {
    if (s == "PER_CHECK" || s == "per-check") return Exp2Mode::PerCheck;
    if (s == "CONJUNCTIVE" || s == "conjunctive") return Exp2Mode::Conjunctive;
    throw ConfigError("unknown exp2 mode '" + std::string(s) + "'");
}

ResultFormat result_format_from_string(std::string_view s) {
    if (s == "csv" || s == "CSV") return ResultFormat::Csv;
    if (s == "json" || s == "JSON") return ResultFormat::Json;
    throw ConfigError("unknown format '" + std::string(s) + "'");
}

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

struct Figure {
    std::string_view file;
    std::string_view title;
    std::vector<MetricFamily> families;
};

const std::vector<Figure>& figures() {
    static const std::vector<Figure> f = {
        {"scaling_prior.svg", "Prior-work quantifier accuracy",
         {MetricFamily::PriorMost, MetricFamily::PriorFew}},
        {"scaling_baseline.svg", "Typicality baseline (no quantifier)",
         {MetricFamily::BaselineTyp, MetricFamily::BaselineAtyp}},
        {"scaling_exp1.svg", "Most vs. few quantifier, fixed critical word",
         {MetricFamily::Exp1, MetricFamily::Exp1Typ, MetricFamily::Exp1Atyp}},
        {"scaling_exp2.svg", "Quantified vs. bare backbone, fixed critical word",
         {MetricFamily::Exp2Most, MetricFamily::Exp2Few}},
    };
    return f;
}

std::string warning_line(const nlohmann::ordered_json& j) {
    return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

const ModelSpec* find_model(const RunConfig& config, std::string_view id) {
    for (const auto& m : config.models)
        if (m.model_id == id) return &m;
    return nullptr;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
    RunConfig c;
    c.base_dir = base_dir;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        auto path_field = [&](const char* key) {
            auto v = doc.at(key).get<std::string>();
            if (v.empty()) throw ConfigError(std::string(key) + " must be nonempty");
            return resolve(base_dir, v);
        };
        c.corpus_path = path_field("corpus_path");
        c.cache_path = path_field("cache_path");
        c.output_dir = path_field("output_dir");
        if (doc.contains("parallelism")) c.parallelism = doc.at("parallelism").get<int>();
        if (doc.contains("pairing_mode")) c.pairing_mode = pairing_from_string(doc.at("pairing_mode").get<std::string>());
        if (doc.contains("exp2_mode")) c.exp2_mode = exp2_mode_from_string(doc.at("exp2_mode").get<std::string>());
        for (const auto& m : doc.at("models")) c.models.push_back(model_spec_from_json(m));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (c.models.empty()) throw ConfigError("config lists no models");
    for (std::size_t i = 0; i < c.models.size(); ++i)
        for (std::size_t j = i + 1; j < c.models.size(); ++j)
            if (c.models[i].model_id == c.models[j].model_id)
                throw ConfigError("duplicate model_id '" + c.models[i].model_id + "'");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    auto base = path.parent_path();
    return parse_run_config(text, base.empty() ? fs::path(".") : base);
}

int cmd_validate(const fs::path& corpus_path, std::ostream& out, std::ostream& err) {
    std::string text;
    try {
        text = read_file(corpus_path);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    std::vector<BackboneGroup> groups;
    try {
        groups = parse_corpus_records(text);
    } catch (const ParseError& e) {
        out << "PARSE ERROR: " << e.what() << '\n';
        return kExitDataFailure;
    }
    const auto findings = validate_corpus(groups);
    if (findings.empty()) {
        out << "OK: " << groups.size() << " groups\n";
        return kExitOk;
    }
    for (const auto& f : findings) {
        out << "FINDING " << f.group_id << ": " << f.rule;
        if (!f.message.empty()) out << " (" << f.message << ")";
        out << '\n';
    }
    return kExitDataFailure;
}

EvalReport cmd_eval(const RunConfig& config, std::optional<ResultFormat> format, std::ostream& out,
                    std::ostream& err) {
    EvalReport report;
    std::vector<BackboneGroup> corpus;
    try {
        corpus = load_corpus_file(config.corpus_path);
    } catch (const ValidationError& e) {
        err << "error: corpus " << config.corpus_path.string() << ": " << e.what() << '\n';
        report.exit_code = kExitDataFailure;
        return report;
    } catch (const ParseError& e) {
        err << "error: corpus " << config.corpus_path.string() << ": " << e.what() << '\n';
        report.exit_code = kExitDataFailure;
        return report;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        report.exit_code = kExitUsage;
        return report;
    }
    if (corpus.empty()) {
        err << "error: corpus is empty\n";
        report.exit_code = kExitDataFailure;
        return report;
    }
    const auto items = expand_corpus(corpus);

    std::unique_ptr<ScoreCache> cache;
    try {
        fs::create_directories(config.output_dir);
        cache = std::make_unique<ScoreCache>(config.cache_path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        report.exit_code = kExitUsage;
        return report;
    }

    MetricOptions options;
    options.pairing = config.pairing_mode;
    options.exp2_mode = config.exp2_mode;

    std::vector<MetricResult> results;
    std::vector<CritiqueDelta> deltas;
    std::vector<ModelSpec> ok_specs;
    std::string warnings;

    for (const auto& spec : config.models) {
        ModelStatus status;
        status.model_id = spec.model_id;
        try {
            auto backend = make_backend(spec, corpus, config.base_dir);
            JobStats stats;
            auto records = run_scoring_job(*backend, spec.model_id, items, *cache, config.parallelism, &stats);
            status.backend_calls = stats.backend_calls;
            status.cache_hits = stats.cache_hits;
            status.records = records.size();
            auto bundle = compute_all_metrics(records, options);

            for (const auto& r : records) {
                if (r.boundary_shift == 0) continue;
                nlohmann::ordered_json w;
                w["kind"] = "boundary_shift";
                w["model_id"] = r.model_id;
                w["group_id"] = r.group_id;
                w["context"] = r.context;
                w["continuation"] = r.continuation;
                w["shift_bytes"] = r.boundary_shift;
                w["first_token"] = r.tokens.front().text;
                warnings += warning_line(w);
            }
            for (const auto& mw : bundle.warnings) {
                nlohmann::ordered_json w;
                w["kind"] = "subword_count_mismatch";
                w["model_id"] = mw.model_id;
                w["metric_family"] = to_string(mw.family);
                w["group_id"] = mw.group_id;
                w["detail"] = mw.detail;
                w["lhs_subwords"] = mw.lhs_subwords;
                w["rhs_subwords"] = mw.rhs_subwords;
                warnings += warning_line(w);
            }
            results.insert(results.end(), bundle.results.begin(), bundle.results.end());
            deltas.push_back(bundle.delta);
            ok_specs.push_back(spec);
            status.ok = true;
            status.message = "ok";
        } catch (const JobError& e) {
            status.message = e.what();
            status.records = 0;
        } catch (const std::exception& e) {
            status.message = e.what();
        }
        if (!status.ok) {
            nlohmann::ordered_json w;
            w["kind"] = "model_failed";
            w["model_id"] = spec.model_id;
            w["message"] = status.message;
            warnings += warning_line(w);
            report.exit_code = kExitDataFailure;
        }
        out << "model " << status.model_id << ": " << (status.ok ? "OK" : "FAILED") << " (records "
            << status.records << ", backend calls " << status.backend_calls << ", cache hits "
            << status.cache_hits << ")";
        if (!status.ok) out << ": " << status.message;
        out << '\n';
        report.models.push_back(std::move(status));
    }

    try {
        write_file(config.output_dir / "warnings.jsonl", warnings);
        if (!results.empty()) {
            if (!format || *format == ResultFormat::Csv)
                write_file(config.output_dir / "results.csv", emit_results(results, ResultFormat::Csv));
            if (!format || *format == ResultFormat::Json)
                write_file(config.output_dir / "results.json", emit_results(results, ResultFormat::Json));
            write_file(config.output_dir / "critique.json", emit_critique_json(deltas));
            const auto table = build_scaling_table(results, ok_specs);
            for (const auto& fig : figures())
                write_file(config.output_dir / fig.file, render_scaling_plot(table, fig.families, fig.title));
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        report.exit_code = kExitUsage;
    }
    return report;
}

int cmd_probe(const RunConfig& config, std::string_view model_id, std::string_view context,
              const std::vector<std::string>& words, std::ostream& out, std::ostream& err) {
    if (words.empty()) {
        err << "usage: probe needs at least one word\n";
        return kExitUsage;
    }
    const auto* spec = find_model(config, model_id);
    if (!spec) {
        err << "error: unknown model_id '" << model_id << "'\n";
        return kExitDataFailure;
    }
    std::vector<BackboneGroup> corpus;
    if (spec->backend_kind == BackendKind::Synthetic) {
        try {
            corpus = load_corpus_file(config.corpus_path);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
    }
    std::unique_ptr<ScorerBackend> backend;
    try {
        backend = make_backend(*spec, corpus, config.base_dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataFailure;
    }
    out << "word\tsurprisal_summed\tsurprisal_normalized\tsubwords\trank\n";
    int status = kExitOk;
    for (const auto& word : words) {
        try {
            const auto tokens = score_continuation(*backend, context, " " + word);
            std::string rank = "n/a";
            if (backend->has_distribution()) {
                try {
                    rank = continuation_rank(*backend, context, tokens.front().text).to_string();
                } catch (const Error&) {
                }
            }
            out << word << '\t' << format_fixed(surprisal_summed(tokens), 6) << '\t'
                << format_fixed(surprisal_normalized(tokens), 6) << '\t' << tokens.size() << '\t' << rank << '\n';
        } catch (const std::exception& e) {
            err << "error: " << word << ": " << e.what() << '\n';
            status = kExitDataFailure;
        }
    }
    return status;
}

int cmd_plot(const RunConfig& config, const fs::path& results_csv, const fs::path& output_svg,
             const std::vector<MetricFamily>& families, std::ostream& out, std::ostream& err) {
    if (families.empty()) {
        err << "usage: plot needs at least one metric family\n";
        return kExitUsage;
    }
    std::vector<MetricResult> results;
    try {
        results = parse_results_csv(read_file(results_csv));
    } catch (const ParseError& e) {
        err << "error: " << results_csv.string() << ": " << e.what() << '\n';
        return kExitDataFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        const auto table = build_scaling_table(results, config.models);
        write_file(output_svg, render_scaling_plot(table, families));
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    out << "wrote " << output_svg.string() << '\n';
    return kExitOk;
}

namespace {

std::vector<std::string> split_commas(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    for (const auto& s : in) {
        std::size_t pos = 0;
        while (pos <= s.size()) {
            auto end = s.find(',', pos);
            if (end == std::string::npos) end = s.size();
            if (end > pos) out.push_back(s.substr(pos, end - pos));
            pos = end + 1;
        }
    }
    return out;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantifier comprehension evaluation harness"};
    app.require_subcommand(1);

    std::string config_path, corpus_path, output_dir, pairing, exp2_mode, format;
    int parallelism = 0;

    auto* validate = app.add_subcommand("validate", "Validate a corpus file");
    validate->add_option("--corpus,corpus", corpus_path, "Corpus file (JSON lines)")->required();

    auto* eval = app.add_subcommand("eval", "Score all models and write results, warnings and plots");
    eval->add_option("--config", config_path, "Run configuration file")->required();
    eval->add_option("--corpus", corpus_path, "Override corpus_path");
    eval->add_option("--output-dir", output_dir, "Override output_dir");
    eval->add_option("--parallelism", parallelism, "Override parallelism")->check(CLI::PositiveNumber);
    eval->add_option("--pairing", pairing, "Most/few pairing")->check(CLI::IsMember({"index", "all-pairs"}));
    eval->add_option("--exp2-mode", exp2_mode, "Quantified-vs-bare counting")
        ->check(CLI::IsMember({"per-check", "conjunctive"}));
    eval->add_option("--format", format, "Write only this results format")->check(CLI::IsMember({"csv", "json"}));

    std::string model_id, context;
    std::vector<std::string> words;
    auto* probe = app.add_subcommand("probe", "Print surprisal and rank of candidate critical words");
    probe->add_option("--config", config_path, "Run configuration file")->required();
    probe->add_option("--model", model_id, "model_id from the config")->required();
    probe->add_option("--context", context, "Context text, e.g. \"Most postmen carry\"")->required();
    probe->add_option("words", words, "Candidate words (space or comma separated)");

    std::string results_path, svg_path, families_arg;
    auto* plot = app.add_subcommand("plot", "Re-render a scaling plot from a results CSV");
    plot->add_option("--config", config_path, "Run configuration file")->required();
    plot->add_option("--results", results_path, "results.csv")->required();
    plot->add_option("--output", svg_path, "Output SVG")->required();
    plot->add_option("--families", families_arg, "Comma-separated metric families")
        ->default_val("PRIOR_MOST,PRIOR_FEW,BASELINE_TYP,BASELINE_ATYP,EXP1,EXP2_MOST,EXP2_FEW");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(corpus_path, out, err);

        RunConfig config;
        try {
            config = load_run_config(config_path);
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }

        if (eval->parsed()) {
            if (!corpus_path.empty()) config.corpus_path = corpus_path;
            if (!output_dir.empty()) config.output_dir = output_dir;
            if (parallelism > 0) config.parallelism = parallelism;
            if (!pairing.empty()) config.pairing_mode = pairing_from_string(pairing);
            if (!exp2_mode.empty()) config.exp2_mode = exp2_mode_from_string(exp2_mode);
            std::optional<ResultFormat> fmt;
            if (!format.empty()) fmt = result_format_from_string(format);
            return cmd_eval(config, fmt, out, err).exit_code;
        }
        if (probe->parsed()) return cmd_probe(config, model_id, context, split_commas(words), out, err);
        if (plot->parsed()) {
            std::vector<MetricFamily> families;
            try {
                for (const auto& f : split_commas({families_arg})) families.push_back(metric_family_from_string(f));
            } catch (const ArgumentError& e) {
                err << "error: " << e.what() << '\n';
                return kExitUsage;
            }
            return cmd_plot(config, results_path, svg_path, families, out, err);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataFailure;
    }
    return kExitUsage;
}

}  // namespace quanteval
