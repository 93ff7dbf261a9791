#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "quanteval/metrics.hpp"
#include "quanteval/model_spec.hpp"
#include "quanteval/report.hpp"

namespace quanteval {

// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path cache_path;
    std::filesystem::path output_dir;
    int parallelism = 4;
    Pairing pairing_mode = Pairing::Index;
    Exp2Mode exp2_mode = Exp2Mode::PerCheck;
    std::vector<ModelSpec> models;
    std::filesystem::path base_dir;  // directory of the config file; model paths resolve here
};

Pairing pairing_from_string(std::string_view s);
Exp2Mode exp2_mode_from_string(std::string_view s);
ResultFormat result_format_from_string(std::string_view s);

// Relative paths resolve against the config file's directory. Throws ConfigError.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct ModelStatus {
    std::string model_id;
    bool ok = false;
    std::string message;
    std::size_t records = 0;
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
};

struct EvalReport {
    int exit_code = kExitOk;
    std::vector<ModelStatus> models;
};

int cmd_validate(const std::filesystem::path& corpus_path, std::ostream& out, std::ostream& err);

// Writes results.{csv,json}, critique.json, warnings.jsonl and scaling_*.svg into output_dir.
// `format` restricts the results file to one format.
EvalReport cmd_eval(const RunConfig& config, std::optional<ResultFormat> format, std::ostream& out,
                    std::ostream& err);

int cmd_probe(const RunConfig& config, std::string_view model_id, std::string_view context,
              const std::vector<std::string>& words, std::ostream& out, std::ostream& err);

int cmd_plot(const RunConfig& config, const std::filesystem::path& results_csv,
             const std::filesystem::path& output_svg, const std::vector<MetricFamily>& families,
             std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace quanteval
