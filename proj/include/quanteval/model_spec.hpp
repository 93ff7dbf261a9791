#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "quanteval/corpus.hpp"
#include "quanteval/scoring.hpp"

namespace quanteval {

enum class BackendKind { Remote, Table, Ngram, Synthetic };

std::string_view to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view s);

struct ModelSpec {
    std::string model_id;
    BackendKind backend_kind = BackendKind::Table;
    std::string endpoint_url;  // REMOTE
    std::string model_name;
    std::uint64_t parameter_count = 0;
    std::string auth_env_var;  // REMOTE; the credential itself is never stored

    // REMOTE tuning
    int timeout_ms = 30000;
    int max_retries = 3;
    int retry_base_ms = 250;
    int top_k = 5;
    // TABLE: probability table file. SYNTHETIC: optional base table (otherwise synthesized).
    std::string table_path;
    // NGRAM
    std::string training_text_path;
    int ngram_order = 2;
    double ngram_alpha = 1.0;
    // SYNTHETIC
    double lambda = 0.0;
    std::uint64_t seed = 0;
};

// Throws ConfigError on missing or inconsistent fields.
ModelSpec model_spec_from_json(const nlohmann::json& obj);
nlohmann::json to_json(const ModelSpec& spec);

// Relative file paths in the spec resolve against base_dir. SYNTHETIC backends derive their
// lexicon (and, without table_path, their base table) from the corpus.
std::unique_ptr<ScorerBackend> make_backend(const ModelSpec& spec, std::span<const BackboneGroup> corpus,
                                            const std::filesystem::path& base_dir);

}  // namespace quanteval
