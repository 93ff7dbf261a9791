#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "quanteval/scoring.hpp"

namespace quanteval {

// Completions-with-echo wire protocol. Scoring requests send the full prompt with
// max_tokens = 0, echo = true, logprobs = 1 and read the echoed prompt tokens from
// choices[0].logprobs.{tokens, token_logprobs, text_offset}. text_offset values are byte
// offsets into the prompt (identical to character offsets for ASCII text).
nlohmann::json build_completion_request(std::string_view model_name, std::string_view prompt);

// Request for the top-k next-token alternatives after `context`.
nlohmann::json build_top_k_request(std::string_view model_name, std::string_view context, int k);

// Tokens whose span starts at or after the end of the context. A token straddling the
// boundary raises BoundaryError.
std::vector<TokenScore> remote_extract_continuation_scores(const nlohmann::json& response,
                                                           std::string_view context,
                                                           std::string_view continuation);

// Same extraction, but a straddling token is kept: the boundary moves left to its start, so
// the first returned token also covers the tail of the context. SurprisalRecord::boundary_shift
// reports the number of bytes moved.
std::vector<TokenScore> extract_with_boundary_fallback(const nlohmann::json& response,
                                                       std::string_view context,
                                                       std::string_view continuation);

// top_logprobs[0] of a top-k response, sorted by descending logprob.
NextTokenDistribution parse_top_k_response(const nlohmann::json& response);

struct RemoteConfig {
    std::string endpoint_url;  // scheme://host[:port][/prefix]; requests go to prefix + /v1/completions
    std::string model_name;
    std::optional<std::string> api_key;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_base{250};
    int top_k = 5;
};

struct HttpReply {
    int status = 0;  // 0 on connection failure
    std::string body;
    std::string error;
};

class RemoteScorer final : public ScorerBackend {
public:
    explicit RemoteScorer(RemoteConfig config);

    std::vector<TokenScore> score(std::string_view context,
                                  std::string_view continuation) const override;
    bool has_distribution() const override { return config_.top_k > 0; }
    NextTokenDistribution next_token_distribution(std::string_view context) const override;

    const RemoteConfig& config() const { return config_; }

    // 429, 5xx and connection failures are retried with exponential backoff; other non-2xx
    // statuses fail immediately.
    nlohmann::json post_with_retry(const nlohmann::json& request) const;

private:
    HttpReply post(const std::string& body) const;

    RemoteConfig config_;
    std::string base_url_;
    std::string path_;
};

}  // namespace quanteval
