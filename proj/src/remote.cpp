#include "quanteval/remote.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "quanteval/errors.hpp"

#include "httplib.h"

namespace quanteval {

using nlohmann::json;

json build_completion_request(std::string_view model_name, std::string_view prompt) {
    return {{"model", model_name}, {"prompt", prompt}, {"max_tokens", 0}, {"echo", true}, {"logprobs", 1}};
}

json build_top_k_request(std::string_view model_name, std::string_view context, int k) {
    return {{"model", model_name}, {"prompt", context}, {"max_tokens", 1}, {"echo", false}, {"logprobs", k}};
}

namespace {

struct EchoedToken {
    std::string text;
    std::optional<double> logprob;
    std::size_t start;
    std::size_t end;
};

const json& logprobs_block(const json& response) {
    try {
        return response.at("choices").at(0).at("logprobs");
    } catch (const json::exception&) {
        throw ProtocolError("response lacks choices[0].logprobs");
    }
}

std::vector<EchoedToken> echoed_tokens(const json& response, std::size_t prompt_size) {
    const auto& lp = logprobs_block(response);
    std::vector<EchoedToken> out;
    try {
        const auto& tokens = lp.at("tokens");
        const auto& logprobs = lp.at("token_logprobs");
        const auto& offsets = lp.at("text_offset");
        if (tokens.size() != logprobs.size() || tokens.size() != offsets.size())
            throw ProtocolError("tokens, token_logprobs and text_offset differ in length");
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            EchoedToken t;
            t.text = tokens[i].get<std::string>();
            if (!logprobs[i].is_null()) t.logprob = logprobs[i].get<double>();
            const auto off = offsets[i].get<long long>();
            if (off < 0) throw ProtocolError("negative text_offset");
            t.start = static_cast<std::size_t>(off);
            out.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed logprobs block: ") + e.what());
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].end = i + 1 < out.size() ? out[i + 1].start : prompt_size;
        if (out[i].end < out[i].start || out[i].end > prompt_size)
            throw ProtocolError("text_offset values are not ordered within the prompt");
    }
    return out;
}

std::vector<TokenScore> extract(const json& response, std::string_view context,
                                std::string_view continuation, bool allow_shift) {
    const std::size_t boundary = context.size();
    const auto tokens = echoed_tokens(response, context.size() + continuation.size());
    std::vector<TokenScore> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.end <= boundary || t.start == t.end) continue;
        if (t.start < boundary && !allow_shift) throw BoundaryError(i, t.start, boundary);
        if (!t.logprob) throw ProtocolError("continuation token '" + t.text + "' has no logprob");
        out.push_back({t.text, *t.logprob, t.start, t.end});
    }
    if (out.empty()) throw ProtocolError("response has no tokens covering the continuation");
    return out;
}

}  // namespace

std::vector<TokenScore> remote_extract_continuation_scores(const json& response,
                                                           std::string_view context,
                                                           std::string_view continuation) {
    return extract(response, context, continuation, false);
}

std::vector<TokenScore> extract_with_boundary_fallback(const json& response, std::string_view context,
                                                       std::string_view continuation) {
    return extract(response, context, continuation, true);
}

NextTokenDistribution parse_top_k_response(const json& response) {
    const auto& lp = logprobs_block(response);
    NextTokenDistribution dist;
    try {
        for (const auto& [tok, v] : lp.at("top_logprobs").at(0).items())
            dist.entries.emplace_back(tok, v.get<double>());
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed top_logprobs: ") + e.what());
    }
    std::stable_sort(dist.entries.begin(), dist.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    dist.exhaustive = false;
    return dist;
}

RemoteScorer::RemoteScorer(RemoteConfig config) : config_(std::move(config)) {
    const auto& url = config_.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    base_url_ = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/v1/completions";
#ifndef QUANTEVAL_HTTPS
    if (url.rfind("https://", 0) == 0) throw ConfigError("built without HTTPS support: " + url);
#endif
}

HttpReply RemoteScorer::post(const std::string& body) const {
    httplib::Client client(base_url_);
    const auto secs = config_.timeout.count() / 1000;
    const auto usecs = (config_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
}

json RemoteScorer::post_with_retry(const json& request) const {
    const auto body = request.dump();
    for (int attempt = 0;; ++attempt) {
        auto reply = post(body);
        if (reply.status >= 200 && reply.status < 300) {
            try {
                return json::parse(reply.body);
            } catch (const json::parse_error& e) {
                throw ProtocolError(std::string("response is not JSON: ") + e.what());
            }
        }
        const bool retryable = reply.status == 0 || reply.status == 429 || reply.status >= 500;
        const std::string what = reply.status == 0
                                     ? "connection failed: " + reply.error
                                     : "HTTP " + std::to_string(reply.status);
        if (!retryable || attempt >= config_.max_retries)
            throw TransportError(what + " after " + std::to_string(attempt + 1) + " attempt(s)",
                                 reply.status, retryable);
        std::this_thread::sleep_for(config_.retry_base * (1LL << attempt));
    }
}

std::vector<TokenScore> RemoteScorer::score(std::string_view context,
                                            std::string_view continuation) const {
    std::string prompt(context);
    prompt += continuation;
    const auto response = post_with_retry(build_completion_request(config_.model_name, prompt));
    return extract_with_boundary_fallback(response, context, continuation);
}

NextTokenDistribution RemoteScorer::next_token_distribution(std::string_view context) const {
    if (config_.top_k <= 0) throw CapabilityError("remote backend configured without top-k");
    return parse_top_k_response(
        post_with_retry(build_top_k_request(config_.model_name, context, config_.top_k)));
}

}  // namespace quanteval
