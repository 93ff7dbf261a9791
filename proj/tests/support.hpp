#pragma once

#include <atomic>
#include <mutex>
#include <filesystem>
#include <random>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "quanteval/corpus.hpp"
#include "quanteval/scoring.hpp"
#include "quanteval/table.hpp"

namespace qtest {

inline std::filesystem::path source_dir() { return QUANTEVAL_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("quanteval-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// One group: "postmen carry", most=["most"], few=["few"], mail / oil.
inline quanteval::BackboneGroup table_a_group() {
    return {"postmen", "postmen carry", {"most"}, {"few"}, "mail", "oil"};
}

inline quanteval::ProbabilityTable table_a() {
    quanteval::ProbabilityTable t;
    t.set("Most postmen carry", " mail", 0.9);
    t.set("Most postmen carry", " oil", 0.05);
    t.set("Few postmen carry", " mail", 0.2);
    t.set("Few postmen carry", " oil", 0.5);
    t.set("Postmen carry", " mail", 0.6);
    t.set("Postmen carry", " oil", 0.1);
    return t;
}

class CountingBackend final : public quanteval::ScorerBackend {
public:
    explicit CountingBackend(const quanteval::ScorerBackend& inner) : inner_(inner) {}
    std::vector<quanteval::TokenScore> score(std::string_view c, std::string_view k) const override {
        calls_.fetch_add(1);
        return inner_.score(c, k);
    }
    std::size_t calls() const { return calls_.load(); }

private:
    const quanteval::ScorerBackend& inner_;
    mutable std::atomic<std::size_t> calls_{0};
};

// Splits the prompt into space-led word tokens (" carry"), optionally gluing the last context
// word to the continuation word to produce a boundary-straddling token. Each token gets
// logprob -(0.25 * length). The first token has a null logprob, as real servers report.
inline nlohmann::json fake_echo_response(const std::string& prompt, bool glue_last_two = false) {
    std::vector<std::pair<std::string, std::size_t>> toks;
    std::size_t i = 0;
    while (i < prompt.size()) {
        std::size_t start = i;
        if (prompt[i] == ' ') ++i;
        while (i < prompt.size() && prompt[i] != ' ') ++i;
        toks.emplace_back(prompt.substr(start, i - start), start);
    }
    if (glue_last_two && toks.size() >= 2) {
        auto last = toks.back();
        toks.pop_back();
        toks.back().first += last.first;
    }
    nlohmann::json tokens = nlohmann::json::array(), lps = nlohmann::json::array(),
                   offs = nlohmann::json::array();
    for (std::size_t k = 0; k < toks.size(); ++k) {
        tokens.push_back(toks[k].first);
        if (k == 0) lps.push_back(nullptr);
        else lps.push_back(-0.25 * static_cast<double>(toks[k].first.size()));
        offs.push_back(toks[k].second);
    }
    nlohmann::json choice;
    choice["text"] = prompt;
    choice["logprobs"] = {{"tokens", tokens}, {"token_logprobs", lps}, {"text_offset", offs}};
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array({choice});
    return reply;
}

// Minimal completions-with-echo server on localhost for client tests.
class FakeCompletionsServer {
public:
    // The first `fail_first` requests answer with `fail_status`.
    explicit FakeCompletionsServer(int fail_first = 0, int fail_status = 429)
        : fail_remaining_(fail_first), fail_status_(fail_status) {
        server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            requests_.fetch_add(1);
            if (fail_remaining_.fetch_sub(1) > 0) {
                res.status = fail_status_;
                res.set_content(R"({"error":"injected"})", "application/json");
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            {
                std::lock_guard lock(mutex_);
                last_request_ = req.body;
                if (!req.get_header_value("Authorization").empty())
                    auth_header_ = req.get_header_value("Authorization");
            }
            const auto prompt = body.at("prompt").get<std::string>();
            nlohmann::json reply;
            if (body.value("echo", false)) {
                reply = fake_echo_response(prompt, glue_ && prompt.find(" oil") != std::string::npos);
            } else {
                nlohmann::json top = {{" mail", -0.5}, {" letters", -1.2}, {" bags", -2.0}, {" the", -2.5},
                                      {" packages", -3.0}};
                nlohmann::json choice;
                choice["text"] = "";
                choice["logprobs"]["top_logprobs"] = nlohmann::json::array({top});
                reply["choices"] = nlohmann::json::array({choice});
            }
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeCompletionsServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int requests() const { return requests_.load(); }
    // Straddle the boundary on prompts ending in " oil".
    void glue_oil(bool on) { glue_ = on; }
    std::string last_request() const {
        std::lock_guard lock(mutex_);
        return last_request_;
    }
    std::string auth_header() const {
        std::lock_guard lock(mutex_);
        return auth_header_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
    std::atomic<int> fail_remaining_;
    int fail_status_;
    std::atomic<bool> glue_{false};
    mutable std::mutex mutex_;
    std::string last_request_;
    std::string auth_header_;
};

}  // namespace qtest
