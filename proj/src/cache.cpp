#include "quanteval/cache.hpp"

#include <chrono>
#include <ctime>

#include "json.hpp"
#include "quanteval/errors.hpp"

namespace quanteval {

using nlohmann::json;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string ScoreCache::key(std::string_view model_id, std::string_view context,
                            std::string_view continuation) {
    std::string k;
    k.reserve(model_id.size() + context.size() + continuation.size() + 2);
    k.append(model_id).push_back('\0');
    k.append(context).push_back('\0');
    k.append(continuation);
    return k;
}

ScoreCache::ScoreCache(const std::filesystem::path& path, Clock clock)
    : clock_(clock ? std::move(clock) : Clock(utc_timestamp)) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (std::ifstream in{path}) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                auto obj = json::parse(line);
                std::vector<TokenScore> tokens;
                for (const auto& t : obj.at("tokens")) {
                    tokens.push_back({t.at("text").get<std::string>(), t.at("logprob").get<double>(),
                                      t.at("char_start").get<std::size_t>(),
                                      t.at("char_end").get<std::size_t>()});
                }
                entries_[key(obj.at("model_id").get<std::string>(), obj.at("context").get<std::string>(),
                             obj.at("continuation").get<std::string>())] = std::move(tokens);
            } catch (const json::exception&) {
                ++skipped_;
            }
        }
    }
    file_.open(path, std::ios::app | std::ios::binary);
    if (!file_) throw Error("cannot open cache file " + path.string());
}

std::optional<std::vector<TokenScore>> ScoreCache::lookup(std::string_view model_id,
                                                          std::string_view context,
                                                          std::string_view continuation) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key(model_id, context, continuation));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ScoreCache::store(std::string_view model_id, std::string_view context,
                       std::string_view continuation, const std::vector<TokenScore>& tokens) {
    std::unique_lock lock(mutex_);
    if (file_.is_open()) {
        nlohmann::ordered_json obj;
        obj["model_id"] = model_id;
        obj["context"] = context;
        obj["continuation"] = continuation;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& t : tokens) {
            nlohmann::ordered_json tj;
            tj["text"] = t.text;
            tj["logprob"] = t.logprob;
            tj["char_start"] = t.char_start;
            tj["char_end"] = t.char_end;
            arr.push_back(std::move(tj));
        }
        obj["tokens"] = std::move(arr);
        obj["timestamp"] = clock_();
        file_ << obj.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
        file_.flush();
        if (!file_) throw Error("cache write failed");
    }
    entries_[key(model_id, context, continuation)] = tokens;
}

std::size_t ScoreCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

}  // namespace quanteval
