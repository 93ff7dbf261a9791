#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "quanteval/scoring.hpp"

namespace quanteval {

// Raw token scores keyed by the exact (model_id, context, continuation) triple. When backed
// by a file, every store appends one JSON line before the entry becomes visible to readers.
// Readers share the lock; writers are serialized.
class ScoreCache {
public:
    using Clock = std::function<std::string()>;

    ScoreCache() = default;
    explicit ScoreCache(const std::filesystem::path& path, Clock clock = {});

    ScoreCache(const ScoreCache&) = delete;
    ScoreCache& operator=(const ScoreCache&) = delete;

    std::optional<std::vector<TokenScore>> lookup(std::string_view model_id, std::string_view context,
                                                  std::string_view continuation) const;
    void store(std::string_view model_id, std::string_view context, std::string_view continuation,
               const std::vector<TokenScore>& tokens);

    std::size_t size() const;
    // Lines skipped while loading (e.g. a torn final write).
    std::size_t skipped_lines() const { return skipped_; }

private:
    static std::string key(std::string_view model_id, std::string_view context,
                           std::string_view continuation);

    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::vector<TokenScore>> entries_;
    std::ofstream file_;
    Clock clock_;
    std::size_t skipped_ = 0;
};

std::string utc_timestamp();

}  // namespace quanteval
