#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "quanteval/scoring.hpp"

namespace quanteval {

inline constexpr double kDefaultFloorProbability = 1e-6;

// context -> continuation -> probability in (0, 1]. Per-context mass may fall short of 1;
// unlisted continuations draw the context's floor probability from that residual.
class ProbabilityTable {
public:
    void set(std::string_view context, std::string_view continuation, double probability);
    void set_floor(std::string_view context, double probability);
    void set_default_floor(double probability);

    bool has_context(std::string_view context) const;
    // Listed probability, or nullopt when the continuation is unlisted.
    std::optional<double> listed(std::string_view context, std::string_view continuation) const;
    double floor(std::string_view context) const;
    double residual(std::string_view context) const;

    const std::map<std::string, double, std::less<>>& continuations(std::string_view context) const;
    std::vector<std::string> contexts() const;

    // Throws ValidationError when some context's mass exceeds 1.
    void validate() const;

    // {"default_floor": 1e-6, "contexts": {"<ctx>": {"<cont>": p, ...}}, "floors": {"<ctx>": p}}
    static ProbabilityTable from_json(const nlohmann::json& doc);
    static ProbabilityTable load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

private:
    std::map<std::string, std::map<std::string, double, std::less<>>, std::less<>> table_;
    std::map<std::string, double, std::less<>> floors_;
    double default_floor_ = kDefaultFloorProbability;
};

// Single-token score: ln p for listed pairs, ln floor otherwise. Unknown contexts raise
// UnknownContextError.
std::vector<TokenScore> table_score(const ProbabilityTable& table, std::string_view context,
                                    std::string_view continuation);

NextTokenDistribution table_distribution(const ProbabilityTable& table, std::string_view context);

class TableScorer final : public ScorerBackend {
public:
    explicit TableScorer(ProbabilityTable table);

    std::vector<TokenScore> score(std::string_view context,
                                  std::string_view continuation) const override;
    bool has_distribution() const override { return true; }
    NextTokenDistribution next_token_distribution(std::string_view context) const override;

    const ProbabilityTable& table() const { return table_; }

private:
    ProbabilityTable table_;
};

}  // namespace quanteval
