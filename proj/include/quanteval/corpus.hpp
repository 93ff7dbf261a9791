#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quanteval {

enum class Polarity { Most, Few, None };
enum class WordRole { Typical, Atypical };

std::string_view to_string(Polarity p);
std::string_view to_string(WordRole r);

// One stimulus family: a backbone phrase with its quantifiers and critical words.
struct BackboneGroup {
    std::string group_id;
    std::string backbone;  // uncapitalized verb-phrase stem, e.g. "postmen carry"
    std::vector<std::string> most_quantifiers;
    std::vector<std::string> few_quantifiers;
    std::string typical;
    std::string atypical;

    const std::string& word(WordRole r) const { return r == WordRole::Typical ? typical : atypical; }
    bool operator==(const BackboneGroup&) const = default;
};

// A scoreable (context, continuation) pair. quantifier_index is 0 for bare items.
struct StimulusItem {
    std::string group_id;
    Polarity polarity = Polarity::None;
    int quantifier_index = 0;
    std::string quantifier_surface;
    WordRole word_role = WordRole::Typical;
    std::string context;
    std::string continuation;

    bool operator==(const StimulusItem&) const = default;
};

struct Finding {
    std::string group_id;
    std::string rule;
    std::string message;
};

// Structural parse only: one JSON object per line, exact field set. Blank lines are skipped.
std::vector<BackboneGroup> parse_corpus_records(std::string_view content);

// parse_corpus_records followed by validate_corpus; the first finding is raised.
std::vector<BackboneGroup> parse_corpus(std::string_view content);

std::string serialize_corpus(std::span<const BackboneGroup> groups);

std::vector<Finding> validate_corpus(std::span<const BackboneGroup> groups);

std::vector<BackboneGroup> load_corpus_file(const std::filesystem::path& path);

struct RealizedText {
    std::string context;
    std::string continuation;
};

std::string capitalize_first(std::string_view text);

RealizedText realize_text(std::optional<std::string_view> quantifier, std::string_view backbone,
                          std::string_view critical_word);

// Order: MOST then FEW then bare; quantifier index ascending; TYPICAL before ATYPICAL.
std::vector<StimulusItem> expand_group(const BackboneGroup& group);
std::vector<StimulusItem> expand_corpus(std::span<const BackboneGroup> groups);

std::vector<BackboneGroup> generate_synthetic_corpus(int n_groups, std::uint64_t seed);

// The "postmen carry" group with most/almost all and few/almost no.
BackboneGroup table1_group();

}  // namespace quanteval
