#include "quanteval/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "quanteval/errors.hpp"
#include "quanteval/util.hpp"

namespace quanteval {

using nlohmann::json;

std::string_view to_string(Polarity p) {
    switch (p) {
        case Polarity::Most: return "MOST";
        case Polarity::Few: return "FEW";
        case Polarity::None: return "NONE";
    }
    return "NONE";
}

std::string_view to_string(WordRole r) { return r == WordRole::Typical ? "TYPICAL" : "ATYPICAL"; }

namespace {

constexpr std::array<std::string_view, 6> kFields = {
    "group_id", "backbone", "most_quantifiers", "few_quantifiers", "typical", "atypical"};

std::string require_string(const json& obj, std::string_view key, std::size_t line) {
    const auto& v = obj.at(std::string(key));
    if (!v.is_string()) throw ParseError(line, "field '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::string> require_string_list(const json& obj, std::string_view key, std::size_t line) {
    const auto& v = obj.at(std::string(key));
    if (!v.is_array()) throw ParseError(line, "field '" + std::string(key) + "' must be an array");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_string())
            throw ParseError(line, "field '" + std::string(key) + "' must contain only strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<BackboneGroup> parse_corpus_records(std::string_view content) {
    std::vector<BackboneGroup> groups;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (is_blank(line)) continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line_no, "record must be a JSON object");
        for (auto key : kFields) {
            if (!obj.contains(std::string(key)))
                throw ParseError(line_no, "missing field '" + std::string(key) + "'");
        }
        if (obj.size() != kFields.size()) {
            for (const auto& [key, _] : obj.items()) {
                if (std::find(kFields.begin(), kFields.end(), key) == kFields.end())
                    throw ParseError(line_no, "unexpected field '" + key + "'");
            }
        }
        BackboneGroup g;
        g.group_id = require_string(obj, "group_id", line_no);
        g.backbone = require_string(obj, "backbone", line_no);
        g.most_quantifiers = require_string_list(obj, "most_quantifiers", line_no);
        g.few_quantifiers = require_string_list(obj, "few_quantifiers", line_no);
        g.typical = require_string(obj, "typical", line_no);
        g.atypical = require_string(obj, "atypical", line_no);
        groups.push_back(std::move(g));
    }
    return groups;
}

std::vector<BackboneGroup> parse_corpus(std::string_view content) {
    auto groups = parse_corpus_records(content);
    auto findings = validate_corpus(groups);
    if (!findings.empty()) {
        const auto& f = findings.front();
        throw ValidationError("group '" + f.group_id + "': " + f.rule +
                              (f.message.empty() ? "" : " (" + f.message + ")"));
    }
    return groups;
}

std::string serialize_corpus(std::span<const BackboneGroup> groups) {
    std::string out;
    for (const auto& g : groups) {
        nlohmann::ordered_json obj;
        obj["group_id"] = g.group_id;
        obj["backbone"] = g.backbone;
        obj["most_quantifiers"] = g.most_quantifiers;
        obj["few_quantifiers"] = g.few_quantifiers;
        obj["typical"] = g.typical;
        obj["atypical"] = g.atypical;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::vector<Finding> validate_corpus(std::span<const BackboneGroup> groups) {
    std::vector<Finding> findings;
    std::unordered_set<std::string> seen;
    auto add = [&](const BackboneGroup& g, std::string rule, std::string message = {}) {
        findings.push_back({g.group_id, std::move(rule), std::move(message)});
    };
    for (const auto& g : groups) {
        if (g.group_id.empty()) add(g, "empty group_id");
        if (!seen.insert(g.group_id).second) add(g, "duplicate group_id");

        if (is_blank(g.backbone)) {
            add(g, "empty backbone");
        } else if (std::isspace(static_cast<unsigned char>(g.backbone.front())) ||
                   std::isspace(static_cast<unsigned char>(g.backbone.back()))) {
            add(g, "backbone has surrounding whitespace");
        }

        if (g.most_quantifiers.empty() || g.few_quantifiers.empty())
            add(g, "empty quantifier list");
        if (g.most_quantifiers.size() != g.few_quantifiers.size()) {
            add(g, "quantifier list length mismatch",
                std::to_string(g.most_quantifiers.size()) + " most vs " +
                    std::to_string(g.few_quantifiers.size()) + " few");
        }
        std::set<std::string> surfaces;
        for (const auto* list : {&g.most_quantifiers, &g.few_quantifiers}) {
            for (const auto& q : *list) {
                if (is_blank(q)) add(g, "empty quantifier");
                else if (!surfaces.insert(q).second) add(g, "duplicate quantifier", q);
            }
        }

        for (const auto* w : {&g.typical, &g.atypical}) {
            if (w->empty()) add(g, "empty critical word");
            else if (has_space(*w)) add(g, "critical word contains whitespace", *w);
        }
        if (!g.typical.empty() && g.typical == g.atypical) add(g, "critical words identical", g.typical);
    }
    return findings;
}

std::vector<BackboneGroup> load_corpus_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read corpus file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str());
}

std::string capitalize_first(std::string_view text) {
    std::string out(text);
    if (!out.empty()) {
        auto c = static_cast<unsigned char>(out.front());
        if (c < 0x80) out.front() = static_cast<char>(std::toupper(c));
    }
    return out;
}

RealizedText realize_text(std::optional<std::string_view> quantifier, std::string_view backbone,
                          std::string_view critical_word) {
    RealizedText t;
    if (quantifier && !quantifier->empty()) {
        std::string phrase(*quantifier);
        phrase += ' ';
        phrase += backbone;
        t.context = capitalize_first(phrase);
    } else {
        t.context = capitalize_first(backbone);
    }
    t.continuation = " ";
    t.continuation += critical_word;
    return t;
}

std::vector<StimulusItem> expand_group(const BackboneGroup& group) {
    std::vector<StimulusItem> items;
    items.reserve(2 * (group.most_quantifiers.size() + group.few_quantifiers.size()) + 2);
    auto emit = [&](Polarity p, int index, const std::string& surface) {
        for (auto role : {WordRole::Typical, WordRole::Atypical}) {
            auto text = realize_text(p == Polarity::None ? std::nullopt
                                                         : std::optional<std::string_view>(surface),
                                     group.backbone, group.word(role));
            items.push_back({group.group_id, p, index, surface, role, std::move(text.context),
                             std::move(text.continuation)});
        }
    };
    for (std::size_t i = 0; i < group.most_quantifiers.size(); ++i)
        emit(Polarity::Most, static_cast<int>(i), group.most_quantifiers[i]);
    for (std::size_t i = 0; i < group.few_quantifiers.size(); ++i)
        emit(Polarity::Few, static_cast<int>(i), group.few_quantifiers[i]);
    emit(Polarity::None, 0, "");
    return items;
}

std::vector<StimulusItem> expand_corpus(std::span<const BackboneGroup> groups) {
    std::vector<StimulusItem> items;
    for (const auto& g : groups) {
        auto part = expand_group(g);
        items.insert(items.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
    return items;
}

namespace {

struct Frame {
    std::string_view subject;
    std::string_view verb;
    std::string_view typical;
    std::string_view atypical;
};

constexpr std::array<Frame, 40> kFrames = {{
    {"bakers", "bake", "bread", "bricks"},        {"farmers", "grow", "crops", "jewels"},
    {"dentists", "clean", "teeth", "engines"},    {"pilots", "fly", "planes", "kites"},
    {"fishermen", "catch", "fish", "birds"},      {"teachers", "grade", "exams", "fruit"},
    {"cats", "chase", "mice", "cars"},            {"bees", "make", "honey", "cheese"},
    {"cows", "eat", "grass", "meat"},             {"doctors", "treat", "patients", "furniture"},
    {"authors", "write", "books", "bridges"},     {"tailors", "sew", "clothes", "tires"},
    {"plumbers", "fix", "pipes", "teeth"},        {"mechanics", "repair", "cars", "violins"},
    {"gardeners", "plant", "flowers", "rocks"},   {"chefs", "cook", "meals", "paper"},
    {"singers", "perform", "songs", "surgery"},   {"students", "read", "textbooks", "contracts"},
    {"miners", "dig", "coal", "graves"},          {"squirrels", "collect", "nuts", "coins"},
    {"spiders", "spin", "webs", "wool"},          {"firefighters", "fight", "fires", "duels"},
    {"carpenters", "build", "furniture", "engines"}, {"painters", "use", "brushes", "hammers"},
    {"soldiers", "carry", "weapons", "flowers"},  {"librarians", "shelve", "books", "dishes"},
    {"drivers", "wear", "seatbelts", "helmets"},  {"children", "drink", "milk", "coffee"},
    {"monkeys", "eat", "bananas", "fish"},        {"dogs", "bury", "bones", "shoes"},
    {"birds", "build", "nests", "dams"},          {"sailors", "navigate", "ships", "planes"},
    {"waiters", "serve", "food", "warrants"},     {"hunters", "shoot", "deer", "photos"},
    {"lawyers", "argue", "cases", "songs"},       {"nurses", "help", "patients", "criminals"},
    {"knitters", "use", "yarn", "glue"},          {"barbers", "cut", "hair", "wood"},
    {"jewelers", "sell", "rings", "lumber"},      {"cyclists", "ride", "bikes", "horses"},
}};

constexpr std::array<std::string_view, 10> kModifiers = {
    "young", "local", "experienced", "urban", "rural", "tired", "busy", "older", "skilled", "new"};

constexpr std::array<std::string_view, 4> kMostPool = {"most", "almost all", "nearly all",
                                                        "virtually all"};
constexpr std::array<std::string_view, 4> kFewPool = {"few", "almost no", "hardly any", "very few"};

std::vector<std::string> pick_two(std::mt19937_64& rng, std::span<const std::string_view> pool) {
    auto a = draw_index(rng, pool.size());
    auto b = draw_index(rng, pool.size() - 1);
    if (b >= a) ++b;
    return {std::string(pool[a]), std::string(pool[b])};
}

}  // namespace

std::vector<BackboneGroup> generate_synthetic_corpus(int n_groups, std::uint64_t seed) {
    if (n_groups < 1) throw ArgumentError("n_groups must be >= 1");
    constexpr std::size_t kMods = kModifiers.size();
    constexpr std::size_t kVariants = 1 + kMods + kMods * (kMods - 1);
    const std::size_t capacity = kFrames.size() * kVariants;
    if (static_cast<std::size_t>(n_groups) > capacity)
        throw ArgumentError("n_groups exceeds the synthetic vocabulary capacity of " +
                            std::to_string(capacity));

    // Variants 0..capacity-1 enumerated frame-major; the first 440 use at most one
    // modifier, so ordinary corpus sizes stay readable.
    auto backbone_for = [&](std::size_t code) {
        std::size_t frame = code % kFrames.size();
        std::size_t variant = code / kFrames.size();
        const auto& f = kFrames[frame];
        std::string subject(f.subject);
        if (variant >= 1 && variant <= kMods) {
            subject = std::string(kModifiers[variant - 1]) + " " + subject;
        } else if (variant > kMods) {
            std::size_t v = variant - 1 - kMods;
            std::size_t a = v / (kMods - 1);
            std::size_t b = v % (kMods - 1);
            if (b >= a) ++b;
            subject = std::string(kModifiers[a]) + " " + std::string(kModifiers[b]) + " " + subject;
        }
        return std::make_pair(subject + " " + std::string(f.verb), frame);
    };

    std::mt19937_64 rng(seed);
    const std::size_t primary = std::min(capacity, kFrames.size() * (1 + kMods));
    std::vector<std::size_t> codes(primary);
    for (std::size_t i = 0; i < primary; ++i) codes[i] = i;
    for (std::size_t i = primary; i > 1; --i) std::swap(codes[i - 1], codes[draw_index(rng, i)]);
    for (std::size_t i = primary; codes.size() < static_cast<std::size_t>(n_groups); ++i)
        codes.push_back(i);

    const std::size_t width = std::max<std::size_t>(3, std::to_string(n_groups).size());
    std::vector<BackboneGroup> groups;
    groups.reserve(static_cast<std::size_t>(n_groups));
    for (int i = 0; i < n_groups; ++i) {
        auto [backbone, frame] = backbone_for(codes[static_cast<std::size_t>(i)]);
        std::string id = std::to_string(i + 1);
        id.insert(0, width - id.size(), '0');
        BackboneGroup g;
        g.group_id = "syn-" + id;
        g.backbone = std::move(backbone);
        g.most_quantifiers = pick_two(rng, kMostPool);
        g.few_quantifiers = pick_two(rng, kFewPool);
        g.typical = std::string(kFrames[frame].typical);
        g.atypical = std::string(kFrames[frame].atypical);
        groups.push_back(std::move(g));
    }
    return groups;
}

BackboneGroup table1_group() {
    return {"postmen", "postmen carry", {"most", "almost all"}, {"few", "almost no"}, "mail", "oil"};
}

}  // namespace quanteval
