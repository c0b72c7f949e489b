#include "vocabulary.hpp"

#include <json.hpp>
#include <limits>

#include "error.hpp"

namespace sdev {

namespace {

constexpr std::array<const char*, kDimensions> kDimensionKeys{"verb", "instrument", "target"};

}  // namespace

int component_distance(Symbol a, Symbol b) {
    if (a.dim != b.dim)
        throw VocabularyMismatch("component_distance: symbols belong to different dimensions");
    return a.code == b.code ? 0 : 1;
}

const char* to_string(DeviationState s) noexcept {
    switch (s) {
        case DeviationState::NoDeviation: return "no_deviation";
        case DeviationState::ContextDeviation: return "context_deviation";
        case DeviationState::EventDeviation: return "event_deviation";
    }
    return "?";
}

Vocabulary::Vocabulary() {
    for (std::size_t d = 0; d < kDimensions; ++d) {
        symbols_[d].emplace_back(kIdleName);
        lookup_[d].emplace(std::string(kIdleName), kIdle);
    }
}

Vocabulary Vocabulary::from_lists(const std::vector<std::string>& verbs,
                                  const std::vector<std::string>& instruments,
                                  const std::vector<std::string>& targets) {
    Vocabulary v;
    const std::array<const std::vector<std::string>*, kDimensions> lists{&verbs, &instruments, &targets};
    for (std::size_t d = 0; d < kDimensions; ++d) {
        for (const auto& s : *lists[d]) {
            if (s == kIdleName) continue;
            if (v.lookup_[d].count(s))
                throw VocabularyMismatch("duplicate symbol '" + s + "' in " + kDimensionKeys[d] + " list");
            v.intern(static_cast<Dimension>(d), s, true);
        }
    }
    return v;
}

Code Vocabulary::intern(Dimension dim, std::string_view name, bool grow) {
    auto& table = lookup_[index(dim)];
    if (auto it = table.find(std::string(name)); it != table.end()) return it->second;
    if (!grow)
        throw VocabularyMismatch("unknown " + std::string(kDimensionKeys[index(dim)]) + " symbol '" +
                                 std::string(name) + "'");
    if (name.empty()) throw VocabularyMismatch("empty symbol");
    auto& list = symbols_[index(dim)];
    if (list.size() > std::numeric_limits<Code>::max()) throw VocabularyMismatch("vocabulary overflow");
    const auto code = static_cast<Code>(list.size());
    list.emplace_back(name);
    table.emplace(std::string(name), code);
    return code;
}

std::optional<Code> Vocabulary::find(Dimension dim, std::string_view name) const {
    const auto& table = lookup_[index(dim)];
    if (auto it = table.find(std::string(name)); it != table.end()) return it->second;
    return std::nullopt;
}

const std::string& Vocabulary::name(Dimension dim, Code code) const {
    const auto& list = symbols_[index(dim)];
    if (code >= list.size()) throw VocabularyMismatch("code out of range");
    return list[code];
}

bool Vocabulary::contains(const Activity& a) const {
    for (std::size_t d = 0; d < kDimensions; ++d)
        if (a.codes[d] >= symbols_[d].size()) return false;
    return true;
}

void Vocabulary::validate(const Activity& a) const {
    if (!contains(a)) throw VocabularyMismatch("activity does not belong to the vocabulary");
}

Activity Vocabulary::activity(std::string_view verb, std::string_view instrument, std::string_view target,
                              bool grow) {
    return Activity{{intern(Dimension::Verb, verb, grow), intern(Dimension::Instrument, instrument, grow),
                     intern(Dimension::Target, target, grow)}};
}

std::string Vocabulary::describe(const Activity& a) const {
    return name(Dimension::Verb, a.verb()) + "/" + name(Dimension::Instrument, a.instrument()) + "/" +
           name(Dimension::Target, a.target());
}

std::string Vocabulary::to_json() const {
    nlohmann::ordered_json j;
    for (std::size_t d = 0; d < kDimensions; ++d) j[kDimensionKeys[d]] = symbols_[d];
    return j.dump(2);
}

Vocabulary Vocabulary::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("vocabulary JSON: ") + e.what());
    }
    std::array<std::vector<std::string>, kDimensions> lists;
    for (std::size_t d = 0; d < kDimensions; ++d) {
        if (!j.contains(kDimensionKeys[d]) || !j[kDimensionKeys[d]].is_array())
            throw ParseError(0, std::string("vocabulary JSON: missing array '") + kDimensionKeys[d] + "'");
        lists[d] = j[kDimensionKeys[d]].get<std::vector<std::string>>();
        if (lists[d].empty() || lists[d][0] != kIdleName)
            throw ParseError(0, std::string("vocabulary JSON: '") + kDimensionKeys[d] + "' must start with IDLE");
    }
    return from_lists(lists[0], lists[1], lists[2]);
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_json()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

int activity_distance(const Vocabulary& vocab, const Activity& q, const Activity& c) {
    if (!vocab.contains(q) || !vocab.contains(c))
        throw VocabularyMismatch("activity_distance: activity outside the vocabulary");
    return activity_distance(q, c);
}

}  // namespace sdev
