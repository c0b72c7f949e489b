#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "activity.hpp"

namespace sdev {

inline constexpr std::string_view kIdleName = "IDLE";

// Per-dimension symbol tables. Codes are dense; code 0 is IDLE everywhere.
class Vocabulary {
public:
    Vocabulary();

    static Vocabulary from_lists(const std::vector<std::string>& verbs,
                                 const std::vector<std::string>& instruments,
                                 const std::vector<std::string>& targets);

    // Returns the code of `name`, appending it when `grow` is set.
    // Throws VocabularyMismatch for unknown names otherwise.
    Code intern(Dimension dim, std::string_view name, bool grow);
    std::optional<Code> find(Dimension dim, std::string_view name) const;
    const std::string& name(Dimension dim, Code code) const;
    std::size_t size(Dimension dim) const { return symbols_[index(dim)].size(); }

    bool contains(const Activity& a) const;
    // Throws VocabularyMismatch if any component is out of range.
    void validate(const Activity& a) const;

    Activity activity(std::string_view verb, std::string_view instrument, std::string_view target, bool grow);
    std::string describe(const Activity& a) const;

    // {"verb": [...], "instrument": [...], "target": [...]}; entry 0 is IDLE.
    std::string to_json() const;
    static Vocabulary from_json(std::string_view text);

    // FNV-1a over the canonical JSON form.
    std::uint64_t hash() const;

    const std::vector<std::string>& symbols(Dimension dim) const { return symbols_[index(dim)]; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.symbols_ == b.symbols_; }

private:
    static std::size_t index(Dimension d) { return static_cast<std::size_t>(d); }

    std::array<std::vector<std::string>, kDimensions> symbols_;
    std::array<std::unordered_map<std::string, Code>, kDimensions> lookup_;
};

// Checked distance: both activities must belong to `vocab`.
int activity_distance(const Vocabulary& vocab, const Activity& q, const Activity& c);

}  // namespace sdev
