#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

namespace sdev {

using Code = std::uint16_t;

// Index 0 of every dimension is the IDLE symbol.
inline constexpr Code kIdle = 0;
inline constexpr std::size_t kDimensions = 3;

enum class Dimension : std::uint8_t { Verb = 0, Instrument = 1, Target = 2 };

// A symbol tagged with the dimension it was drawn from.
struct Symbol {
    Dimension dim;
    Code code;
};

// (action verb, instrument, anatomic target) as interned codes.
struct Activity {
    std::array<Code, kDimensions> codes{kIdle, kIdle, kIdle};

    constexpr Code verb() const { return codes[0]; }
    constexpr Code instrument() const { return codes[1]; }
    constexpr Code target() const { return codes[2]; }
    constexpr bool is_idle() const { return codes[0] == kIdle && codes[1] == kIdle && codes[2] == kIdle; }

    friend constexpr auto operator<=>(const Activity&, const Activity&) = default;
};

inline constexpr Activity kIdleActivity{};

using ActivitySequence = std::vector<Activity>;

// 0/1 label distance on one dimension. Throws VocabularyMismatch when the
// symbols come from different dimensions.
int component_distance(Symbol a, Symbol b);

// Sum of per-dimension 0/1 distances, in {0,1,2,3}.
constexpr int activity_distance(const Activity& q, const Activity& c) noexcept {
    return int(q.codes[0] != c.codes[0]) + int(q.codes[1] != c.codes[1]) + int(q.codes[2] != c.codes[2]);
}

enum class DeviationState : std::uint8_t { NoDeviation = 0, ContextDeviation = 1, EventDeviation = 2 };

inline constexpr std::size_t kStateCount = 3;

const char* to_string(DeviationState s) noexcept;

}  // namespace sdev
