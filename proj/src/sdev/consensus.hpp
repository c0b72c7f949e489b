#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "activity.hpp"
#include "nlts.hpp"

namespace sdev {

// Per-instant majority activity over a cohort of aligned sequences.
struct StandardProcess {
    ActivitySequence labels;
    std::vector<std::uint32_t> support;  // sequences agreeing with labels[t]
    std::size_t size() const { return labels.size(); }
};

// Ties go to the candidate more frequent at t-1, then to the label chosen at
// t-1, then to the lowest code triple. Needs >= 2 sequences of equal length.
StandardProcess standard_process(std::span<const AlignedSequence> aligned);

// Element-wise activity_distance; lengths must match.
std::vector<std::uint8_t> deviation_distances(std::span<const Activity> standard, std::span<const Activity> seq);

// 0 -> NoDeviation; >0 without event -> ContextDeviation; >0 with event -> EventDeviation.
std::vector<DeviationState> true_states(std::span<const std::uint8_t> distances,
                                        std::span<const std::uint8_t> event_mask);

struct ObservationSymbol {
    Activity activity;
    std::uint8_t distance = 0;
    friend auto operator<=>(const ObservationSymbol&, const ObservationSymbol&) = default;
};

using ObservationCode = std::uint32_t;
// Reserved for tuples never seen while building the alphabet.
inline constexpr ObservationCode kUnseen = 0;

// Dense codes for (verb, instrument, target, distance) tuples, assigned in
// order of first appearance. Code 0 is UNSEEN.
class ObservationAlphabet {
public:
    ObservationCode intern(const ObservationSymbol& s);
    ObservationCode lookup(const ObservationSymbol& s) const;
    // Number of codes including UNSEEN.
    std::size_t size() const { return symbols_.size() + 1; }
    const ObservationSymbol& symbol(ObservationCode code) const;
    const std::vector<ObservationSymbol>& symbols() const { return symbols_; }

private:
    std::vector<ObservationSymbol> symbols_;
    std::map<ObservationSymbol, ObservationCode> codes_;
};

// Interns when `grow` is set; otherwise unknown tuples map to kUnseen.
std::vector<ObservationCode> observations(std::span<const Activity> seq, std::span<const std::uint8_t> distances,
                                          ObservationAlphabet& alphabet, bool grow);
// Lookup only: unknown tuples map to kUnseen.
std::vector<ObservationCode> observations(std::span<const Activity> seq, std::span<const std::uint8_t> distances,
                                          const ObservationAlphabet& alphabet);

struct DeviationTrace {
    std::vector<std::uint8_t> distances;
    std::vector<DeviationState> true_states;
    std::vector<ObservationCode> observations;
};

// Columns t,distance,true_state,observation_code.
void write_trace_csv(std::ostream& out, const DeviationTrace& trace);

}  // namespace sdev
