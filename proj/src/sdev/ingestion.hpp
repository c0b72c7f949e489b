#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "activity.hpp"
#include "vocabulary.hpp"

namespace sdev {

// Timestamps are integer microseconds so that sample grids compare exactly.
using Micros = std::int64_t;
inline constexpr Micros kMicrosPerSecond = 1'000'000;

// Decimal seconds ("12.25") to microseconds. At most six fractional digits.
Micros parse_seconds(std::string_view text);
// Shortest decimal rendering, e.g. 2500000 -> "2.5".
std::string format_seconds(Micros t);

// Samples per second as the exact ratio num/den (12.5 Hz is 25/2).
struct SamplingRate {
    std::int64_t num = 1;
    std::int64_t den = 1;

    static SamplingRate from_hz(double hz);
    static SamplingRate parse(std::string_view text);

    double hz() const { return double(num) / double(den); }
    std::string label() const;
    // Sample index k falls at k * den / num seconds.
    bool sample_at_or_after(std::int64_t k, Micros t) const;

    friend bool operator==(const SamplingRate& a, const SamplingRate& b) { return a.num * b.den == b.num * a.den; }
};

struct ActivityInterval {
    Micros start = 0;
    Micros end = 0;
    Activity activity;
    friend bool operator==(const ActivityInterval&, const ActivityInterval&) = default;
};

struct EventInterval {
    Micros start = 0;
    Micros end = 0;
    std::string kind;
    friend bool operator==(const EventInterval&, const EventInterval&) = default;
};

// One annotated procedure: sorted, non-overlapping half-open intervals.
struct ContinuousSPM {
    std::string procedure_id;
    std::vector<ActivityInterval> activities;
    std::vector<EventInterval> events;

    // End of the last activity; the timeline always starts at 0.
    Micros duration() const { return activities.empty() ? 0 : activities.back().end; }
    friend bool operator==(const ContinuousSPM&, const ContinuousSPM&) = default;
};

struct SampledSequence {
    std::string procedure_id;
    SamplingRate rate;
    ActivitySequence labels;
    std::vector<std::uint8_t> event_mask;

    std::size_t size() const { return labels.size(); }
    friend bool operator==(const SampledSequence&, const SampledSequence&) = default;
};

// Header `start_s,end_s,verb,instrument,target`. Rows may arrive unsorted.
std::vector<ActivityInterval> parse_activity_csv(std::istream& in, Vocabulary& vocab, bool grow);
// Header `start_s,end_s,kind`.
std::vector<EventInterval> parse_event_csv(std::istream& in);

// Parses both channels and validates the result. `events` may be null.
ContinuousSPM parse_annotations(std::string procedure_id, std::istream& activities, std::istream* events,
                                Vocabulary& vocab, bool grow);

// Throws ParseError when an invariant of ContinuousSPM does not hold.
void validate(const ContinuousSPM& spm);

void write_activity_csv(std::ostream& out, const ContinuousSPM& spm, const Vocabulary& vocab);
void write_event_csv(std::ostream& out, const ContinuousSPM& spm);

SampledSequence sample(const ContinuousSPM& spm, SamplingRate rate);

// Inverse of sample() for sequences on the grid: equal-label runs become
// intervals, IDLE runs become gaps. The final sample marks the timeline end.
ContinuousSPM unsample(const SampledSequence& seq);

// Splits one CSV record; supports double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace sdev
