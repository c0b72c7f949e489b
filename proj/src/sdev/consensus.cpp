#include "consensus.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>
#include <utility>

#include "error.hpp"

namespace sdev {

namespace {

using Tally = std::vector<std::pair<Activity, std::uint32_t>>;

std::uint32_t count_of(const Tally& tally, const Activity& a) {
    for (const auto& [act, n] : tally)
        if (act == a) return n;
    return 0;
}

}  // namespace

StandardProcess standard_process(std::span<const AlignedSequence> aligned) {
    if (aligned.size() < 2) throw ConfigError("standard_process: at least two aligned sequences required");
    const std::size_t len = aligned.front().size();
    for (const auto& s : aligned)
        if (s.size() != len) throw ConfigError("standard_process: aligned sequences differ in length");

    StandardProcess sp;
    sp.labels.reserve(len);
    sp.support.reserve(len);
    Tally prev, cur;
    for (std::size_t t = 0; t < len; ++t) {
        cur.clear();
        for (const auto& s : aligned) {
            const Activity& a = s.labels[t];
            auto it = std::find_if(cur.begin(), cur.end(), [&](const auto& e) { return e.first == a; });
            if (it == cur.end())
                cur.emplace_back(a, 1u);
            else
                ++it->second;
        }
        const Activity* prev_choice = t > 0 ? &sp.labels.back() : nullptr;
        auto key = [&](const std::pair<Activity, std::uint32_t>& e) {
            const bool was_chosen = prev_choice && *prev_choice == e.first;
            return std::make_tuple(e.second, count_of(prev, e.first), was_chosen);
        };
        const auto* best = &cur.front();
        for (const auto& e : cur) {
            const auto ke = key(e), kb = key(*best);
            if (ke > kb || (ke == kb && e.first < best->first)) best = &e;
        }
        sp.labels.push_back(best->first);
        sp.support.push_back(best->second);
        std::swap(prev, cur);
    }
    return sp;
}

std::vector<std::uint8_t> deviation_distances(std::span<const Activity> standard, std::span<const Activity> seq) {
    if (standard.size() != seq.size()) throw ConfigError("deviation_distances: length mismatch");
    std::vector<std::uint8_t> d(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) d[t] = static_cast<std::uint8_t>(activity_distance(standard[t], seq[t]));
    return d;
}

std::vector<DeviationState> true_states(std::span<const std::uint8_t> distances,
                                        std::span<const std::uint8_t> event_mask) {
    if (distances.size() != event_mask.size()) throw ConfigError("true_states: length mismatch");
    std::vector<DeviationState> out(distances.size());
    for (std::size_t t = 0; t < distances.size(); ++t) {
        if (distances[t] == 0)
            out[t] = DeviationState::NoDeviation;
        else
            out[t] = event_mask[t] ? DeviationState::EventDeviation : DeviationState::ContextDeviation;
    }
    return out;
}

ObservationCode ObservationAlphabet::intern(const ObservationSymbol& s) {
    if (auto it = codes_.find(s); it != codes_.end()) return it->second;
    symbols_.push_back(s);
    const auto code = static_cast<ObservationCode>(symbols_.size());
    codes_.emplace(s, code);
    return code;
}

ObservationCode ObservationAlphabet::lookup(const ObservationSymbol& s) const {
    if (auto it = codes_.find(s); it != codes_.end()) return it->second;
    return kUnseen;
}

const ObservationSymbol& ObservationAlphabet::symbol(ObservationCode code) const {
    if (code == kUnseen || code > symbols_.size()) throw ConfigError("observation code has no symbol");
    return symbols_[code - 1];
}

std::vector<ObservationCode> observations(std::span<const Activity> seq, std::span<const std::uint8_t> distances,
                                          ObservationAlphabet& alphabet, bool grow) {
    if (seq.size() != distances.size()) throw ConfigError("observations: length mismatch");
    std::vector<ObservationCode> out(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const ObservationSymbol sym{seq[t], distances[t]};
        out[t] = grow ? alphabet.intern(sym) : alphabet.lookup(sym);
    }
    return out;
}

std::vector<ObservationCode> observations(std::span<const Activity> seq, std::span<const std::uint8_t> distances,
                                          const ObservationAlphabet& alphabet) {
    if (seq.size() != distances.size()) throw ConfigError("observations: length mismatch");
    std::vector<ObservationCode> out(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) out[t] = alphabet.lookup({seq[t], distances[t]});
    return out;
}

void write_trace_csv(std::ostream& out, const DeviationTrace& trace) {
    out << "t,distance,true_state,observation_code\n";
    for (std::size_t t = 0; t < trace.distances.size(); ++t)
        out << t << ',' << int(trace.distances[t]) << ',' << to_string(trace.true_states[t]) << ','
            << trace.observations[t] << '\n';
}

}  // namespace sdev
