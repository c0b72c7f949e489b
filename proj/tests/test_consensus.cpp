#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "sdev/consensus.hpp"
#include "sdev/error.hpp"

using namespace sdev;

namespace {

const Activity A1{{1, 1, 1}};
const Activity A2{{1, 2, 1}};
const Activity A3{{3, 3, 3}};

AlignedSequence aligned(ActivitySequence labels) {
    AlignedSequence a;
    a.source_index.resize(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) a.source_index[t] = std::uint32_t(t);
    a.labels = std::move(labels);
    return a;
}

}  // namespace

TEST_CASE("standard process takes the most frequent activity") {
    const std::vector<AlignedSequence> cohort{aligned({A1}), aligned({A1}), aligned({A2})};
    const auto sp = standard_process(cohort);
    CHECK(sp.labels == ActivitySequence{A1});
    CHECK(sp.support == std::vector<std::uint32_t>{2});
}

TEST_CASE("identical sequences give full support") {
    const ActivitySequence s{A1, A2, A3};
    const std::vector<AlignedSequence> cohort{aligned(s), aligned(s), aligned(s)};
    const auto sp = standard_process(cohort);
    CHECK(sp.labels == s);
    CHECK(sp.support == std::vector<std::uint32_t>{3, 3, 3});
}

TEST_CASE("ties keep the label chosen at t-1") {
    // t=0: A2 wins 2-0 over A1... then t=1 ties A1/A2; A2 was chosen and more frequent at t-1.
    const std::vector<AlignedSequence> cohort{aligned({A2, A1}), aligned({A2, A2})};
    CHECK(standard_process(cohort).labels == ActivitySequence{A2, A2});
    // Without history the lowest code triple wins: A1 < A2.
    const std::vector<AlignedSequence> fresh{aligned({A2}), aligned({A1})};
    CHECK(standard_process(fresh).labels == ActivitySequence{A1});
    // Tie at t=1 between A1 and A3 where A1 was chosen at t=0.
    const std::vector<AlignedSequence> keep{aligned({A1, A3}), aligned({A1, A1}), aligned({A3, A2})};
    CHECK(standard_process(keep).labels == ActivitySequence{A1, A1});
}

TEST_CASE("standard process preconditions") {
    const std::vector<AlignedSequence> one{aligned({A1})};
    CHECK_THROWS_AS(standard_process(one), ConfigError);
    const std::vector<AlignedSequence> uneven{aligned({A1}), aligned({A1, A2})};
    CHECK_THROWS_AS(standard_process(uneven), ConfigError);
}

TEST_CASE("chosen label is a mode at every instant") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<AlignedSequence> cohort;
        for (int s = 0; s < 5; ++s) cohort.push_back(aligned(oracle::random_sequence(rng, 30, 2)));
        const auto sp = standard_process(cohort);
        for (std::size_t t = 0; t < sp.size(); ++t) {
            std::map<Activity, std::uint32_t> counts;
            for (const auto& s : cohort) ++counts[s.labels[t]];
            for (const auto& [a, n] : counts) REQUIRE(counts[sp.labels[t]] >= n);
            REQUIRE(sp.support[t] == counts[sp.labels[t]]);
            REQUIRE(sp.support[t] >= 1);
        }
    }
}

TEST_CASE("deviation distances") {
    const ActivitySequence std_{A1, A2, A3};
    CHECK(deviation_distances(std_, std_) == std::vector<std::uint8_t>{0, 0, 0});
    const ActivitySequence other{A1, A1, Activity{{4, 4, 4}}};
    CHECK(deviation_distances(std_, other) == std::vector<std::uint8_t>{0, 1, 3});
    CHECK_THROWS_AS(deviation_distances(std_, ActivitySequence{A1}), ConfigError);
}

TEST_CASE("true states from distances and events") {
    const std::vector<std::uint8_t> d{0, 2, 1, 0, 3};
    const std::vector<std::uint8_t> ev{1, 0, 1, 0, 1};
    const auto s = true_states(d, ev);
    CHECK(s == std::vector<DeviationState>{DeviationState::NoDeviation, DeviationState::ContextDeviation,
                                           DeviationState::EventDeviation, DeviationState::NoDeviation,
                                           DeviationState::EventDeviation});
    CHECK(true_states(d, ev) == s);
    const std::vector<std::uint8_t> short_ev{1};
    CHECK_THROWS_AS(true_states(d, short_ev), ConfigError);
}

TEST_CASE("true-state invariants on random traces") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> dist(0, 3), flag(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::uint8_t> d(40), ev(40);
        for (auto& x : d) x = std::uint8_t(dist(rng));
        for (auto& x : ev) x = std::uint8_t(flag(rng));
        const auto s = true_states(d, ev);
        std::size_t ed = 0, flagged = 0;
        for (std::size_t t = 0; t < s.size(); ++t) {
            REQUIRE((s[t] == DeviationState::NoDeviation) == (d[t] == 0));
            if (s[t] == DeviationState::EventDeviation) REQUIRE(ev[t]);
            ed += s[t] == DeviationState::EventDeviation;
            flagged += ev[t];
        }
        REQUIRE(ed <= flagged);
    }
}

TEST_CASE("observation alphabet") {
    ObservationAlphabet alpha;
    const ActivitySequence s{A1, A1, A2};
    const std::vector<std::uint8_t> d{0, 2, 0};
    const auto codes = observations(s, d, alpha, true);
    CHECK(codes == std::vector<ObservationCode>{1, 2, 3});
    CHECK(alpha.size() == 4);
    CHECK(alpha.symbol(2).distance == 2);
    CHECK(alpha.symbol(2).activity == A1);
    CHECK_THROWS(alpha.symbol(kUnseen));

    const ActivitySequence t{A1, A3};
    const std::vector<std::uint8_t> e{0, 1};
    const ObservationAlphabet& frozen = alpha;
    CHECK(observations(t, e, frozen) == std::vector<ObservationCode>{1, kUnseen});
    CHECK(observations(t, e, alpha, false) == std::vector<ObservationCode>{1, kUnseen});
    CHECK(alpha.size() == 4);
    CHECK_THROWS_AS(observations(t, d, alpha, true), ConfigError);
}

TEST_CASE("alphabet size is bounded by distinct tuples") {
    std::mt19937_64 rng(8);
    ObservationAlphabet alpha;
    std::set<std::pair<Activity, int>> distinct;
    for (int s = 0; s < 10; ++s) {
        const auto labels = oracle::random_sequence(rng, 50, 2);
        std::vector<std::uint8_t> d(50);
        for (auto& x : d) x = std::uint8_t(rng() % 4);
        for (std::size_t t = 0; t < 50; ++t) distinct.insert({labels[t], d[t]});
        observations(labels, d, alpha, true);
    }
    CHECK(alpha.size() - 1 == distinct.size());
    CHECK(alpha.size() - 1 <= 2 * 2 * 2 * 4);
}

TEST_CASE("trace CSV") {
    DeviationTrace tr;
    tr.distances = {0, 2};
    tr.true_states = {DeviationState::NoDeviation, DeviationState::EventDeviation};
    tr.observations = {1, 0};
    std::ostringstream out;
    write_trace_csv(out, tr);
    CHECK(out.str() == "t,distance,true_state,observation_code\n0,0,no_deviation,1\n1,2,event_deviation,0\n");
}
