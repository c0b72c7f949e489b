#include <doctest.h>

#include "oracles.hpp"
#include "sdev/activity.hpp"
#include "sdev/error.hpp"
#include "sdev/vocabulary.hpp"

using namespace sdev;

namespace {

Vocabulary example_vocab() {
    return Vocabulary::from_lists({"verb_1", "verb_2", "verb_3"}, {"instrument_1", "instrument_2", "instrument_3"},
                                  {"target_1", "target_2", "target_3"});
}

}  // namespace

TEST_CASE("component distance") {
    const Symbol v1{Dimension::Verb, 1}, v3{Dimension::Verb, 3}, idle{Dimension::Verb, kIdle};
    CHECK(component_distance(v1, v1) == 0);
    CHECK(component_distance(v1, v3) == 1);
    CHECK(component_distance(idle, v1) == 1);
    CHECK_THROWS_AS(component_distance(v1, Symbol{Dimension::Target, 1}), VocabularyMismatch);
}

TEST_CASE("activity distance on the worked example") {
    auto v = example_vocab();
    const auto a1 = v.activity("verb_1", "instrument_1", "target_1", false);
    const auto a2 = v.activity("verb_1", "instrument_2", "target_1", false);
    const auto a3 = v.activity("verb_3", "instrument_3", "target_3", false);
    CHECK(activity_distance(v, a1, a2) == 1);
    CHECK(activity_distance(v, a1, a3) == 3);
    CHECK(activity_distance(v, a1, a1) == 0);
}

TEST_CASE("checked activity distance rejects foreign activities") {
    const auto v = example_vocab();
    const Activity outside{{7, 0, 0}};
    CHECK_THROWS_AS(activity_distance(v, outside, kIdleActivity), VocabularyMismatch);
}

TEST_CASE("activity distance is a metric (exhaustive, 3 symbols per dimension)") {
    const auto all = oracle::all_activities(3);
    for (const auto& a : all)
        for (const auto& b : all) {
            const int d = activity_distance(a, b);
            REQUIRE(d >= 0);
            REQUIRE(d <= 3);
            REQUIRE(d == activity_distance(b, a));
            REQUIRE((d == 0) == (a == b));
            for (const auto& c : all) REQUIRE(activity_distance(a, c) <= d + activity_distance(b, c));
        }
}

TEST_CASE("the all-idle activity equals only itself") {
    for (const auto& a : oracle::all_activities(2)) CHECK((a == kIdleActivity) == a.is_idle());
}

TEST_CASE("vocabulary codes and JSON round trip") {
    Vocabulary v;
    CHECK(v.size(Dimension::Verb) == 1);
    CHECK(v.name(Dimension::Target, kIdle) == "IDLE");
    CHECK(v.intern(Dimension::Verb, "cut", true) == 1);
    CHECK(v.intern(Dimension::Verb, "grasp", true) == 2);
    CHECK(v.intern(Dimension::Verb, "cut", true) == 1);
    CHECK(v.intern(Dimension::Verb, "IDLE", false) == kIdle);
    CHECK_THROWS_AS(v.intern(Dimension::Verb, "suture", false), VocabularyMismatch);
    const auto back = Vocabulary::from_json(v.to_json());
    CHECK(back == v);
    CHECK(back.hash() == v.hash());
    CHECK(example_vocab().hash() != v.hash());
}

TEST_CASE("vocabulary JSON must start with IDLE") {
    CHECK_THROWS(Vocabulary::from_json(R"({"verb":["cut"],"instrument":["IDLE"],"target":["IDLE"]})"));
    CHECK_THROWS(Vocabulary::from_json("not json"));
}

TEST_CASE("deviation states are ordered") {
    CHECK(DeviationState::NoDeviation < DeviationState::ContextDeviation);
    CHECK(DeviationState::ContextDeviation < DeviationState::EventDeviation);
    CHECK(std::string(to_string(DeviationState::EventDeviation)) == "event_deviation");
}
