#include <doctest.h>

#include "sdev/error.hpp"
#include "sdev/synthetic.hpp"

using namespace sdev;

TEST_CASE("default configuration is valid") {
    const auto c = GeneratorConfig::defaults();
    CHECK_NOTHROW(c.validate());
    CHECK(c.base.size() == 61);
    CHECK(c.cohort_size == 11);
    CHECK(c.vocabulary.size(Dimension::Verb) == 11);
    CHECK(c.vocabulary.size(Dimension::Instrument) == 11);
    CHECK(c.vocabulary.size(Dimension::Target) == 13);
}

TEST_CASE("generation is deterministic per seed") {
    const auto a = generate(GeneratorConfig::defaults(4));
    const auto b = generate(GeneratorConfig::defaults(4));
    const auto c = generate(GeneratorConfig::defaults(5));
    REQUIRE(a.procedures.size() == 11);
    CHECK(a.procedures == b.procedures);
    CHECK(a.log == b.log);
    CHECK(a.procedures != c.procedures);
}

TEST_CASE("generated procedures are well formed") {
    const auto g = generate(GeneratorConfig::defaults(2));
    for (const auto& p : g.procedures) {
        CHECK_NOTHROW(validate(p));
        CHECK(p.activities.front().start == 0);
        for (std::size_t i = 1; i < p.activities.size(); ++i)
            CHECK(p.activities[i].start >= p.activities[i - 1].end);
        for (const auto& e : p.events) {
            CHECK(e.start < e.end);
            CHECK(e.end <= p.duration());
        }
    }
}

TEST_CASE("every event overlaps a response activity") {
    const auto cfg = GeneratorConfig::defaults(3);
    const auto g = generate(cfg);
    std::size_t events = 0;
    for (const auto& p : g.procedures)
        for (const auto& e : p.events) {
            ++events;
            bool hit = false;
            for (const auto& a : p.activities) {
                if (a.end <= e.start || a.start >= e.end) continue;
                for (const auto& r : cfg.events.response) hit = hit || a.activity == r;
            }
            CHECK(hit);
        }
    CHECK(events > 0);
}

TEST_CASE("replay rebuilds each procedure from its log") {
    const auto cfg = GeneratorConfig::defaults(6);
    const auto g = generate(cfg);
    for (std::size_t i = 0; i < g.procedures.size(); ++i) CHECK(replay(cfg.base, g.log[i]) == g.procedures[i]);
}

TEST_CASE("log JSON round trip") {
    const auto cfg = GeneratorConfig::defaults(8);
    const auto g = generate(cfg);
    const auto back = log_from_json(log_to_json(g, cfg), g.vocabulary);
    CHECK(back == g.log);
    CHECK_THROWS_AS(log_from_json("[", g.vocabulary), ParseError);
}

TEST_CASE("without perturbations or events the base workflow is reproduced") {
    auto cfg = GeneratorConfig::defaults(9);
    cfg.perturbation_rate = 0;
    cfg.idle_gap_rate = 0;
    cfg.events.min_count = 0;
    cfg.events.max_count = 0;
    const auto g = generate(cfg);
    for (const auto& p : g.procedures) {
        REQUIRE(p.activities.size() == cfg.base.size());
        CHECK(p.events.empty());
        for (std::size_t i = 0; i < cfg.base.size(); ++i) {
            CHECK(p.activities[i].activity == cfg.base[i].activity);
            const double d = double(p.activities[i].end - p.activities[i].start) / 1e6;
            const auto& s = cfg.base[i];
            CHECK(d >= std::max(0.1, s.mean_s * (1 - s.jitter)) - 1e-3);
            CHECK(d <= s.mean_s * (1 + s.jitter) + 1e-3);
        }
    }
}

TEST_CASE("event fraction rescales event durations") {
    auto cfg = GeneratorConfig::defaults();
    const double lo = cfg.events.min_duration_s, hi = cfg.events.max_duration_s;
    cfg.set_event_fraction(2 * cfg.target_mix.event);
    CHECK(cfg.events.min_duration_s == doctest::Approx(2 * lo));
    CHECK(cfg.events.max_duration_s == doctest::Approx(2 * hi));
    CHECK(cfg.target_mix.event == doctest::Approx(2 * 0.0573));
}

TEST_CASE("infeasible configurations are rejected") {
    auto bad = GeneratorConfig::defaults();
    bad.perturbation_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = GeneratorConfig::defaults();
    bad.set_event_fraction(0.9);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(bad.set_event_fraction(1.5), ConfigError);
    bad = GeneratorConfig::defaults();
    bad.cohort_size = 2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = GeneratorConfig::defaults();
    bad.base.clear();
    CHECK_THROWS_AS(generate(bad), ConfigError);
    bad = GeneratorConfig::defaults();
    bad.target_mix = {0.5, 0.2, 0.1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
