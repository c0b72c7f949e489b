#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sdev/error.hpp"
#include "sdev/hsmm.hpp"
#include "sdev/hsmm_io.hpp"

using namespace sdev;

namespace {

std::size_t draw(std::mt19937_64& rng, const std::vector<double>& p) {
    std::discrete_distribution<std::size_t> d(p.begin(), p.end());
    return d(rng);
}

// Whole segments until at least `min_len` instants have been emitted.
void sample(const HsmmModel& m, std::mt19937_64& rng, std::size_t min_len, ObservationSeq& obs, StatePath& states) {
    obs.clear();
    states.clear();
    std::size_t s = draw(rng, m.pi);
    while (obs.size() < min_len) {
        const std::size_t d = draw(rng, m.P[s]) + 1;
        for (std::size_t u = 0; u < d; ++u) {
            states.push_back(StateIndex(s));
            obs.push_back(std::uint32_t(draw(rng, m.B[s])));
        }
        s = draw(rng, m.A[s]);
    }
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void check_stochastic(const HsmmModel& m) {
    auto sum = [](const std::vector<double>& r) {
        double s = 0;
        for (double v : r) s += v;
        return s;
    };
    CHECK(std::abs(sum(m.pi) - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < m.states(); ++i) {
        CHECK(m.A[i][i] == 0.0);
        CHECK(std::abs(sum(m.A[i]) - 1.0) <= 1e-12);
        CHECK(std::abs(sum(m.B[i]) - 1.0) <= 1e-12);
        CHECK(std::abs(sum(m.P[i]) - 1.0) <= 1e-12);
    }
}

struct Toy {
    HsmmModel model;
    ObservationSeq obs;
};

// 100 instances with at most 3 states, durations, symbols and T <= 8.
std::vector<Toy> toy_set() {
    std::mt19937_64 rng(20240611);
    std::vector<Toy> out;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng() % 2, k = 1 + rng() % 3, d = 1 + rng() % 3, T = 1 + rng() % 8;
        Toy t{oracle::random_model(rng, n, k, d), {}};
        for (std::size_t u = 0; u < T; ++u) t.obs.push_back(std::uint32_t(rng() % k));
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

TEST_CASE("supervised counts without smoothing") {
    const std::vector<ObservationSeq> obs{{0, 0, 1}};
    const std::vector<StatePath> states{{0, 0, 1}};
    SupervisedOptions o;
    o.n_states = 2;
    o.alphabet_size = 2;
    o.max_duration = 2;
    o.smoothing = 0;
    const auto m = estimate_supervised(obs, states, o);
    CHECK(m.pi == std::vector<double>{1, 0});
    CHECK(m.A[0] == std::vector<double>{0, 1});
    CHECK(m.A[1] == std::vector<double>{1, 0});
    CHECK(m.B[0] == std::vector<double>{1, 0});
    CHECK(m.B[1] == std::vector<double>{0, 1});
    CHECK(m.P[0] == std::vector<double>{0, 1});
    CHECK(m.P[1] == std::vector<double>{1, 0});
}

TEST_CASE("supervised counts with Laplace smoothing") {
    const std::vector<ObservationSeq> obs{{0, 0, 1}};
    const std::vector<StatePath> states{{0, 0, 1}};
    SupervisedOptions o;
    o.n_states = 2;
    o.alphabet_size = 2;
    o.max_duration = 2;
    const auto m = estimate_supervised(obs, states, o);
    CHECK(m.pi[0] == doctest::Approx(2.0 / 3));
    CHECK(m.B[0][0] == doctest::Approx(3.0 / 4));
    CHECK(m.B[0][1] == doctest::Approx(1.0 / 4));
    CHECK(m.P[0][0] == doctest::Approx(1.0 / 3));
    CHECK(m.P[0][1] == doctest::Approx(2.0 / 3));
    CHECK(m.pi_floor == doctest::Approx(1.0 / 3));
    CHECK(is_valid(m));
}

TEST_CASE("default max duration is the scaled longest run") {
    const std::vector<StatePath> s{{0, 0, 0, 0, 1}, {1, 1, 0}};
    CHECK(default_max_duration(s, 1.5) == 5);
    CHECK(default_max_duration(s, 1.0) == 4);
    const std::vector<StatePath> single{{2, 2}};
    CHECK(default_max_duration(single, 1.5) == 2);
}

TEST_CASE("supervised estimation rejects bad input") {
    SupervisedOptions o;
    o.alphabet_size = 2;
    o.max_duration = 2;
    const std::vector<ObservationSeq> obs{{0, 0, 0}};
    const std::vector<StatePath> states{{0, 0, 0}};
    CHECK_THROWS_AS(estimate_supervised(obs, states, o), ConfigError);
    const std::vector<ObservationSeq> code{{5}};
    const std::vector<StatePath> one{{0}};
    CHECK_THROWS_AS(estimate_supervised(code, one, o), ConfigError);
    const std::vector<StatePath> none;
    CHECK_THROWS_AS(estimate_supervised(obs, none, o), ConfigError);
}

TEST_CASE("supervised estimate recovers the generating model") {
    std::mt19937_64 rng(7);
    HsmmModel truth = oracle::random_model(rng, 3, 4, 3);
    std::vector<ObservationSeq> obs;
    std::vector<StatePath> states;
    std::size_t total = 0;
    while (total < 100000) {
        ObservationSeq o;
        StatePath s;
        sample(truth, rng, 50, o, s);
        total += o.size();
        obs.push_back(std::move(o));
        states.push_back(std::move(s));
    }
    SupervisedOptions opt;
    opt.n_states = 3;
    opt.alphabet_size = 4;
    opt.max_duration = 3;
    const auto m = estimate_supervised(obs, states, opt);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(l1(m.A[i], truth.A[i]) <= 0.05);
        CHECK(l1(m.B[i], truth.B[i]) <= 0.05);
        CHECK(l1(m.P[i], truth.P[i]) <= 0.05);
    }
}

TEST_CASE("forward likelihood matches enumeration") {
    for (const auto& t : toy_set()) {
        const double want = oracle::brute_log_likelihood(t.model, t.obs);
        const double got = log_likelihood(t.model, t.obs);
        CHECK(std::abs(got - want) <= 1e-9 * std::abs(want) + 1e-12);
    }
}

TEST_CASE("viterbi matches enumeration") {
    for (const auto& t : toy_set()) {
        const auto b = oracle::brute_viterbi(t.model, t.obs);
        const auto d = decode(t.model, t.obs);
        CHECK(d.score == doctest::Approx(b.best).epsilon(1e-12));
        if (b.best - b.runner_up > 1e-9) CHECK(d.states == b.states);
    }
}

TEST_CASE("state posteriors match enumeration") {
    for (const auto& t : toy_set()) {
        const std::size_t T = t.obs.size(), N = t.model.states();
        Matrix want(T, std::vector<double>(N, 0.0));
        double z = 0;
        oracle::enumerate_segmentations(t.model, t.obs, [&](const oracle::Segmentation& s) {
            const double w = std::exp(s.log_prob);
            z += w;
            for (std::size_t u = 0; u < T; ++u) want[u][s.states[u]] += w;
        });
        const auto got = state_posteriors(t.model, t.obs);
        for (std::size_t u = 0; u < T; ++u)
            for (std::size_t j = 0; j < N; ++j) CHECK(got[u][j] == doctest::Approx(want[u][j] / z).epsilon(1e-9));
    }
}

TEST_CASE("posterior decoding picks the most occupied state") {
    for (const auto& t : toy_set()) {
        const auto post = state_posteriors(t.model, t.obs);
        const auto d = decode(t.model, t.obs, DecodeMode::Posterior);
        REQUIRE(d.states.size() == t.obs.size());
        for (std::size_t u = 0; u < post.size(); ++u)
            for (std::size_t j = 0; j < post[u].size(); ++j) CHECK(post[u][d.states[u]] >= post[u][j] - 1e-12);
        CHECK(d.score == doctest::Approx(log_likelihood(t.model, t.obs)));
    }
}

TEST_CASE("viterbi breaks exact ties toward the lower state") {
    HsmmModel m;
    m.pi = {0.5, 0.5};
    m.A = {{0, 1}, {1, 0}};
    m.B = {{1}, {1}};
    m.P = {{1}, {1}};
    const ObservationSeq o{0};
    CHECK(decode(m, o).states == StatePath{0});
}

TEST_CASE("empty observation sequences") {
    std::mt19937_64 rng(1);
    const auto m = oracle::random_model(rng, 2, 2, 2);
    CHECK(log_likelihood(m, ObservationSeq{}) == 0.0);
    CHECK(decode(m, ObservationSeq{}).states.empty());
}

TEST_CASE("EM never lowers the likelihood") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto truth = oracle::random_model(rng, 3, 3, 3);
        std::vector<ObservationSeq> obs(5);
        StatePath unused;
        for (auto& o : obs) sample(truth, rng, 30, o, unused);
        const auto init = oracle::random_model(rng, 3, 3, 3);
        const auto r = em_refine(init, obs, {.max_iter = 25, .tol = 0.0});
        REQUIRE(r.log_likelihood.size() == r.iterations + 1);
        for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
            CHECK(r.log_likelihood[i] - r.log_likelihood[i - 1] >= -1e-8);
        check_stochastic(r.model);
    }
}

TEST_CASE("EM keeps the supervised floors") {
    std::mt19937_64 rng(11);
    const auto truth = oracle::random_model(rng, 3, 4, 3);
    std::vector<ObservationSeq> obs(8);
    std::vector<StatePath> states(8);
    for (std::size_t i = 0; i < obs.size(); ++i) sample(truth, rng, 40, obs[i], states[i]);
    SupervisedOptions o;
    o.n_states = 3;
    o.alphabet_size = 4;
    const auto init = estimate_supervised(obs, states, o);
    check_stochastic(init);
    const auto r = em_refine(init, obs, {.max_iter = 15, .tol = 1e-9});
    CHECK(is_valid(r.model));
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
        CHECK(r.log_likelihood[i] - r.log_likelihood[i - 1] >= -1e-8);
    check_stochastic(r.model);
}

TEST_CASE("EM rejects an invalid start") {
    std::mt19937_64 rng(3);
    auto m = oracle::random_model(rng, 2, 2, 2);
    m.A[0][0] = 0.5;
    const std::vector<ObservationSeq> obs{{0, 1}};
    CHECK_THROWS_AS(em_refine(m, obs), ConfigError);
}

TEST_CASE("validity check names broken invariants") {
    std::mt19937_64 rng(5);
    auto m = oracle::random_model(rng, 3, 2, 2);
    CHECK(is_valid(m, 1e-12));
    auto bad = m;
    bad.B[1][0] += 0.1;
    CHECK_FALSE(is_valid(bad));
    bad = m;
    bad.P_floor[0] = 0.9;
    CHECK_FALSE(is_valid(bad));
    bad = m;
    bad.pi.pop_back();
    CHECK_THROWS_AS(check_valid(bad), ConfigError);
}

TEST_CASE("state path conversions") {
    const StatePath p{0, 1, 2};
    const auto s = to_deviation_states(p);
    CHECK(s == std::vector<DeviationState>{DeviationState::NoDeviation, DeviationState::ContextDeviation,
                                           DeviationState::EventDeviation});
    CHECK(to_state_path(s) == p);
    CHECK_THROWS_AS(to_deviation_states(StatePath{3}), ConfigError);
}

TEST_CASE("detector JSON round trip") {
    std::mt19937_64 rng(9);
    Detector d;
    d.model = oracle::random_model(rng, 3, 3, 4);
    d.model.pi_floor = 0.01;
    d.alphabet.intern({Activity{{1, 2, 3}}, 0});
    d.alphabet.intern({Activity{{1, 2, 4}}, 1});
    d.vocabulary_hash = 0xfedcba9876543210ull;
    d.decode_mode = DecodeMode::Posterior;
    const auto back = detector_from_json(detector_to_json(d));
    CHECK(back.model.pi == d.model.pi);
    CHECK(back.model.A == d.model.A);
    CHECK(back.model.B == d.model.B);
    CHECK(back.model.P == d.model.P);
    CHECK(back.model.pi_floor == d.model.pi_floor);
    CHECK(back.alphabet.symbols() == d.alphabet.symbols());
    CHECK(back.vocabulary_hash == d.vocabulary_hash);
    CHECK(back.decode_mode == DecodeMode::Posterior);
    CHECK(detector_to_json(back) == detector_to_json(d));
}

TEST_CASE("detector JSON rejects malformed input") {
    CHECK_THROWS_AS(detector_from_json("{"), ParseError);
    CHECK_THROWS_AS(detector_from_json(R"({"format":"other"})"), ParseError);
}
