#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sdev/sdev.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("sdev_capi_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

sdev_cohort* small_cohort(std::uint64_t seed) {
    sdev_generator_options g;
    sdev_generator_options_default(&g);
    g.seed = seed;
    g.cohort_size = 4;
    sdev_cohort* c = nullptr;
    REQUIRE(sdev_cohort_simulate(&g, &c) == SDEV_OK);
    return c;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(sdev_version()) == "0.1.0");
    CHECK(std::string(sdev_status_name(SDEV_OK)) == "ok");
    CHECK(std::string(sdev_status_name(SDEV_ERR_CONFIG)) == "configuration error");
}

TEST_CASE("null arguments are rejected") {
    sdev_cohort* c = nullptr;
    CHECK(sdev_cohort_simulate(nullptr, &c) == SDEV_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(sdev_last_error()) > 0);
    CHECK(sdev_cohort_load(nullptr, &c) == SDEV_ERR_INVALID_ARGUMENT);
    CHECK(sdev_cohort_size(nullptr) == 0);
    CHECK(sdev_cohort_procedure_id(nullptr, 0) == nullptr);
    sdev_cohort_free(nullptr);
    sdev_model_free(nullptr);
    sdev_alignment_free(nullptr);
    sdev_evaluation_free(nullptr);
}

TEST_CASE("infeasible generator options map to a config error") {
    sdev_generator_options g;
    sdev_generator_options_default(&g);
    g.event_fraction = 0.9;
    sdev_cohort* c = nullptr;
    CHECK(sdev_cohort_simulate(&g, &c) == SDEV_ERR_CONFIG);
    CHECK(c == nullptr);
    sdev_generator_options_default(&g);
    g.cohort_size = 1;
    CHECK(sdev_cohort_simulate(&g, &c) == SDEV_ERR_CONFIG);
}

TEST_CASE("missing manifest is a config error") {
    sdev_cohort* c = nullptr;
    CHECK(sdev_cohort_load("/nonexistent/manifest.json", &c) == SDEV_ERR_CONFIG);
}

TEST_CASE("cohort write and load round trip") {
    sdev_cohort* c = small_cohort(3);
    CHECK(sdev_cohort_size(c) == 4);
    const auto dir = scratch("cohort");
    REQUIRE(sdev_cohort_write(c, dir.c_str()) == SDEV_OK);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "vocabulary.json"));
    CHECK(fs::exists(dir / "ground_truth.json"));
    sdev_cohort* back = nullptr;
    REQUIRE(sdev_cohort_load((dir / "manifest.json").c_str(), &back) == SDEV_OK);
    REQUIRE(sdev_cohort_size(back) == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(std::string(sdev_cohort_procedure_id(back, i)) == sdev_cohort_procedure_id(c, i));
        CHECK(sdev_cohort_duration(back, i) == sdev_cohort_duration(c, i));
    }
    std::uint64_t a[3], b[3];
    REQUIRE(sdev_cohort_state_mix(c, 4, a) == SDEV_OK);
    REQUIRE(sdev_cohort_state_mix(back, 4, b) == SDEV_OK);
    CHECK(std::memcmp(a, b, sizeof a) == 0);
    CHECK(sdev_cohort_state_mix(c, 7.5, a) == SDEV_ERR_INVALID_ARGUMENT);
    CHECK(sdev_cohort_procedure_id(c, 99) == nullptr);
    REQUIRE(sdev_cohort_write_sampled(c, 12.5, dir.c_str()) == SDEV_OK);
    CHECK(fs::exists(dir / (std::string(sdev_cohort_procedure_id(c, 0)) + "_12.5hz.csv")));
    sdev_cohort_free(back);
    sdev_cohort_free(c);
}

TEST_CASE("alignment through the C surface") {
    sdev_cohort* c = small_cohort(5);
    sdev_pipeline_options o;
    sdev_pipeline_options_default(&o);
    sdev_alignment* a = nullptr;
    REQUIRE(sdev_align(c, 2, &o, &a) == SDEV_OK);
    CHECK(sdev_alignment_length(a) > 0);
    CHECK(sdev_alignment_iterations(a) >= 1);
    CHECK(sdev_alignment_iterations(a) <= 30);
    CHECK(sdev_alignment_cost(a) >= 0);
    const auto dir = scratch("align");
    REQUIRE(sdev_alignment_write(a, dir.c_str()) == SDEV_OK);
    CHECK(fs::exists(dir / "standard_process.csv"));
    CHECK(fs::exists(dir / "aligned.csv"));
    CHECK(fs::exists(dir / "traces" / (std::string(sdev_cohort_procedure_id(c, 0)) + ".csv")));
    sdev_alignment_free(a);
    o.dba_max_iter = 0;
    CHECK(sdev_align(c, 2, &o, &a) == SDEV_ERR_CONFIG);
    sdev_cohort_free(c);
}

TEST_CASE("model train, save, load and decode") {
    sdev_cohort* c = small_cohort(7);
    sdev_pipeline_options o;
    sdev_pipeline_options_default(&o);
    sdev_model* m = nullptr;
    REQUIRE(sdev_model_train(c, 2, &o, &m) == SDEV_OK);
    const size_t k = sdev_model_alphabet_size(m);
    CHECK(k > 1);
    CHECK(sdev_model_max_duration(m) >= 1);
    const auto path = scratch("model") / "model.json";
    REQUIRE(sdev_model_save(m, path.c_str()) == SDEV_OK);
    sdev_model* back = nullptr;
    REQUIRE(sdev_model_load(path.c_str(), &back) == SDEV_OK);
    CHECK(sdev_model_alphabet_size(back) == k);

    std::vector<std::uint32_t> obs;
    for (std::uint32_t t = 0; t < 20; ++t) obs.push_back(1 + t % std::uint32_t(k - 1));
    double l1 = 0, l2 = 0;
    REQUIRE(sdev_model_log_likelihood(m, obs.data(), obs.size(), &l1) == SDEV_OK);
    REQUIRE(sdev_model_log_likelihood(back, obs.data(), obs.size(), &l2) == SDEV_OK);
    CHECK(l1 == l2);
    CHECK(std::isfinite(l1));
    std::vector<std::uint8_t> s(obs.size(), 9);
    REQUIRE(sdev_model_decode(back, obs.data(), obs.size(), s.data()) == SDEV_OK);
    for (auto v : s) CHECK(v <= 2);

    const std::uint32_t bad = std::uint32_t(k);
    CHECK(sdev_model_decode(m, &bad, 1, s.data()) == SDEV_ERR_INVALID_ARGUMENT);
    CHECK(sdev_model_load("/nonexistent/model.json", &back) != SDEV_OK);
    sdev_model_free(back);
    sdev_model_free(m);
    sdev_cohort_free(c);
}

TEST_CASE("evaluation through the C surface") {
    sdev_cohort* c = small_cohort(11);
    sdev_pipeline_options o;
    sdev_pipeline_options_default(&o);
    sdev_evaluation* e = nullptr;
    REQUIRE(sdev_evaluation_create(c, &o, 2, &e) == SDEV_OK);
    for (double hz : {2.0, 3.0, 4.0, 5.0}) REQUIRE(sdev_evaluation_run_rate(e, hz) == SDEV_OK);
    CHECK(sdev_evaluation_run_rate(e, 13) == SDEV_ERR_INVALID_ARGUMENT);
    CHECK(sdev_evaluation_rate_count(e) == 4);
    double acc = 0;
    REQUIRE(sdev_evaluation_metric_mean(e, 0, SDEV_METRIC_ACCURACY, &acc) == SDEV_OK);
    CHECK(acc > 0.5);
    CHECK(acc <= 1.0);
    double v = 0;
    REQUIRE(sdev_evaluation_fold_metric(e, 0, 0, SDEV_METRIC_ACCURACY, &v) == SDEV_OK);
    CHECK(sdev_evaluation_fold_metric(e, 0, 99, SDEV_METRIC_ACCURACY, &v) == SDEV_ERR_INVALID_ARGUMENT);
    CHECK(sdev_evaluation_metric_mean(e, 9, SDEV_METRIC_ACCURACY, &v) == SDEV_ERR_INVALID_ARGUMENT);
    std::uint64_t counts[4];
    REQUIRE(sdev_evaluation_error_counts(e, 0, counts) == SDEV_OK);
    double tau = 0, p = 0;
    int sig = 0;
    const auto st = sdev_evaluation_trend(e, SDEV_METRIC_ACCURACY, &tau, &p, &sig);
    CHECK((st == SDEV_OK || st == SDEV_ERR_UNDEFINED));
    const auto dir = scratch("eval");
    REQUIRE(sdev_evaluation_write(e, dir.c_str(), SDEV_REPORT_ALL) == SDEV_OK);
    for (const char* f : {"folds.csv", "summary.csv", "trends.csv", "errors.csv"}) CHECK(fs::exists(dir / f));
    sdev_evaluation_free(e);
    sdev_cohort_free(c);
}
