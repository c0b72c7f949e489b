#include "sdev/sdev.h"

#include <exception>
#include <filesystem>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "sdev/cohort_io.hpp"
#include "sdev/error.hpp"
#include "sdev/fileutil.hpp"
#include "sdev/hsmm_io.hpp"
#include "sdev/loocv.hpp"
#include "sdev/synthetic.hpp"

struct sdev_cohort {
    sdev::Cohort cohort;
    std::optional<sdev::GeneratorConfig> config;
    std::optional<sdev::GeneratedCohort> generated;
};

struct sdev_alignment {
    sdev::Vocabulary vocabulary;
    std::vector<std::string> ids;
    sdev::TrainingSet training;
};

struct sdev_model {
    sdev::Detector detector;
};

struct sdev_evaluation {
    const sdev::Cohort* cohort;
    sdev::PipelineOptions options;
    std::size_t jobs;
    std::vector<sdev::RateEvaluation> rates;
};

namespace {

thread_local std::string g_last_error;

class InvalidArgument : public std::exception {
public:
    explicit InvalidArgument(std::string m) : msg_(std::move(m)) {}
    const char* what() const noexcept override { return msg_.c_str(); }

private:
    std::string msg_;
};

class Undefined : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

template <class F>
sdev_status guarded(F&& f) {
    g_last_error.clear();
    try {
        f();
        return SDEV_OK;
    } catch (const Undefined& e) {
        g_last_error = e.what();
        return SDEV_ERR_UNDEFINED;
    } catch (const InvalidArgument& e) {
        g_last_error = e.what();
        return SDEV_ERR_INVALID_ARGUMENT;
    } catch (const sdev::ParseError& e) {
        g_last_error = e.what();
        return SDEV_ERR_PARSE;
    } catch (const sdev::VocabularyMismatch& e) {
        g_last_error = e.what();
        return SDEV_ERR_VOCABULARY;
    } catch (const sdev::ConfigError& e) {
        g_last_error = e.what();
        return SDEV_ERR_CONFIG;
    } catch (const sdev::NumericError& e) {
        g_last_error = e.what();
        return SDEV_ERR_NUMERIC;
    } catch (const sdev::IoError& e) {
        g_last_error = e.what();
        return SDEV_ERR_IO;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SDEV_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SDEV_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SDEV_ERR_INTERNAL;
    }
}

template <class T>
void require(const T* p, const char* what) {
    if (!p) throw InvalidArgument(std::string(what) + " is null");
}

sdev::PipelineOptions to_options(const sdev_pipeline_options* o) {
    sdev::PipelineOptions p;
    if (!o) return p;
    p.dba.max_iter = o->dba_max_iter;
    p.dba.patience = o->dba_patience;
    p.max_duration_factor = o->max_duration_factor;
    p.smoothing = o->smoothing;
    p.em = o->em != 0;
    p.em_options.max_iter = o->em_max_iter;
    p.em_options.tol = o->em_tol;
    switch (o->decode_mode) {
        case SDEV_DECODE_VITERBI: p.decode_mode = sdev::DecodeMode::Viterbi; break;
        case SDEV_DECODE_POSTERIOR: p.decode_mode = sdev::DecodeMode::Posterior; break;
        default: throw InvalidArgument("unknown decode mode");
    }
    if (p.dba.max_iter == 0) throw sdev::ConfigError("DBA needs at least one iteration");
    if (!(p.max_duration_factor >= 1.0)) throw sdev::ConfigError("duration factor must be at least 1");
    if (!(p.smoothing > 0.0)) throw sdev::ConfigError("smoothing must be positive");
    if (p.em && !(p.em_options.tol >= 0.0)) throw sdev::ConfigError("EM tolerance must be non-negative");
    return p;
}

// Only the swept rates are accepted.
sdev::SamplingRate swept_rate(double hz) {
    if (!(hz > 0)) throw InvalidArgument("rate must be positive");
    const auto r = sdev::SamplingRate::from_hz(hz);
    for (const auto& s : sdev::default_rates())
        if (s == r) return r;
    throw InvalidArgument("unsupported rate " + std::to_string(hz) + " Hz (expected 2..12 or 12.5)");
}

std::vector<sdev::SampledSequence> sample_all(const sdev::Cohort& c, sdev::SamplingRate rate) {
    std::vector<sdev::SampledSequence> out;
    for (const auto& spm : c.procedures) out.push_back(sdev::sample(spm, rate));
    return out;
}

const sdev::RateEvaluation& rate_at(const sdev_evaluation* e, std::size_t i) {
    require(e, "evaluation");
    if (i >= e->rates.size()) throw InvalidArgument("rate index out of range");
    return e->rates[i];
}

sdev::Metric to_metric(sdev_metric m) {
    if (static_cast<unsigned>(m) >= sdev::kMetricCount) throw InvalidArgument("unknown metric");
    return static_cast<sdev::Metric>(m);
}

}  // namespace

extern "C" {

const char* sdev_last_error(void) { return g_last_error.c_str(); }

const char* sdev_version(void) { return "0.1.0"; }

const char* sdev_status_name(sdev_status s) {
    switch (s) {
        case SDEV_OK: return "ok";
        case SDEV_ERR_INVALID_ARGUMENT: return "invalid argument";
        case SDEV_ERR_PARSE: return "parse error";
        case SDEV_ERR_VOCABULARY: return "vocabulary mismatch";
        case SDEV_ERR_CONFIG: return "configuration error";
        case SDEV_ERR_NUMERIC: return "numerical failure";
        case SDEV_ERR_IO: return "i/o error";
        case SDEV_ERR_UNDEFINED: return "undefined";
        case SDEV_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void sdev_generator_options_default(sdev_generator_options* opts) {
    if (!opts) return;
    const auto d = sdev::GeneratorConfig::defaults();
    opts->seed = d.seed;
    opts->cohort_size = static_cast<uint32_t>(d.cohort_size);
    opts->perturbation_rate = d.perturbation_rate;
    opts->idle_gap_rate = d.idle_gap_rate;
    opts->event_fraction = -1.0;
    opts->min_events = d.events.min_count;
    opts->max_events = d.events.max_count;
}

sdev_status sdev_cohort_simulate(const sdev_generator_options* opts, sdev_cohort** out) {
    return guarded([&] {
        require(opts, "options");
        require(out, "out");
        *out = nullptr;
        auto cfg = sdev::GeneratorConfig::defaults(opts->seed);
        cfg.cohort_size = opts->cohort_size;
        cfg.perturbation_rate = opts->perturbation_rate;
        cfg.idle_gap_rate = opts->idle_gap_rate;
        cfg.events.min_count = opts->min_events;
        cfg.events.max_count = opts->max_events;
        if (opts->event_fraction >= 0.0) cfg.set_event_fraction(opts->event_fraction);
        auto gen = sdev::generate(cfg);
        auto c = std::make_unique<sdev_cohort>();
        c->cohort.vocabulary = gen.vocabulary;
        c->cohort.procedures = gen.procedures;
        c->config = std::move(cfg);
        c->generated = std::move(gen);
        *out = c.release();
    });
}

sdev_status sdev_cohort_load(const char* manifest_path, sdev_cohort** out) {
    return guarded([&] {
        require(manifest_path, "manifest path");
        require(out, "out");
        *out = nullptr;
        auto c = std::make_unique<sdev_cohort>();
        c->cohort = sdev::load_cohort(manifest_path);
        *out = c.release();
    });
}

sdev_status sdev_cohort_write(const sdev_cohort* c, const char* dir) {
    return guarded([&] {
        require(c, "cohort");
        require(dir, "dir");
        sdev::write_cohort(dir, c->cohort);
        if (c->generated)
            sdev::write_file_atomic(std::filesystem::path(dir) / "ground_truth.json",
                                    sdev::log_to_json(*c->generated, *c->config) + "\n");
    });
}

sdev_status sdev_cohort_write_sampled(const sdev_cohort* c, double rate_hz, const char* dir) {
    return guarded([&] {
        require(c, "cohort");
        require(dir, "dir");
        const auto rate = swept_rate(rate_hz);
        for (const auto& seq : sample_all(c->cohort, rate))
            sdev::write_file_atomic(std::filesystem::path(dir) / (seq.procedure_id + "_" + rate.label() + "hz.csv"),
                                    sdev::sampled_csv(seq, c->cohort.vocabulary));
    });
}

size_t sdev_cohort_size(const sdev_cohort* c) { return c ? c->cohort.procedures.size() : 0; }

const char* sdev_cohort_procedure_id(const sdev_cohort* c, size_t index) {
    if (!c || index >= c->cohort.procedures.size()) return nullptr;
    return c->cohort.procedures[index].procedure_id.c_str();
}

double sdev_cohort_duration(const sdev_cohort* c, size_t index) {
    if (!c || index >= c->cohort.procedures.size()) return 0.0;
    return double(c->cohort.procedures[index].duration()) / double(sdev::kMicrosPerSecond);
}

sdev_status sdev_cohort_state_mix(const sdev_cohort* c, double rate_hz, uint64_t counts[3]) {
    return guarded([&] {
        require(c, "cohort");
        require(counts, "counts");
        const auto mix = sdev::state_mix(c->cohort.procedures, swept_rate(rate_hz));
        for (std::size_t k = 0; k < 3; ++k) counts[k] = mix[k];
    });
}

void sdev_cohort_free(sdev_cohort* c) { delete c; }

void sdev_pipeline_options_default(sdev_pipeline_options* opts) {
    if (!opts) return;
    const sdev::PipelineOptions p;
    opts->dba_max_iter = static_cast<uint32_t>(p.dba.max_iter);
    opts->dba_patience = static_cast<uint32_t>(p.dba.patience);
    opts->max_duration_factor = p.max_duration_factor;
    opts->smoothing = p.smoothing;
    opts->em = p.em ? 1 : 0;
    opts->em_max_iter = static_cast<uint32_t>(p.em_options.max_iter);
    opts->em_tol = p.em_options.tol;
    opts->decode_mode = SDEV_DECODE_VITERBI;
}

sdev_status sdev_align(const sdev_cohort* c, double rate_hz, const sdev_pipeline_options* opts,
                       sdev_alignment** out) {
    return guarded([&] {
        require(c, "cohort");
        require(out, "out");
        *out = nullptr;
        const auto p = to_options(opts);
        const auto sampled = sample_all(c->cohort, swept_rate(rate_hz));
        auto a = std::make_unique<sdev_alignment>();
        a->vocabulary = c->cohort.vocabulary;
        for (const auto& s : sampled) a->ids.push_back(s.procedure_id);
        a->training = sdev::prepare_training(sampled, p);
        *out = a.release();
    });
}

size_t sdev_alignment_length(const sdev_alignment* a) { return a ? a->training.alignment.length() : 0; }

size_t sdev_alignment_iterations(const sdev_alignment* a) { return a ? a->training.alignment.dba.iterations : 0; }

long sdev_alignment_cost(const sdev_alignment* a) { return a ? a->training.alignment.dba.cost : 0; }

sdev_status sdev_alignment_write(const sdev_alignment* a, const char* dir) {
    return guarded([&] {
        require(a, "alignment");
        require(dir, "dir");
        const std::filesystem::path d(dir);
        sdev::write_file_atomic(d / "standard_process.csv", sdev::standard_csv(a->training.standard, a->vocabulary));
        sdev::write_file_atomic(d / "aligned.csv", sdev::aligned_csv(a->training.alignment.aligned, a->vocabulary));
        for (std::size_t s = 0; s < a->ids.size(); ++s) {
            std::ostringstream out;
            sdev::write_trace_csv(out, a->training.traces[s]);
            sdev::write_file_atomic(d / "traces" / (a->ids[s] + ".csv"), out.str());
        }
    });
}

void sdev_alignment_free(sdev_alignment* a) { delete a; }

sdev_status sdev_model_train(const sdev_cohort* c, double rate_hz, const sdev_pipeline_options* opts,
                             sdev_model** out) {
    return guarded([&] {
        require(c, "cohort");
        require(out, "out");
        *out = nullptr;
        const auto p = to_options(opts);
        const auto sampled = sample_all(c->cohort, swept_rate(rate_hz));
        const auto ts = sdev::prepare_training(sampled, p);
        auto m = std::make_unique<sdev_model>();
        m->detector = sdev::train_detector(ts, p, c->cohort.vocabulary.hash());
        *out = m.release();
    });
}

sdev_status sdev_model_save(const sdev_model* m, const char* path) {
    return guarded([&] {
        require(m, "model");
        require(path, "path");
        sdev::write_file_atomic(path, sdev::detector_to_json(m->detector) + "\n");
    });
}

sdev_status sdev_model_load(const char* path, sdev_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        auto m = std::make_unique<sdev_model>();
        m->detector = sdev::detector_from_json(sdev::read_file(path));
        *out = m.release();
    });
}

size_t sdev_model_alphabet_size(const sdev_model* m) { return m ? m->detector.model.alphabet_size() : 0; }

size_t sdev_model_max_duration(const sdev_model* m) { return m ? m->detector.model.max_duration() : 0; }

sdev_status sdev_model_log_likelihood(const sdev_model* m, const uint32_t* obs, size_t n, double* out) {
    return guarded([&] {
        require(m, "model");
        require(out, "out");
        if (n > 0) require(obs, "observations");
        if (n == 0) throw InvalidArgument("empty observation sequence");
        const std::span<const std::uint32_t> o(obs, n);
        for (auto v : o)
            if (v >= m->detector.model.alphabet_size()) throw InvalidArgument("observation code outside the alphabet");
        *out = sdev::log_likelihood(m->detector.model, o);
    });
}

sdev_status sdev_model_decode(const sdev_model* m, const uint32_t* obs, size_t n, uint8_t* states_out) {
    return guarded([&] {
        require(m, "model");
        if (n == 0) throw InvalidArgument("empty observation sequence");
        require(obs, "observations");
        require(states_out, "states_out");
        const std::span<const std::uint32_t> o(obs, n);
        for (auto v : o)
            if (v >= m->detector.model.alphabet_size()) throw InvalidArgument("observation code outside the alphabet");
        const auto d = sdev::decode(m->detector.model, o, m->detector.decode_mode);
        for (std::size_t t = 0; t < n; ++t) states_out[t] = d.states[t];
    });
}

void sdev_model_free(sdev_model* m) { delete m; }

sdev_status sdev_evaluation_create(const sdev_cohort* c, const sdev_pipeline_options* opts, uint32_t jobs,
                                   sdev_evaluation** out) {
    return guarded([&] {
        require(c, "cohort");
        require(out, "out");
        *out = nullptr;
        if (c->cohort.procedures.size() < 3) throw sdev::ConfigError("leave-one-out needs at least 3 procedures");
        auto e = std::make_unique<sdev_evaluation>();
        e->cohort = &c->cohort;
        e->options = to_options(opts);
        e->jobs = jobs == 0 ? 1 : jobs;
        *out = e.release();
    });
}

sdev_status sdev_evaluation_run_rate(sdev_evaluation* e, double rate_hz) {
    return guarded([&] {
        require(e, "evaluation");
        e->rates.push_back(
            sdev::evaluate_rate(e->cohort->procedures, swept_rate(rate_hz), e->options, e->jobs));
    });
}

size_t sdev_evaluation_rate_count(const sdev_evaluation* e) { return e ? e->rates.size() : 0; }

sdev_status sdev_evaluation_metric_mean(const sdev_evaluation* e, size_t rate_index, sdev_metric metric,
                                        double* out) {
    return guarded([&] {
        require(out, "out");
        const auto& s = rate_at(e, rate_index).summary.metrics[static_cast<std::size_t>(to_metric(metric))];
        if (!s.mean) throw Undefined("metric undefined in every fold");
        *out = *s.mean;
    });
}

sdev_status sdev_evaluation_fold_metric(const sdev_evaluation* e, size_t rate_index, size_t fold, sdev_metric metric,
                                        double* out) {
    return guarded([&] {
        require(out, "out");
        const auto& r = rate_at(e, rate_index);
        if (fold >= r.folds.size()) throw InvalidArgument("fold index out of range");
        const auto v = sdev::metric_value(r.folds[fold], to_metric(metric));
        if (!v) throw Undefined("metric undefined for this fold");
        *out = *v;
    });
}

sdev_status sdev_evaluation_error_counts(const sdev_evaluation* e, size_t rate_index, uint64_t counts[4]) {
    return guarded([&] {
        require(counts, "counts");
        const auto& r = rate_at(e, rate_index);
        for (std::size_t k = 0; k < 4; ++k) counts[k] = r.errors.counts[k];
    });
}

sdev_status sdev_evaluation_trend(const sdev_evaluation* e, sdev_metric metric, double* tau, double* p_value,
                                  int* significant) {
    return guarded([&] {
        require(e, "evaluation");
        const auto rows = sdev::trend_tests(e->rates);
        const auto& row = rows[static_cast<std::size_t>(to_metric(metric))];
        if (!row.result.defined) throw Undefined("trend test undefined");
        if (tau) *tau = row.result.tau;
        if (p_value) *p_value = row.result.p_value;
        if (significant) *significant = row.result.significant ? 1 : 0;
    });
}

sdev_status sdev_evaluation_write(const sdev_evaluation* e, const char* dir, unsigned reports) {
    return guarded([&] {
        require(e, "evaluation");
        require(dir, "dir");
        const std::filesystem::path d(dir);
        if (reports & SDEV_REPORT_FOLDS) sdev::write_file_atomic(d / "folds.csv", sdev::folds_csv(e->rates));
        if (reports & SDEV_REPORT_SUMMARY) sdev::write_file_atomic(d / "summary.csv", sdev::summary_csv(e->rates));
        if (reports & SDEV_REPORT_TRENDS)
            sdev::write_file_atomic(d / "trends.csv", sdev::trends_csv(sdev::trend_tests(e->rates)));
        if (reports & SDEV_REPORT_ERRORS) sdev::write_file_atomic(d / "errors.csv", sdev::errors_csv(e->rates));
    });
}

void sdev_evaluation_free(sdev_evaluation* e) { delete e; }

}  // extern "C"
