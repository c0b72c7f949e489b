#include "loocv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "error.hpp"

namespace sdev {

namespace {

// Re-raises `e` with `prefix` prepended, keeping the error category.
[[noreturn]] void rethrow_annotated(std::exception_ptr e, const std::string& prefix) {
    try {
        std::rethrow_exception(e);
    } catch (const ParseError& x) {
        throw ParseError(0, prefix + x.what());
    } catch (const VocabularyMismatch& x) {
        throw VocabularyMismatch(prefix + x.what());
    } catch (const ConfigError& x) {
        throw ConfigError(prefix + x.what());
    } catch (const NumericError& x) {
        throw NumericError(prefix + x.what());
    } catch (const IoError& x) {
        throw IoError(prefix + x.what());
    } catch (const std::exception& x) {
        throw Error(prefix + x.what());
    }
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

DeviationTrace make_trace(std::span<const Activity> standard, std::span<const Activity> labels,
                          std::span<const std::uint8_t> mask) {
    DeviationTrace tr;
    tr.distances = deviation_distances(standard, labels);
    tr.true_states = true_states(tr.distances, mask);
    return tr;
}

}  // namespace

std::vector<SamplingRate> default_rates() {
    std::vector<SamplingRate> r;
    for (int hz = 2; hz <= 12; ++hz) r.push_back({hz, 1});
    r.push_back({25, 2});
    return r;
}

TrainingSet prepare_training(std::span<const SampledSequence> cohort, const PipelineOptions& opts,
                             std::optional<std::size_t> init) {
    if (cohort.size() < 2) throw ConfigError("training needs at least 2 procedures");
    TrainingSet ts;
    ts.alignment = align_cohort(cohort, opts.dba, init);
    ts.standard = standard_process(ts.alignment.aligned);
    for (std::size_t s = 0; s < cohort.size(); ++s) {
        const auto& aligned = ts.alignment.aligned[s];
        const auto mask = warp_mask(aligned, cohort[s].event_mask);
        auto tr = make_trace(ts.standard.labels, aligned.labels, mask);
        tr.observations = observations(aligned.labels, tr.distances, ts.alphabet, true);
        ts.traces.push_back(std::move(tr));
    }
    return ts;
}

Detector train_detector(const TrainingSet& training, const PipelineOptions& opts, std::uint64_t vocabulary_hash) {
    std::vector<ObservationSeq> obs;
    std::vector<StatePath> states;
    for (const auto& tr : training.traces) {
        obs.push_back(tr.observations);
        states.push_back(to_state_path(tr.true_states));
    }
    SupervisedOptions so;
    so.alphabet_size = training.alphabet.size();
    so.max_duration_factor = opts.max_duration_factor;
    so.smoothing = opts.smoothing;
    Detector d;
    d.model = estimate_supervised(obs, states, so);
    if (opts.em) d.model = em_refine(d.model, obs, opts.em_options).model;
    d.alphabet = training.alphabet;
    d.vocabulary_hash = vocabulary_hash;
    d.decode_mode = opts.decode_mode;
    return d;
}

TestTrace trace_against(const StandardProcess& standard, const SampledSequence& seq,
                        const ObservationAlphabet& alphabet) {
    TestTrace out;
    out.alignment = align_to_reference(standard.labels, seq);
    out.event_mask = warp_mask(out.alignment.aligned, seq.event_mask);
    out.trace = make_trace(out.alignment.expanded_reference, out.alignment.aligned.labels, out.event_mask);
    out.trace.observations = observations(out.alignment.aligned.labels, out.trace.distances, alphabet);
    return out;
}

FoldOutcome run_fold(std::span<const SampledSequence> cohort, std::size_t held_out, const PipelineOptions& opts,
                     const CostMatrix* costs) {
    if (held_out >= cohort.size()) throw ConfigError("held-out index out of range");
    std::vector<SampledSequence> train;
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < cohort.size(); ++s)
        if (s != held_out) {
            train.push_back(cohort[s]);
            members.push_back(s);
        }
    std::optional<std::size_t> init;
    if (costs) {
        if (costs->size() != cohort.size()) throw ConfigError("cost matrix does not match the cohort");
        CostMatrix sub(members.size(), std::vector<long>(members.size()));
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = 0; b < members.size(); ++b) sub[a][b] = (*costs)[members[a]][members[b]];
        init = medoid_index(sub);
    }
    const auto ts = prepare_training(train, opts, init);
    const auto detector = train_detector(ts, opts);
    const auto test = trace_against(ts.standard, cohort[held_out], ts.alphabet);

    FoldOutcome out;
    out.predicted = to_deviation_states(decode(detector.model, test.trace.observations, opts.decode_mode).states);
    out.result = make_fold_result(cohort[held_out].procedure_id, cohort[held_out].rate,
                                  confusion(test.trace.true_states, out.predicted));

    for (std::size_t s = 0; s < ts.traces.size(); ++s) {
        const auto& labels = ts.alignment.aligned[s].labels;
        const auto& tr = ts.traces[s];
        for (std::size_t t = 0; t < labels.size(); ++t)
            ++out.errors.training_labels[{labels[t], tr.distances[t]}][static_cast<std::size_t>(tr.true_states[t])];
    }
    const auto& labels = test.alignment.aligned.labels;
    out.errors.test.reserve(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t)
        out.errors.test.push_back({{labels[t], test.trace.distances[t]}, test.trace.true_states[t], out.predicted[t]});
    return out;
}

RateEvaluation evaluate_rate(std::span<const ContinuousSPM> cohort, SamplingRate rate, const PipelineOptions& opts,
                             std::size_t jobs) {
    if (cohort.size() < 3) throw ConfigError("leave-one-out needs at least 3 procedures");
    std::vector<SampledSequence> sampled;
    for (const auto& spm : cohort) sampled.push_back(sample(spm, rate));

    // Pairwise costs are shared by every fold's medoid search.
    const std::size_t n = sampled.size();
    CostMatrix costs(n, std::vector<long>(n, 0));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
        const auto [a, b] = pairs[k];
        costs[a][b] = costs[b][a] = dtw_cost(sampled[a].labels, sampled[b].labels);
    });

    std::vector<FoldResult> results(cohort.size());
    std::vector<FoldErrorInput> error_inputs(cohort.size());
    parallel_for(cohort.size(), jobs, [&](std::size_t i) {
        try {
            auto f = run_fold(sampled, i, opts, &costs);
            results[i] = std::move(f.result);
            error_inputs[i] = std::move(f.errors);
        } catch (...) {
            rethrow_annotated(std::current_exception(),
                              "fold " + cohort[i].procedure_id + " at " + rate.label() + " Hz: ");
        }
    });

    RateEvaluation ev;
    ev.rate = rate;
    ev.folds = std::move(results);
    ev.summary = aggregate(ev.folds);
    ev.errors = categorize_errors(error_inputs);
    return ev;
}

std::vector<TrendRow> trend_tests(std::span<const RateEvaluation> rates) {
    std::vector<TrendRow> rows;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        std::vector<double> x, y;
        for (const auto& r : rates)
            if (const auto& mean = r.summary.metrics[m].mean) {
                x.push_back(r.rate.hz());
                y.push_back(*mean);
            }
        TrendRow row{static_cast<Metric>(m), x.size(), {}};
        if (x.size() >= 4) row.result = kendall_tau_trend(x, y);
        rows.push_back(row);
    }
    return rows;
}

std::array<std::uint64_t, kStateCount> state_mix(std::span<const ContinuousSPM> cohort, SamplingRate rate,
                                                 const PipelineOptions& opts) {
    std::vector<SampledSequence> sampled;
    for (const auto& spm : cohort) sampled.push_back(sample(spm, rate));
    const auto ts = prepare_training(sampled, opts);
    std::array<std::uint64_t, kStateCount> counts{};
    for (const auto& tr : ts.traces)
        for (auto s : tr.true_states) ++counts[static_cast<std::size_t>(s)];
    return counts;
}

}  // namespace sdev
