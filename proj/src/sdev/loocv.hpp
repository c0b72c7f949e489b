#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "consensus.hpp"
#include "hsmm.hpp"
#include "hsmm_io.hpp"
#include "ingestion.hpp"
#include "kendall.hpp"
#include "metrics.hpp"
#include "nlts.hpp"

namespace sdev {

struct PipelineOptions {
    DbaOptions dba;
    double max_duration_factor = 1.5;
    double smoothing = 1.0;
    bool em = false;
    EmOptions em_options;
    DecodeMode decode_mode = DecodeMode::Viterbi;
};

// The rates swept by default: 2..12 Hz plus 12.5 Hz.
std::vector<SamplingRate> default_rates();

// Everything derived from the training procedures of one fold.
struct TrainingSet {
    CohortAlignment alignment;
    StandardProcess standard;
    std::vector<DeviationTrace> traces;
    ObservationAlphabet alphabet;
};

// Aligns the cohort, builds the standard process and the training traces.
// The observation alphabet is grown from these sequences only.
// `init` selects the DBA starting sequence (the medoid when unset).
TrainingSet prepare_training(std::span<const SampledSequence> cohort, const PipelineOptions& opts = {},
                             std::optional<std::size_t> init = std::nullopt);

Detector train_detector(const TrainingSet& training, const PipelineOptions& opts, std::uint64_t vocabulary_hash = 0);

struct TestTrace {
    ReferenceAlignment alignment;
    std::vector<std::uint8_t> event_mask;  // warped
    DeviationTrace trace;
};

// Aligns a held-out sequence to the standard process and derives its trace;
// tuples missing from `alphabet` become kUnseen.
TestTrace trace_against(const StandardProcess& standard, const SampledSequence& seq,
                        const ObservationAlphabet& alphabet);

struct FoldOutcome {
    FoldResult result;
    FoldErrorInput errors;
    std::vector<DeviationState> predicted;
};

// Holds out cohort[held_out], trains on the rest, decodes the held-out trace.
// `costs`, when given, holds the pairwise dtw costs of the whole cohort and
// saves recomputing the training medoid.
FoldOutcome run_fold(std::span<const SampledSequence> cohort, std::size_t held_out, const PipelineOptions& opts,
                     const CostMatrix* costs = nullptr);

struct RateEvaluation {
    SamplingRate rate;
    std::vector<FoldResult> folds;
    RateSummary summary;
    ErrorBreakdown errors;
};

// Leave-one-out over the cohort at one rate, with `jobs` worker threads.
// Results are ordered by procedure regardless of scheduling.
RateEvaluation evaluate_rate(std::span<const ContinuousSPM> cohort, SamplingRate rate, const PipelineOptions& opts,
                             std::size_t jobs = 1);

struct TrendRow {
    Metric metric;
    std::size_t points = 0;
    KendallResult result;  // undefined with fewer than 4 rates carrying a mean
};

// One Kendall test per metric of the fold-mean against the sampling rate.
std::vector<TrendRow> trend_tests(std::span<const RateEvaluation> rates);

// True-state counts of the whole cohort aligned jointly at `rate`.
std::array<std::uint64_t, kStateCount> state_mix(std::span<const ContinuousSPM> cohort, SamplingRate rate,
                                                 const PipelineOptions& opts = {});

}  // namespace sdev
