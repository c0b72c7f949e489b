#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "activity.hpp"
#include "consensus.hpp"
#include "ingestion.hpp"

namespace sdev {

// Rows are true states, columns predictions.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kStateCount>, kStateCount> counts{};

    void add(DeviationState truth, DeviationState predicted) {
        ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    }
    std::uint64_t total() const;
    std::uint64_t correct() const;
    std::uint64_t row(std::size_t k) const;
    std::uint64_t column(std::size_t k) const;
};

ConfusionMatrix confusion(std::span<const DeviationState> truth, std::span<const DeviationState> predicted);

double accuracy(const ConfusionMatrix& m);
// nullopt when the true class (recall) or predicted class (precision) is empty.
std::optional<double> recall(const ConfusionMatrix& m, DeviationState k);
std::optional<double> precision(const ConfusionMatrix& m, DeviationState k);

struct FoldResult {
    std::string procedure_id;
    SamplingRate rate;
    ConfusionMatrix matrix;
    double accuracy = 0;
    std::array<std::optional<double>, kStateCount> recall;
    std::array<std::optional<double>, kStateCount> precision;
};

FoldResult make_fold_result(std::string procedure_id, SamplingRate rate, const ConfusionMatrix& m);

// The seven trend-tested metrics, in report order.
enum class Metric : std::uint8_t {
    Accuracy,
    RecallNoDeviation,
    RecallContextDeviation,
    RecallEventDeviation,
    PrecisionNoDeviation,
    PrecisionContextDeviation,
    PrecisionEventDeviation,
};
inline constexpr std::size_t kMetricCount = 7;
const char* metric_name(Metric m) noexcept;
std::optional<double> metric_value(const FoldResult& r, Metric m);

// Mean with a Student-t confidence interval across folds. Undefined values
// are excluded and counted; the interval needs two defined values.
struct MetricSummary {
    std::size_t defined = 0;
    std::size_t undefined = 0;
    std::optional<double> mean;
    std::optional<double> sd;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};

MetricSummary summarize(std::span<const std::optional<double>> values, double confidence = 0.95);

struct RateSummary {
    SamplingRate rate;
    std::size_t folds = 0;
    std::array<MetricSummary, kMetricCount> metrics;
};

RateSummary aggregate(std::span<const FoldResult> folds);

// Categories of observations falsely decoded as EventDeviation.
enum class ErrorCategory : std::uint8_t { RarelyWrong, Untrained, CorrectlyTrained, Other };
inline constexpr std::size_t kErrorCategoryCount = 4;
const char* to_string(ErrorCategory c) noexcept;

struct ErrorBreakdown {
    std::array<std::uint64_t, kErrorCategoryCount> counts{};
    std::uint64_t total() const;
};

struct TestObservation {
    ObservationSymbol type;
    DeviationState truth;
    DeviationState predicted;
};

// Everything one held-out fold contributes to the error analysis.
struct FoldErrorInput {
    std::vector<TestObservation> test;
    // True-state histogram of each observation type in the fold's training data.
    std::map<ObservationSymbol, std::array<std::uint64_t, kStateCount>> training_labels;
};

// Precedence Untrained -> RarelyWrong -> CorrectlyTrained -> Other. A type is
// rarely wrong when under `rare_threshold` of its test occurrences, pooled
// over all folds given, are misclassified.
ErrorBreakdown categorize_errors(std::span<const FoldErrorInput> folds, double rare_threshold = 0.01);

}  // namespace sdev
