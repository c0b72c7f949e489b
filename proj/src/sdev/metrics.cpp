#include "metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "error.hpp"

namespace sdev {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (const auto& r : counts)
        for (auto v : r) s += v;
    return s;
}

std::uint64_t ConfusionMatrix::correct() const {
    std::uint64_t s = 0;
    for (std::size_t k = 0; k < kStateCount; ++k) s += counts[k][k];
    return s;
}

std::uint64_t ConfusionMatrix::row(std::size_t k) const {
    std::uint64_t s = 0;
    for (auto v : counts[k]) s += v;
    return s;
}

std::uint64_t ConfusionMatrix::column(std::size_t k) const {
    std::uint64_t s = 0;
    for (const auto& r : counts) s += r[k];
    return s;
}

ConfusionMatrix confusion(std::span<const DeviationState> truth, std::span<const DeviationState> predicted) {
    if (truth.size() != predicted.size()) throw ConfigError("confusion: length mismatch");
    ConfusionMatrix m;
    for (std::size_t t = 0; t < truth.size(); ++t) m.add(truth[t], predicted[t]);
    return m;
}

double accuracy(const ConfusionMatrix& m) {
    const auto n = m.total();
    return n ? double(m.correct()) / double(n) : 0.0;
}

std::optional<double> recall(const ConfusionMatrix& m, DeviationState k) {
    const auto i = static_cast<std::size_t>(k);
    const auto r = m.row(i);
    if (r == 0) return std::nullopt;
    return double(m.counts[i][i]) / double(r);
}

std::optional<double> precision(const ConfusionMatrix& m, DeviationState k) {
    const auto i = static_cast<std::size_t>(k);
    const auto c = m.column(i);
    if (c == 0) return std::nullopt;
    return double(m.counts[i][i]) / double(c);
}

FoldResult make_fold_result(std::string procedure_id, SamplingRate rate, const ConfusionMatrix& m) {
    FoldResult r;
    r.procedure_id = std::move(procedure_id);
    r.rate = rate;
    r.matrix = m;
    r.accuracy = accuracy(m);
    for (std::size_t k = 0; k < kStateCount; ++k) {
        r.recall[k] = recall(m, static_cast<DeviationState>(k));
        r.precision[k] = precision(m, static_cast<DeviationState>(k));
    }
    return r;
}

const char* metric_name(Metric m) noexcept {
    switch (m) {
        case Metric::Accuracy: return "accuracy";
        case Metric::RecallNoDeviation: return "recall_nd";
        case Metric::RecallContextDeviation: return "recall_cd";
        case Metric::RecallEventDeviation: return "recall_ed";
        case Metric::PrecisionNoDeviation: return "precision_nd";
        case Metric::PrecisionContextDeviation: return "precision_cd";
        case Metric::PrecisionEventDeviation: return "precision_ed";
    }
    return "?";
}

std::optional<double> metric_value(const FoldResult& r, Metric m) {
    const auto i = static_cast<std::size_t>(m);
    if (m == Metric::Accuracy) return r.accuracy;
    if (i <= 3) return r.recall[i - 1];
    return r.precision[i - 4];
}

MetricSummary summarize(std::span<const std::optional<double>> values, double confidence) {
    MetricSummary s;
    double sum = 0;
    for (const auto& v : values) {
        if (v) {
            ++s.defined;
            sum += *v;
        } else {
            ++s.undefined;
        }
    }
    if (s.defined == 0) return s;
    const double mean = sum / double(s.defined);
    s.mean = mean;
    if (s.defined < 2) return s;
    double ss = 0;
    for (const auto& v : values)
        if (v) ss += (*v - mean) * (*v - mean);
    const double sd = std::sqrt(ss / double(s.defined - 1));
    s.sd = sd;
    const boost::math::students_t dist(double(s.defined - 1));
    const double q = boost::math::quantile(dist, 0.5 + confidence / 2);
    const double half = q * sd / std::sqrt(double(s.defined));
    s.ci_low = mean - half;
    s.ci_high = mean + half;
    return s;
}

RateSummary aggregate(std::span<const FoldResult> folds) {
    RateSummary out;
    if (folds.empty()) return out;
    out.rate = folds.front().rate;
    out.folds = folds.size();
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        std::vector<std::optional<double>> values;
        values.reserve(folds.size());
        for (const auto& f : folds) values.push_back(metric_value(f, static_cast<Metric>(m)));
        out.metrics[m] = summarize(values);
    }
    return out;
}

const char* to_string(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::RarelyWrong: return "rarely_wrong";
        case ErrorCategory::Untrained: return "untrained";
        case ErrorCategory::CorrectlyTrained: return "correctly_trained";
        case ErrorCategory::Other: return "other";
    }
    return "?";
}

std::uint64_t ErrorBreakdown::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

ErrorBreakdown categorize_errors(std::span<const FoldErrorInput> folds, double rare_threshold) {
    // Pooled per-type occurrence and misclassification counts.
    std::map<ObservationSymbol, std::pair<std::uint64_t, std::uint64_t>> rates;
    for (const auto& f : folds)
        for (const auto& o : f.test) {
            auto& [seen, wrong] = rates[o.type];
            ++seen;
            if (o.truth != o.predicted) ++wrong;
        }

    ErrorBreakdown out;
    constexpr auto kEd = static_cast<std::size_t>(DeviationState::EventDeviation);
    for (const auto& f : folds)
        for (const auto& o : f.test) {
            if (o.predicted != DeviationState::EventDeviation || o.truth == DeviationState::EventDeviation) continue;
            ErrorCategory cat = ErrorCategory::Other;
            const auto hist = f.training_labels.find(o.type);
            const auto& [seen, wrong] = rates.at(o.type);
            if (hist == f.training_labels.end()) {
                cat = ErrorCategory::Untrained;
            } else if (double(wrong) < rare_threshold * double(seen)) {
                cat = ErrorCategory::RarelyWrong;
            } else {
                const auto& h = hist->second;
                bool ed_majority = true;
                for (std::size_t k = 0; k < kStateCount; ++k)
                    if (k != kEd && h[k] >= h[kEd]) ed_majority = false;
                if (ed_majority) cat = ErrorCategory::CorrectlyTrained;
            }
            ++out.counts[static_cast<std::size_t>(cat)];
        }
    return out;
}

}  // namespace sdev
