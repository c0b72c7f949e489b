#include "cohort_io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "error.hpp"
#include "fileutil.hpp"

namespace sdev {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

std::string general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void put_activity(std::ostringstream& out, const Activity& a, const Vocabulary& v) {
    out << csv_escape(v.name(Dimension::Verb, a.verb())) << ',' << csv_escape(v.name(Dimension::Instrument, a.instrument()))
        << ',' << csv_escape(v.name(Dimension::Target, a.target()));
}

const char* kMetricHeader = "accuracy,recall_no_deviation,recall_context_deviation,recall_event_deviation,"
                            "precision_no_deviation,precision_context_deviation,precision_event_deviation";

}  // namespace

Cohort load_cohort(const fs::path& manifest) {
    if (!fs::is_regular_file(manifest)) throw ConfigError("manifest not found: " + manifest.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, manifest.string() + ": " + e.what());
    }
    const fs::path base = manifest.parent_path();
    Cohort c;
    bool grow = true;
    try {
        if (j.contains("vocabulary")) {
            c.vocabulary = Vocabulary::from_json(read_file(base / j.at("vocabulary").get<std::string>()));
            grow = false;
        }
        std::set<std::string> ids;
        for (const auto& p : j.at("procedures")) {
            const auto id = p.at("id").get<std::string>();
            if (!ids.insert(id).second) throw ParseError(0, "duplicate procedure id " + id);
            const fs::path act_path = base / p.at("activities").get<std::string>();
            std::ifstream act(act_path);
            if (!act) throw IoError("cannot open " + act_path.string());
            std::optional<std::ifstream> ev;
            if (p.contains("events")) {
                const fs::path ev_path = base / p.at("events").get<std::string>();
                ev.emplace(ev_path);
                if (!*ev) throw IoError("cannot open " + ev_path.string());
            }
            try {
                c.procedures.push_back(parse_annotations(id, act, ev ? &*ev : nullptr, c.vocabulary, grow));
            } catch (const ParseError& e) {
                throw ParseError(0, "procedure " + id + ": " + e.what());
            } catch (const VocabularyMismatch& e) {
                throw VocabularyMismatch("procedure " + id + ": " + e.what());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, manifest.string() + ": " + e.what());
    }
    if (c.procedures.empty()) throw ConfigError("manifest lists no procedures");
    return c;
}

void write_cohort(const fs::path& dir, const Cohort& cohort) {
    nlohmann::ordered_json j;
    j["vocabulary"] = "vocabulary.json";
    auto procs = nlohmann::ordered_json::array();
    for (const auto& spm : cohort.procedures) {
        const std::string act = spm.procedure_id + "_activities.csv";
        const std::string ev = spm.procedure_id + "_events.csv";
        std::ostringstream a, e;
        write_activity_csv(a, spm, cohort.vocabulary);
        write_event_csv(e, spm);
        write_file_atomic(dir / act, a.str());
        write_file_atomic(dir / ev, e.str());
        procs.push_back({{"id", spm.procedure_id}, {"activities", act}, {"events", ev}});
    }
    j["procedures"] = std::move(procs);
    write_file_atomic(dir / "vocabulary.json", cohort.vocabulary.to_json());
    write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

std::string sampled_csv(const SampledSequence& seq, const Vocabulary& vocab) {
    std::ostringstream out;
    out << "index,time_s,verb,instrument,target,event\n";
    for (std::size_t k = 0; k < seq.size(); ++k) {
        out << k << ',' << fixed(double(k) * double(seq.rate.den) / double(seq.rate.num)) << ',';
        put_activity(out, seq.labels[k], vocab);
        out << ',' << int(seq.event_mask[k]) << '\n';
    }
    return out.str();
}

std::string aligned_csv(std::span<const AlignedSequence> aligned, const Vocabulary& vocab) {
    std::ostringstream out;
    out << 't';
    for (const auto& a : aligned)
        for (const char* dim : {"verb", "instrument", "target"}) out << ',' << csv_escape(a.procedure_id + "_" + dim);
    out << '\n';
    const std::size_t n = aligned.empty() ? 0 : aligned.front().size();
    for (std::size_t t = 0; t < n; ++t) {
        out << t;
        for (const auto& a : aligned) {
            out << ',';
            put_activity(out, a.labels.at(t), vocab);
        }
        out << '\n';
    }
    return out.str();
}

std::string standard_csv(const StandardProcess& standard, const Vocabulary& vocab) {
    std::ostringstream out;
    out << "t,verb,instrument,target,support\n";
    for (std::size_t t = 0; t < standard.size(); ++t) {
        out << t << ',';
        put_activity(out, standard.labels[t], vocab);
        out << ',' << standard.support[t] << '\n';
    }
    return out.str();
}

std::string folds_csv(std::span<const RateEvaluation> rates) {
    std::ostringstream out;
    out << "rate_hz,procedure_id,instants," << kMetricHeader;
    for (std::size_t i = 0; i < kStateCount; ++i)
        for (std::size_t k = 0; k < kStateCount; ++k) out << ",n_" << i << k;
    out << '\n';
    for (const auto& r : rates)
        for (const auto& f : r.folds) {
            out << r.rate.label() << ',' << csv_escape(f.procedure_id) << ',' << f.matrix.total();
            for (std::size_t m = 0; m < kMetricCount; ++m) out << ',' << fixed(metric_value(f, static_cast<Metric>(m)));
            for (const auto& row : f.matrix.counts)
                for (auto c : row) out << ',' << c;
            out << '\n';
        }
    return out.str();
}

std::string summary_csv(std::span<const RateEvaluation> rates) {
    std::ostringstream out;
    out << "rate_hz,folds,metric,mean,sd,ci_low,ci_high,defined,undefined\n";
    for (const auto& r : rates)
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            const auto& s = r.summary.metrics[m];
            out << r.rate.label() << ',' << r.summary.folds << ',' << metric_name(static_cast<Metric>(m)) << ','
                << fixed(s.mean) << ',' << fixed(s.sd) << ',' << fixed(s.ci_low) << ',' << fixed(s.ci_high) << ','
                << s.defined << ',' << s.undefined << '\n';
        }
    return out.str();
}

std::string trends_csv(std::span<const TrendRow> rows) {
    std::ostringstream out;
    out << "metric,points,defined,tau,p_value,exact,alpha,significant\n";
    for (const auto& row : rows) {
        const auto& k = row.result;
        out << metric_name(row.metric) << ',' << row.points << ',' << (k.defined ? 1 : 0) << ','
            << (k.defined ? fixed(k.tau) : "") << ',' << (k.defined ? general(k.p_value) : "") << ','
            << (k.exact ? 1 : 0) << ',' << general(kTrendSignificance) << ',' << (k.significant ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string errors_csv(std::span<const RateEvaluation> rates) {
    std::ostringstream out;
    out << "rate_hz";
    for (std::size_t c = 0; c < kErrorCategoryCount; ++c) out << ',' << to_string(static_cast<ErrorCategory>(c));
    out << ",total\n";
    for (const auto& r : rates) {
        out << r.rate.label();
        for (auto n : r.errors.counts) out << ',' << n;
        out << ',' << r.errors.total() << '\n';
    }
    return out.str();
}

}  // namespace sdev
