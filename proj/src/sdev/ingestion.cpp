#include "ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>

#include "error.hpp"

namespace sdev {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// floor(a / b) for b > 0.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && (a < 0)) --q;
    return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

struct Row {
    std::size_t line;
    std::vector<std::string> fields;
};

// Reads non-blank records after checking the header.
std::vector<Row> read_rows(std::istream& in, const std::vector<std::string_view>& header) {
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        for (auto& f : fields) f = std::string(trim(f));
        if (!seen_header) {
            if (fields.size() != header.size() || !std::equal(fields.begin(), fields.end(), header.begin()))
                throw ParseError(lineno, "unexpected header");
            seen_header = true;
            continue;
        }
        if (fields.size() != header.size())
            throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
        rows.push_back({lineno, std::move(fields)});
    }
    if (!seen_header) throw ParseError(lineno, "missing header");
    return rows;
}

Micros field_seconds(const Row& row, std::size_t i) {
    try {
        return parse_seconds(row.fields[i]);
    } catch (const ParseError& e) {
        throw ParseError(row.line, e.what());
    }
}

template <class Interval>
void check_sorted_disjoint(const std::vector<Interval>& xs, const std::vector<std::size_t>& lines,
                           const char* what) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t line = lines.empty() ? 0 : lines[i];
        if (xs[i].end <= xs[i].start) throw ParseError(line, std::string(what) + " interval has end <= start");
        if (xs[i].start < 0) throw ParseError(line, std::string(what) + " interval starts before 0");
        if (i > 0 && xs[i].start < xs[i - 1].end) throw ParseError(line, std::string(what) + " intervals overlap");
    }
}

template <class Interval>
std::vector<Interval> sort_by_start(std::vector<std::pair<Interval, std::size_t>>& tagged,
                                    std::vector<std::size_t>& lines) {
    std::stable_sort(tagged.begin(), tagged.end(),
                     [](const auto& a, const auto& b) { return a.first.start < b.first.start; });
    std::vector<Interval> out;
    out.reserve(tagged.size());
    lines.clear();
    for (auto& [iv, line] : tagged) {
        out.push_back(std::move(iv));
        lines.push_back(line);
    }
    return out;
}

}  // namespace

Micros parse_seconds(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw ParseError(0, "empty time value");
    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw ParseError(0, "malformed time value");
    if (frac.size() > 6) throw ParseError(0, "time value has more than 6 fractional digits");
    std::int64_t secs = 0;
    if (!whole.empty()) {
        auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), secs);
        if (ec != std::errc{} || p != whole.data() + whole.size()) throw ParseError(0, "malformed time value");
    }
    std::int64_t micros = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        micros *= 10;
        if (i < frac.size()) {
            if (frac[i] < '0' || frac[i] > '9') throw ParseError(0, "malformed time value");
            micros += frac[i] - '0';
        }
    }
    if (secs > 1'000'000'000) throw ParseError(0, "time value out of range");
    const Micros t = secs * kMicrosPerSecond + micros;
    return negative ? -t : t;
}

std::string format_seconds(Micros t) {
    const bool negative = t < 0;
    if (negative) t = -t;
    std::string s = std::to_string(t / kMicrosPerSecond);
    Micros frac = t % kMicrosPerSecond;
    if (frac != 0) {
        std::string f = std::to_string(frac);
        f.insert(0, 6 - f.size(), '0');
        while (f.back() == '0') f.pop_back();
        s += "." + f;
    }
    return negative ? "-" + s : s;
}

SamplingRate SamplingRate::from_hz(double hz) {
    if (!(hz > 0) || !std::isfinite(hz)) throw ConfigError("sampling rate must be positive");
    for (std::int64_t den = 1; den <= 1000; ++den) {
        const double num = hz * double(den);
        const double rounded = std::round(num);
        if (std::abs(num - rounded) < 1e-9 * std::max(1.0, num) && rounded >= 1) {
            const auto n = static_cast<std::int64_t>(rounded);
            const auto g = std::gcd(n, den);
            return {n / g, den / g};
        }
    }
    throw ConfigError("sampling rate is not a simple rational number");
}

SamplingRate SamplingRate::parse(std::string_view text) {
    text = trim(text);
    try {
        // Reuse the exact decimal parser: "12.5" -> 12500000 / 1000000.
        const Micros scaled = parse_seconds(text);
        if (scaled <= 0) throw ConfigError("sampling rate must be positive");
        const auto g = std::gcd(scaled, kMicrosPerSecond);
        return {scaled / g, kMicrosPerSecond / g};
    } catch (const ParseError&) {
        throw ConfigError("invalid sampling rate '" + std::string(text) + "'");
    }
}

std::string SamplingRate::label() const {
    if (den == 1) return std::to_string(num);
    // Exact when den divides a power of ten; otherwise a rounded decimal.
    std::int64_t d = den;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    if (d == 1) {
        std::int64_t scale = 1;
        while (scale % den != 0) scale *= 10;
        return format_seconds(num * (kMicrosPerSecond / scale) * (scale / den));
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", hz());
    return buf;
}

bool SamplingRate::sample_at_or_after(std::int64_t k, Micros t) const {
    // k * den / num >= t / 1e6
    return k * den * kMicrosPerSecond >= t * num;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r' && ch != '\n') {
            cur += ch;
        }
    }
    if (quoted) throw ParseError(0, "unterminated quoted field");
    out.push_back(std::move(cur));
    return out;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string s = "\"";
    for (char c : field) {
        if (c == '"') s += '"';
        s += c;
    }
    return s + "\"";
}

std::vector<ActivityInterval> parse_activity_csv(std::istream& in, Vocabulary& vocab, bool grow) {
    const auto rows = read_rows(in, {"start_s", "end_s", "verb", "instrument", "target"});
    std::vector<std::pair<ActivityInterval, std::size_t>> tagged;
    for (const auto& row : rows) {
        ActivityInterval iv;
        iv.start = field_seconds(row, 0);
        iv.end = field_seconds(row, 1);
        if (iv.end <= iv.start) throw ParseError(row.line, "activity interval has end <= start");
        try {
            iv.activity = vocab.activity(row.fields[2], row.fields[3], row.fields[4], grow);
        } catch (const VocabularyMismatch& e) {
            throw ParseError(row.line, e.what());
        }
        tagged.emplace_back(iv, row.line);
    }
    std::vector<std::size_t> lines;
    auto out = sort_by_start(tagged, lines);
    check_sorted_disjoint(out, lines, "activity");
    return out;
}

std::vector<EventInterval> parse_event_csv(std::istream& in) {
    const auto rows = read_rows(in, {"start_s", "end_s", "kind"});
    std::vector<std::pair<EventInterval, std::size_t>> tagged;
    for (const auto& row : rows) {
        EventInterval ev{field_seconds(row, 0), field_seconds(row, 1), row.fields[2]};
        if (ev.end <= ev.start) throw ParseError(row.line, "event interval has end <= start");
        tagged.emplace_back(std::move(ev), row.line);
    }
    std::vector<std::size_t> lines;
    auto out = sort_by_start(tagged, lines);
    check_sorted_disjoint(out, lines, "event");
    return out;
}

void validate(const ContinuousSPM& spm) {
    check_sorted_disjoint(spm.activities, {}, "activity");
    check_sorted_disjoint(spm.events, {}, "event");
    if (!spm.events.empty() && spm.events.back().end > spm.duration())
        throw ParseError(0, "event interval extends past the end of the timeline");
}

ContinuousSPM parse_annotations(std::string procedure_id, std::istream& activities, std::istream* events,
                                Vocabulary& vocab, bool grow) {
    ContinuousSPM spm;
    spm.procedure_id = std::move(procedure_id);
    spm.activities = parse_activity_csv(activities, vocab, grow);
    if (events) spm.events = parse_event_csv(*events);
    validate(spm);
    return spm;
}

void write_activity_csv(std::ostream& out, const ContinuousSPM& spm, const Vocabulary& vocab) {
    out << "start_s,end_s,verb,instrument,target\n";
    for (const auto& iv : spm.activities) {
        out << format_seconds(iv.start) << ',' << format_seconds(iv.end) << ','
            << csv_escape(vocab.name(Dimension::Verb, iv.activity.verb())) << ','
            << csv_escape(vocab.name(Dimension::Instrument, iv.activity.instrument())) << ','
            << csv_escape(vocab.name(Dimension::Target, iv.activity.target())) << '\n';
    }
}

void write_event_csv(std::ostream& out, const ContinuousSPM& spm) {
    out << "start_s,end_s,kind\n";
    for (const auto& ev : spm.events)
        out << format_seconds(ev.start) << ',' << format_seconds(ev.end) << ',' << csv_escape(ev.kind) << '\n';
}

SampledSequence sample(const ContinuousSPM& spm, SamplingRate rate) {
    if (rate.num <= 0 || rate.den <= 0) throw ConfigError("sampling rate must be positive");
    if (spm.activities.empty()) throw ParseError(0, "cannot sample an empty timeline (" + spm.procedure_id + ")");

    // Indices of the first grid point at or after t: ceil(t * num / (den * 1e6)).
    const std::int64_t scale = rate.den * kMicrosPerSecond;
    auto first_at_or_after = [&](Micros t) { return ceil_div(t * rate.num, scale); };

    const std::int64_t count = floor_div(spm.duration() * rate.num, scale) + 1;
    SampledSequence seq;
    seq.procedure_id = spm.procedure_id;
    seq.rate = rate;
    seq.labels.assign(static_cast<std::size_t>(count), kIdleActivity);
    seq.event_mask.assign(static_cast<std::size_t>(count), 0);

    for (const auto& iv : spm.activities) {
        const auto lo = std::max<std::int64_t>(0, first_at_or_after(iv.start));
        const auto hi = std::min<std::int64_t>(count, first_at_or_after(iv.end));
        for (auto k = lo; k < hi; ++k) seq.labels[static_cast<std::size_t>(k)] = iv.activity;
    }
    for (const auto& ev : spm.events) {
        const auto lo = std::max<std::int64_t>(0, first_at_or_after(ev.start));
        const auto hi = std::min<std::int64_t>(count, first_at_or_after(ev.end));
        for (auto k = lo; k < hi; ++k) seq.event_mask[static_cast<std::size_t>(k)] = 1;
    }
    return seq;
}

ContinuousSPM unsample(const SampledSequence& seq) {
    ContinuousSPM spm;
    spm.procedure_id = seq.procedure_id;
    const auto& r = seq.rate;
    auto time_of = [&](std::size_t k) {
        const std::int64_t num = static_cast<std::int64_t>(k) * r.den * kMicrosPerSecond;
        if (num % r.num != 0) throw ParseError(0, "unsample: grid point is not a whole microsecond");
        return num / r.num;
    };
    const std::size_t n = seq.labels.size();
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && seq.labels[j] == seq.labels[i]) ++j;
        if (!seq.labels[i].is_idle()) spm.activities.push_back({time_of(i), time_of(j), seq.labels[i]});
        i = j;
    }
    for (std::size_t i = 0; i < n;) {
        if (!seq.event_mask[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && seq.event_mask[j]) ++j;
        spm.events.push_back({time_of(i), time_of(j), "event"});
        i = j;
    }
    return spm;
}

}  // namespace sdev
