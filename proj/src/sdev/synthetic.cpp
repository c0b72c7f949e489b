#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <random>

#include "error.hpp"

namespace sdev {

namespace {

// Default event duration range at the default event share.
constexpr double kDefaultEventMin = 4.0;
constexpr double kDefaultEventMax = 30.0;
constexpr double kDefaultEventShare = 0.0573;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Portable draws on top of mt19937_64 (the std distributions are
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * double(n)) % n; }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

private:
    std::mt19937_64 engine_;
};

Micros to_micros(double seconds) {
    const auto ms = std::max<long long>(100, std::llround(seconds * 1000.0));
    return ms * 1000;
}

Activity pick_other(Rng& rng, const std::vector<Activity>& pool, const Activity& avoid) {
    for (;;) {
        const Activity& a = pool[rng.index(pool.size())];
        if (a != avoid || pool.size() == 1) return a;
    }
}

ProcedureLog sample_log(const GeneratorConfig& cfg, std::size_t index) {
    Rng rng(cfg.seed * 0x100000001b3ull + index + 1);
    ProcedureLog log;
    char id[16];
    std::snprintf(id, sizeof id, "P%02zu", index + 1);
    log.procedure_id = id;

    const double p = cfg.perturbation_rate;
    for (std::size_t k = 0; k < cfg.base.size(); ++k) {
        const auto& step = cfg.base[k];
        const double dur = step.mean_s * rng.uniform(1 - step.jitter, 1 + step.jitter);
        Piece piece{PieceKind::Keep, k, {}, to_micros(dur), 0};
        bool insert_after = false;
        if (rng.uniform() < p) {
            switch (rng.index(3)) {
                case 0:
                    piece.kind = PieceKind::Substitute;
                    piece.activity = pick_other(rng, cfg.filler, step.activity);
                    break;
                case 1:
                    piece.kind = PieceKind::Delete;
                    piece.duration = 0;
                    break;
                default: insert_after = true; break;
            }
        }
        log.pieces.push_back(piece);
        if (insert_after) {
            const auto& ref = cfg.base[std::min(k + 1, cfg.base.size() - 1)];
            log.pieces.push_back({PieceKind::Insert, k, pick_other(rng, cfg.filler, step.activity),
                                  to_micros(ref.mean_s * rng.uniform(1 - ref.jitter, 1 + ref.jitter)), 0});
        }
        if (rng.uniform() < cfg.idle_gap_rate)
            log.pieces.push_back({PieceKind::Gap, k, {}, to_micros(rng.uniform(0.2, cfg.idle_gap_max_s)), 0});
    }

    const auto& ev = cfg.events;
    const std::size_t count = ev.max_count == 0 ? 0 : rng.between(ev.min_count, ev.max_count);
    for (std::size_t e = 0; e < count; ++e) {
        const double total = rng.uniform(ev.min_duration_s, ev.max_duration_s);
        std::vector<Piece> block;
        double used = 0;
        Activity last{};
        while (used < total - 1e-9) {
            const Activity a = pick_other(rng, ev.response, last);
            const double d = std::min(rng.uniform(1.5, 5.0), total - used);
            block.push_back({PieceKind::Response, 0, a, to_micros(d), 0});
            used += d;
            last = a;
        }
        const std::size_t at = 1 + rng.index(log.pieces.size() - 1);
        for (auto& b : block) b.step = log.pieces[at - 1].step;
        log.pieces.insert(log.pieces.begin() + static_cast<std::ptrdiff_t>(at), block.begin(), block.end());
    }

    // Number event blocks in timeline order.
    std::size_t next_event = 0;
    for (std::size_t i = 0; i < log.pieces.size();) {
        if (log.pieces[i].kind != PieceKind::Response) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < log.pieces.size() && log.pieces[j].kind == PieceKind::Response) ++j;
        for (std::size_t k = i; k < j; ++k) log.pieces[k].event = next_event;
        ++next_event;
        i = j;
    }
    log.event_kinds.assign(next_event, ev.kind);
    return log;
}

std::vector<Activity> make_pool(Vocabulary& v, const std::vector<std::array<const char*, 3>>& rows) {
    std::vector<Activity> out;
    for (const auto& r : rows) out.push_back(v.activity(r[0], r[1], r[2], false));
    return out;
}

}  // namespace

const char* to_string(PieceKind k) noexcept {
    switch (k) {
        case PieceKind::Keep: return "keep";
        case PieceKind::Substitute: return "substitute";
        case PieceKind::Delete: return "delete";
        case PieceKind::Insert: return "insert";
        case PieceKind::Gap: return "gap";
        case PieceKind::Response: return "response";
    }
    return "?";
}

GeneratorConfig GeneratorConfig::defaults(std::uint64_t seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    cfg.vocabulary = Vocabulary::from_lists(
        {"grasp", "cut", "coagulate", "dissect", "aspirate", "irrigate", "clip", "suture", "retract", "compress"},
        {"grasper", "monopolar_hook", "bipolar_forceps", "scissors", "suction_cannula", "irrigator", "clip_applier",
         "needle_holder", "retractor", "gauze"},
        {"rectum", "sacrum", "peritoneum", "pouch_of_douglas", "vagina", "mesh", "vessel", "fatty_tissue", "ureter",
         "promontory", "colon", "blood"});
    auto& v = cfg.vocabulary;
    cfg.filler = make_pool(v, {
                                  {"grasp", "grasper", "rectum"},
                                  {"grasp", "grasper", "peritoneum"},
                                  {"grasp", "grasper", "colon"},
                                  {"cut", "monopolar_hook", "peritoneum"},
                                  {"cut", "monopolar_hook", "pouch_of_douglas"},
                                  {"cut", "scissors", "peritoneum"},
                                  {"cut", "scissors", "fatty_tissue"},
                                  {"dissect", "monopolar_hook", "fatty_tissue"},
                                  {"dissect", "monopolar_hook", "promontory"},
                                  {"dissect", "scissors", "rectum"},
                                  {"dissect", "grasper", "pouch_of_douglas"},
                                  {"dissect", "monopolar_hook", "sacrum"},
                                  {"coagulate", "monopolar_hook", "fatty_tissue"},
                                  {"coagulate", "monopolar_hook", "peritoneum"},
                                  {"retract", "retractor", "colon"},
                                  {"retract", "grasper", "vagina"},
                                  {"retract", "retractor", "rectum"},
                                  {"retract", "grasper", "ureter"},
                                  {"clip", "clip_applier", "mesh"},
                                  {"suture", "needle_holder", "mesh"},
                                  {"suture", "needle_holder", "peritoneum"},
                                  {"grasp", "needle_holder", "mesh"},
                                  {"cut", "scissors", "mesh"},
                                  {"grasp", "grasper", "vagina"},
                              });
    cfg.events.response = make_pool(v, {
                                           {"coagulate", "bipolar_forceps", "vessel"},
                                           {"aspirate", "suction_cannula", "blood"},
                                           {"compress", "gauze", "vessel"},
                                           {"irrigate", "irrigator", "blood"},
                                       });

    // The base workflow is fixed; only the per-procedure variation depends on `seed`.
    Rng rng(0x5eedf00dull);
    Activity prev{};
    for (std::size_t k = 0; k < 61; ++k) {
        const Activity a = pick_other(rng, cfg.filler, prev);
        cfg.base.push_back({a, rng.uniform(2.0, 7.0), 0.3});
        prev = a;
    }
    cfg.perturbation_rate = 0.25;
    cfg.idle_gap_rate = 0.05;
    cfg.idle_gap_max_s = 2.0;
    cfg.events.min_count = 0;
    cfg.events.max_count = 3;
    cfg.events.min_duration_s = kDefaultEventMin;
    cfg.events.max_duration_s = kDefaultEventMax;
    cfg.cohort_size = 11;
    return cfg;
}

void GeneratorConfig::set_event_fraction(double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("event fraction must lie in [0, 1]");
    const double scale = fraction / kDefaultEventShare;
    events.min_duration_s = kDefaultEventMin * scale;
    events.max_duration_s = kDefaultEventMax * scale;
    target_mix.event = fraction;
    target_mix.none = 1.0 - target_mix.context - fraction;
}

void GeneratorConfig::validate() const {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
    };
    prob(perturbation_rate, "perturbation rate");
    prob(idle_gap_rate, "idle gap rate");
    prob(target_mix.none, "no-deviation share");
    prob(target_mix.context, "context-deviation share");
    prob(target_mix.event, "event-deviation share");
    if (std::abs(target_mix.none + target_mix.context + target_mix.event - 1.0) > 1e-9)
        throw ConfigError("state mix must sum to 1");
    if (target_mix.event > 0.5) throw ConfigError("event-deviation share above 0.5 is infeasible");
    if (cohort_size < 3) throw ConfigError("cohort size must be at least 3");
    if (base.empty()) throw ConfigError("base workflow is empty");
    if (filler.empty()) throw ConfigError("filler pool is empty");
    if (!(idle_gap_max_s > 0.2)) throw ConfigError("idle gap maximum must exceed 0.2 s");
    for (const auto& s : base) {
        if (!(s.mean_s > 0)) throw ConfigError("step durations must be positive");
        if (!(s.jitter >= 0 && s.jitter < 1)) throw ConfigError("duration jitter must lie in [0, 1)");
        if (!vocabulary.contains(s.activity) || s.activity.is_idle())
            throw ConfigError("base activity outside the vocabulary");
    }
    for (const auto& a : filler)
        if (!vocabulary.contains(a) || a.is_idle()) throw ConfigError("filler activity outside the vocabulary");
    if (events.min_count > events.max_count) throw ConfigError("event count range is empty");
    if (events.max_count > 0) {
        if (events.response.empty()) throw ConfigError("events need response activities");
        if (!(events.min_duration_s > 0 && events.min_duration_s <= events.max_duration_s))
            throw ConfigError("event duration range is invalid");
        for (const auto& a : events.response)
            if (!vocabulary.contains(a) || a.is_idle()) throw ConfigError("response activity outside the vocabulary");
    }
}

ContinuousSPM replay(const std::vector<WorkflowStep>& base, const ProcedureLog& log) {
    ContinuousSPM spm;
    spm.procedure_id = log.procedure_id;
    std::vector<std::pair<Micros, Micros>> spans(log.event_kinds.size(), {-1, -1});
    Micros t = 0;
    for (const auto& p : log.pieces) {
        Activity a{};
        switch (p.kind) {
            case PieceKind::Keep:
                if (p.step >= base.size()) throw ConfigError("replay: base step out of range");
                a = base[p.step].activity;
                break;
            case PieceKind::Substitute:
            case PieceKind::Insert:
            case PieceKind::Response: a = p.activity; break;
            case PieceKind::Delete: continue;
            case PieceKind::Gap: t += p.duration; continue;
        }
        if (p.duration <= 0) throw ConfigError("replay: non-positive piece duration");
        spm.activities.push_back({t, t + p.duration, a});
        if (p.kind == PieceKind::Response) {
            if (p.event >= spans.size()) throw ConfigError("replay: event index out of range");
            auto& s = spans[p.event];
            if (s.first < 0) s.first = t;
            s.second = t + p.duration;
        }
        t += p.duration;
    }
    for (std::size_t e = 0; e < spans.size(); ++e) {
        if (spans[e].first < 0) throw ConfigError("replay: event without response activities");
        spm.events.push_back({spans[e].first, spans[e].second, log.event_kinds[e]});
    }
    validate(spm);
    return spm;
}

GeneratedCohort generate(const GeneratorConfig& config) {
    config.validate();
    GeneratedCohort out;
    out.vocabulary = config.vocabulary;
    for (std::size_t i = 0; i < config.cohort_size; ++i) {
        out.log.push_back(sample_log(config, i));
        out.procedures.push_back(replay(config.base, out.log.back()));
    }
    return out;
}

std::string log_to_json(const GeneratedCohort& cohort, const GeneratorConfig& config) {
    const auto& v = cohort.vocabulary;
    auto act = [&](const Activity& a) {
        return nlohmann::ordered_json::array({v.name(Dimension::Verb, a.verb()), v.name(Dimension::Instrument, a.instrument()),
                                              v.name(Dimension::Target, a.target())});
    };
    nlohmann::ordered_json j;
    j["seed"] = config.seed;
    j["perturbation_rate"] = config.perturbation_rate;
    j["target_mix"] = {{"no_deviation", config.target_mix.none},
                       {"context_deviation", config.target_mix.context},
                       {"event_deviation", config.target_mix.event}};
    auto base = nlohmann::ordered_json::array();
    for (const auto& s : config.base) base.push_back({{"activity", act(s.activity)}, {"mean_s", s.mean_s}, {"jitter", s.jitter}});
    j["base_workflow"] = std::move(base);
    auto procs = nlohmann::ordered_json::array();
    for (const auto& log : cohort.log) {
        nlohmann::ordered_json p;
        p["id"] = log.procedure_id;
        p["event_kinds"] = log.event_kinds;
        auto pieces = nlohmann::ordered_json::array();
        for (const auto& piece : log.pieces) {
            nlohmann::ordered_json e;
            e["op"] = to_string(piece.kind);
            e["step"] = piece.step;
            if (piece.kind == PieceKind::Substitute || piece.kind == PieceKind::Insert ||
                piece.kind == PieceKind::Response)
                e["activity"] = act(piece.activity);
            if (piece.kind != PieceKind::Delete) e["duration_s"] = format_seconds(piece.duration);
            if (piece.kind == PieceKind::Response) e["event"] = piece.event;
            pieces.push_back(std::move(e));
        }
        p["pieces"] = std::move(pieces);
        procs.push_back(std::move(p));
    }
    j["procedures"] = std::move(procs);
    return j.dump(1);
}

std::vector<ProcedureLog> log_from_json(const std::string& text, const Vocabulary& vocab) {
    static const std::map<std::string, PieceKind> kinds{{"keep", PieceKind::Keep},     {"substitute", PieceKind::Substitute},
                                                        {"delete", PieceKind::Delete}, {"insert", PieceKind::Insert},
                                                        {"gap", PieceKind::Gap},       {"response", PieceKind::Response}};
    std::vector<ProcedureLog> out;
    try {
        const auto j = nlohmann::json::parse(text);
        auto act = [&](const nlohmann::json& a) {
            auto code = [&](Dimension d, const nlohmann::json& s) {
                auto c = vocab.find(d, s.get<std::string>());
                if (!c) throw ParseError(0, "ground truth: unknown symbol " + s.get<std::string>());
                return *c;
            };
            return Activity{{code(Dimension::Verb, a.at(0)), code(Dimension::Instrument, a.at(1)),
                             code(Dimension::Target, a.at(2))}};
        };
        for (const auto& p : j.at("procedures")) {
            ProcedureLog log;
            log.procedure_id = p.at("id").get<std::string>();
            log.event_kinds = p.at("event_kinds").get<std::vector<std::string>>();
            for (const auto& e : p.at("pieces")) {
                Piece piece;
                const auto it = kinds.find(e.at("op").get<std::string>());
                if (it == kinds.end()) throw ParseError(0, "ground truth: unknown op");
                piece.kind = it->second;
                piece.step = e.at("step").get<std::size_t>();
                if (e.contains("activity")) piece.activity = act(e.at("activity"));
                if (e.contains("duration_s")) piece.duration = parse_seconds(e.at("duration_s").get<std::string>());
                if (e.contains("event")) piece.event = e.at("event").get<std::size_t>();
                log.pieces.push_back(piece);
            }
            out.push_back(std::move(log));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("ground truth JSON: ") + e.what());
    }
    return out;
}

}  // namespace sdev
