#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "activity.hpp"
#include "ingestion.hpp"
#include "vocabulary.hpp"

namespace sdev {

struct WorkflowStep {
    Activity activity;
    double mean_s = 1.0;
    double jitter = 0.0;  // duration ~ mean * U(1 - jitter, 1 + jitter)
};

struct EventSpec {
    unsigned min_count = 0;
    unsigned max_count = 0;
    double min_duration_s = 1.0;
    double max_duration_s = 1.0;
    std::vector<Activity> response;  // activities performed while an event lasts
    std::string kind = "bleeding";
};

struct StateMix {
    double none = 0.6841;
    double context = 0.2586;
    double event = 0.0573;
};

struct GeneratorConfig {
    std::uint64_t seed = 1;
    Vocabulary vocabulary;
    std::vector<WorkflowStep> base;
    std::vector<Activity> filler;     // pool for substitutions and insertions
    double perturbation_rate = 0.0;   // per base step: substitute, insert or delete
    double idle_gap_rate = 0.0;       // per step: an IDLE pause follows
    double idle_gap_max_s = 2.0;
    EventSpec events;
    std::size_t cohort_size = 11;
    StateMix target_mix;

    // The calibrated default cohort: 10 verbs, 10 instruments, 12 targets,
    // 61 base steps, bleeding events, 11 procedures.
    static GeneratorConfig defaults(std::uint64_t seed = 1);

    // Sets the target event share and rescales event durations to match it.
    void set_event_fraction(double fraction);

    // Throws ConfigError when the configuration is infeasible.
    void validate() const;
};

enum class PieceKind : std::uint8_t { Keep, Substitute, Delete, Insert, Gap, Response };
const char* to_string(PieceKind k) noexcept;

// One entry of a procedure's perturbation log, in timeline order.
struct Piece {
    PieceKind kind = PieceKind::Keep;
    std::size_t step = 0;   // base step (Keep/Substitute/Delete/Insert: the step it follows)
    Activity activity;      // Substitute/Insert/Response
    Micros duration = 0;    // zero for Delete
    std::size_t event = 0;  // Response: index into the procedure's events
    friend bool operator==(const Piece&, const Piece&) = default;
};

struct ProcedureLog {
    std::string procedure_id;
    std::vector<Piece> pieces;
    std::vector<std::string> event_kinds;
    friend bool operator==(const ProcedureLog&, const ProcedureLog&) = default;
};

struct GeneratedCohort {
    Vocabulary vocabulary;
    std::vector<ContinuousSPM> procedures;
    std::vector<ProcedureLog> log;
};

GeneratedCohort generate(const GeneratorConfig& config);

// Rebuilds a procedure from the base workflow and its log.
ContinuousSPM replay(const std::vector<WorkflowStep>& base, const ProcedureLog& log);

std::string log_to_json(const GeneratedCohort& cohort, const GeneratorConfig& config);
std::vector<ProcedureLog> log_from_json(const std::string& text, const Vocabulary& vocab);

}  // namespace sdev
