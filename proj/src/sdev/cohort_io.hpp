#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "consensus.hpp"
#include "ingestion.hpp"
#include "loocv.hpp"
#include "nlts.hpp"
#include "vocabulary.hpp"

namespace sdev {

struct Cohort {
    Vocabulary vocabulary;
    std::vector<ContinuousSPM> procedures;
};

// Manifest layout, paths relative to the manifest:
//   {"vocabulary": "vocabulary.json",
//    "procedures": [{"id": "P01", "activities": "P01_activities.csv", "events": "P01_events.csv"}]}
// Without a vocabulary entry symbols are interned in order of appearance.
// "events" is optional per procedure.
Cohort load_cohort(const std::filesystem::path& manifest);

// Writes manifest.json, vocabulary.json and one activity/event CSV pair per
// procedure into `dir`.
void write_cohort(const std::filesystem::path& dir, const Cohort& cohort);

// Columns index,time_s,verb,instrument,target,event.
std::string sampled_csv(const SampledSequence& seq, const Vocabulary& vocab);

// One row per aligned instant; a verb/instrument/target column triple per procedure.
std::string aligned_csv(std::span<const AlignedSequence> aligned, const Vocabulary& vocab);
// Columns t,verb,instrument,target,support.
std::string standard_csv(const StandardProcess& standard, const Vocabulary& vocab);

std::string folds_csv(std::span<const RateEvaluation> rates);
std::string summary_csv(std::span<const RateEvaluation> rates);
std::string trends_csv(std::span<const TrendRow> rows);
std::string errors_csv(std::span<const RateEvaluation> rates);

}  // namespace sdev
