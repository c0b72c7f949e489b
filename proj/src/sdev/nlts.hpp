#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "activity.hpp"
#include "dtw.hpp"
#include "ingestion.hpp"

namespace sdev {

// For each element l of an average sequence, the (ascending) indices of the
// elements of one sequence that a warp path matches to l.
using Associations = std::vector<std::vector<std::uint32_t>>;

// Associations of `seq` against `average`, from dtw(average, seq).
Associations associate(std::span<const Activity> average, std::span<const Activity> seq, long* cost = nullptr);

struct AverageSequence {
    ActivitySequence labels;
    // associations[s][l]: elements of sequence s matched to average element l.
    std::vector<Associations> associations;
};

struct DbaOptions {
    std::size_t max_iter = 30;
    std::size_t patience = 3;
};

struct DbaResult {
    AverageSequence average;
    long cost = 0;                 // total DTW cost of `average` against the cohort
    std::vector<long> cost_trace;  // total cost of the current average at each iteration
    std::size_t iterations = 0;
};

using CostMatrix = std::vector<std::vector<long>>;

// Symmetric matrix of dtw costs, zero diagonal.
CostMatrix pairwise_costs(std::span<const ActivitySequence> seqs);

// Index of the sequence minimising its summed DTW cost to the others
// (lowest index on ties).
std::size_t medoid_index(std::span<const ActivitySequence> seqs);
std::size_t medoid_index(const CostMatrix& costs);

// Symbolic DTW barycenter averaging. Each iteration aligns the current
// average to every sequence and replaces each element, per dimension, by the
// most frequent associated code (lowest code on ties).
DbaResult dba(std::span<const ActivitySequence> seqs, ActivitySequence init, const DbaOptions& opts = {});

struct Widths {
    std::vector<std::uint32_t> values;
    std::size_t total() const;
};

// widths[l] = max over the association sets of |associations[s][l]|.
Widths widths_from(const std::vector<Associations>& associations);

// widths[l] = max over sequences of |associations[s][l]|. Re-aligns the
// average to every sequence; the fresh associations are returned through
// `associations` when non-null.
Widths compute_widths(std::span<const Activity> average, std::span<const ActivitySequence> seqs,
                      std::vector<Associations>* associations = nullptr);

struct AlignedSequence {
    std::string procedure_id;
    ActivitySequence labels;
    // Index of the source element emitted in each slot.
    std::vector<std::uint32_t> source_index;

    std::size_t size() const { return labels.size(); }
};

// Emits, for every average element l, the matched elements in order and
// repeats the last one until widths[l] slots are filled.
AlignedSequence unpack(std::span<const Activity> seq, const Associations& assoc, const Widths& widths);

std::vector<AlignedSequence> unpack(std::span<const ActivitySequence> seqs, const std::vector<Associations>& assoc,
                                    const Widths& widths);

// Carries per-sample flags through the same slot mapping as the labels.
std::vector<std::uint8_t> warp_mask(const AlignedSequence& aligned, std::span<const std::uint8_t> mask);

struct CohortAlignment {
    DbaResult dba;
    Widths widths;
    std::vector<AlignedSequence> aligned;
    std::size_t length() const { return widths.total(); }
};

// Multiple alignment: DBA from cohort[init] (the medoid when unset), widths, unpack.
CohortAlignment align_cohort(std::span<const SampledSequence> cohort, const DbaOptions& opts = {},
                             std::optional<std::size_t> init = std::nullopt);

struct ReferenceAlignment {
    AlignedSequence aligned;             // the sequence, unpacked against the reference
    ActivitySequence expanded_reference; // reference element l repeated widths[l] times
    Widths widths;
};

// Aligns one sequence to a fixed reference: dtw(reference, seq), widths from
// that single alignment (each at least 1), reference re-unpacked to the
// resulting length.
ReferenceAlignment align_to_reference(std::span<const Activity> reference, const SampledSequence& seq);

}  // namespace sdev
