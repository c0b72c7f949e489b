#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "activity.hpp"

namespace sdev {

using StateIndex = std::uint8_t;
using StatePath = std::vector<StateIndex>;
using ObservationSeq = std::vector<std::uint32_t>;
using Matrix = std::vector<std::vector<double>>;

// Explicit-duration hidden semi-Markov model lambda = (pi, A, B, P).
// A segment of state i lasts d steps with probability P[i][d-1] and emits
// each of its observations independently from B[i]; the next segment's
// state follows A, whose diagonal is zero. A sequence ends where a segment
// ends.
struct HsmmModel {
    std::vector<double> pi;
    Matrix A;
    Matrix B;
    Matrix P;

    // Lower bounds kept by every refinement step (0 = unconstrained).
    double pi_floor = 0.0;
    std::vector<double> A_floor, B_floor, P_floor;

    std::size_t states() const { return pi.size(); }
    std::size_t alphabet_size() const { return B.empty() ? 0 : B.front().size(); }
    std::size_t max_duration() const { return P.empty() ? 0 : P.front().size(); }
};

// Shape, zero diagonal, row sums within `tol`, floors respected.
bool is_valid(const HsmmModel& m, double tol = 1e-12);
// Throws ConfigError naming the first violated invariant.
void check_valid(const HsmmModel& m, double tol = 1e-12);

// ceil(factor * longest run), capped at the longest sequence.
std::size_t default_max_duration(std::span<const StatePath> states, double factor = 1.5);

struct SupervisedOptions {
    std::size_t n_states = kStateCount;
    std::size_t alphabet_size = 0;
    std::size_t max_duration = 0;  // 0 selects default_max_duration
    double max_duration_factor = 1.5;
    double smoothing = 1.0;        // additive (Laplace) pseudo-count
};

// Counting estimate from paired observation/state sequences; each maximal
// run of a state is one segment.
HsmmModel estimate_supervised(std::span<const ObservationSeq> obs, std::span<const StatePath> states,
                              const SupervisedOptions& opts);

// log P(obs | model), exact, in log space.
double log_likelihood(const HsmmModel& m, std::span<const std::uint32_t> obs);

enum class DecodeMode { Viterbi, Posterior };

struct Decoding {
    StatePath states;
    double score = 0.0;  // Viterbi: log joint of the best segmentation; Posterior: log-likelihood
};

// Viterbi: MAP segmentation, ties toward the lower state index.
// Posterior: per-instant argmax of the state occupancy.
Decoding decode(const HsmmModel& m, std::span<const std::uint32_t> obs, DecodeMode mode = DecodeMode::Viterbi);

// Per-instant state occupancy probabilities, [t][state].
Matrix state_posteriors(const HsmmModel& m, std::span<const std::uint32_t> obs);

struct EmOptions {
    std::size_t max_iter = 50;
    double tol = 1e-6;
};

struct EmResult {
    HsmmModel model;
    std::vector<double> log_likelihood;  // total over sequences, one entry per evaluated model
    std::size_t iterations = 0;
    bool converged = false;
};

// Baum-Welch for the explicit-duration model. Each M-step maximises the
// expected complete-data likelihood subject to the model's floors, so the
// likelihood trace never decreases. The diagonal of A stays 0.
EmResult em_refine(const HsmmModel& init, std::span<const ObservationSeq> obs, const EmOptions& opts = {});

std::vector<DeviationState> to_deviation_states(const StatePath& p);
StatePath to_state_path(std::span<const DeviationState> s);

}  // namespace sdev
