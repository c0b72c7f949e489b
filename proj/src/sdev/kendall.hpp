#pragma once

#include <cstdint>
#include <span>

namespace sdev {

// Bonferroni-corrected level for the seven trend tests.
inline constexpr double kTrendSignificance = 0.05 / 7.0;
inline constexpr std::size_t kExactKendallLimit = 10;

struct KendallResult {
    bool defined = false;   // false when either variable is constant
    double tau = 0;         // tau-b
    long long s = 0;        // concordant minus discordant pairs
    double p_value = 1;     // two-sided
    bool exact = false;     // permutation distribution (n <= 10) vs normal approximation
    bool significant = false;
};

// Kendall tau-b between x and y. Exact two-sided p for n <= 10, otherwise
// the tie-corrected normal approximation. Needs n >= 4.
KendallResult kendall_tau_trend(std::span<const double> x, std::span<const double> y,
                                double alpha = kTrendSignificance);

}  // namespace sdev
