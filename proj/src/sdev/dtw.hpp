#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "activity.hpp"

namespace sdev {

// (index into the first sequence, index into the second).
struct PathStep {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    friend bool operator==(const PathStep&, const PathStep&) = default;
};

using WarpPath = std::vector<PathStep>;

struct DtwResult {
    long cost = 0;
    WarpPath path;
};

// Unconstrained DTW with the summed per-dimension 0/1 label distance.
// Backtrace ties prefer the diagonal, then a step in `q`, then a step in `c`.
// Throws ConfigError on empty input.
DtwResult dtw(std::span<const Activity> q, std::span<const Activity> c);

// Same minimum without the path; linear memory.
long dtw_cost(std::span<const Activity> q, std::span<const Activity> c);

// Boundary, monotonicity and step-set checks for a path between lengths n and m.
bool is_admissible(const WarpPath& path, std::size_t n, std::size_t m);

long path_cost(const WarpPath& path, std::span<const Activity> q, std::span<const Activity> c);

}  // namespace sdev
