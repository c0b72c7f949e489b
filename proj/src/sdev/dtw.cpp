#include "dtw.hpp"

#include <algorithm>
#include <limits>

#include "error.hpp"

namespace sdev {

namespace {

enum : std::uint8_t { kDiag = 0, kUp = 1, kLeft = 2 };

// A path has at most |q| + |c| - 1 steps of cost <= 3.
using Cost = std::int32_t;


void require_non_empty(std::span<const Activity> q, std::span<const Activity> c) {
    if (q.empty() || c.empty()) throw ConfigError("dtw: empty sequence");
    if (q.size() + c.size() > (1u << 28)) throw ConfigError("dtw: sequences too long");
}

}  // namespace

DtwResult dtw(std::span<const Activity> q, std::span<const Activity> c) {
    require_non_empty(q, c);
    const std::size_t n = q.size(), m = c.size();
    std::vector<std::uint8_t> dir(n * m);
    std::vector<Cost> prev(m), cur(m);

    // First row: only steps in c.
    cur[0] = activity_distance(q[0], c[0]);
    dir[0] = kDiag;
    for (std::size_t j = 1; j < m; ++j) {
        cur[j] = cur[j - 1] + activity_distance(q[0], c[j]);
        dir[j] = kLeft;
    }
    std::swap(prev, cur);

    for (std::size_t i = 1; i < n; ++i) {
        const Activity qi = q[i];
        std::uint8_t* drow = dir.data() + i * m;
        cur[0] = prev[0] + activity_distance(qi, c[0]);
        drow[0] = kUp;
        Cost left = cur[0];
        for (std::size_t j = 1; j < m; ++j) {
            Cost best = prev[j - 1];
            std::uint8_t how = kDiag;
            if (prev[j] < best) {
                best = prev[j];
                how = kUp;
            }
            if (left < best) {
                best = left;
                how = kLeft;
            }
            left = best + activity_distance(qi, c[j]);
            cur[j] = left;
            drow[j] = how;
        }
        std::swap(prev, cur);
    }

    DtwResult result;
    result.cost = prev[m - 1];
    std::size_t i = n - 1, j = m - 1;
    result.path.reserve(n + m - 1);
    result.path.push_back({std::uint32_t(i), std::uint32_t(j)});
    while (i != 0 || j != 0) {
        switch (dir[i * m + j]) {
            case kDiag: --i, --j; break;
            case kUp: --i; break;
            default: --j; break;
        }
        result.path.push_back({std::uint32_t(i), std::uint32_t(j)});
    }
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

long dtw_cost(std::span<const Activity> q, std::span<const Activity> c) {
    require_non_empty(q, c);
    const std::size_t m = c.size();
    std::vector<Cost> prev(m), cur(m);
    cur[0] = activity_distance(q[0], c[0]);
    for (std::size_t j = 1; j < m; ++j) cur[j] = cur[j - 1] + activity_distance(q[0], c[j]);
    std::swap(prev, cur);
    for (std::size_t i = 1; i < q.size(); ++i) {
        const Activity qi = q[i];
        Cost left = prev[0] + activity_distance(qi, c[0]);
        cur[0] = left;
        for (std::size_t j = 1; j < m; ++j) {
            left = std::min({prev[j - 1], prev[j], left}) + activity_distance(qi, c[j]);
            cur[j] = left;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

bool is_admissible(const WarpPath& path, std::size_t n, std::size_t m) {
    if (path.empty() || n == 0 || m == 0) return false;
    if (path.front() != PathStep{0, 0}) return false;
    if (path.back() != PathStep{std::uint32_t(n - 1), std::uint32_t(m - 1)}) return false;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const auto di = long(path[k].i) - long(path[k - 1].i);
        const auto dj = long(path[k].j) - long(path[k - 1].j);
        const bool ok = (di == 1 && dj == 1) || (di == 1 && dj == 0) || (di == 0 && dj == 1);
        if (!ok) return false;
    }
    return path.size() <= n + m - 1;
}

long path_cost(const WarpPath& path, std::span<const Activity> q, std::span<const Activity> c) {
    long total = 0;
    for (const auto& s : path) total += activity_distance(q[s.i], c[s.j]);
    return total;
}

}  // namespace sdev
