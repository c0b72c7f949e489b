// Brute-force reference implementations used to check the fast kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "sdev/activity.hpp"
#include "sdev/dtw.hpp"
#include "sdev/hsmm.hpp"

namespace oracle {

using sdev::Activity;

// Minimum path cost over every admissible warp path, by explicit path
// enumeration. Also reports how many paths attain it.
struct DtwBrute {
    long cost = std::numeric_limits<long>::max();
    std::size_t optimal_paths = 0;
};

inline DtwBrute dtw_enumerate(std::span<const Activity> q, std::span<const Activity> c) {
    DtwBrute out;
    const std::size_t n = q.size(), m = c.size();
    std::function<void(std::size_t, std::size_t, long)> walk = [&](std::size_t i, std::size_t j, long acc) {
        acc += sdev::activity_distance(q[i], c[j]);
        if (i == n - 1 && j == m - 1) {
            if (acc < out.cost) {
                out.cost = acc;
                out.optimal_paths = 1;
            } else if (acc == out.cost) {
                ++out.optimal_paths;
            }
            return;
        }
        if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
        if (i + 1 < n) walk(i + 1, j, acc);
        if (j + 1 < m) walk(i, j + 1, acc);
    };
    walk(0, 0, 0);
    return out;
}

// All activities over a vocabulary with `v` symbols per dimension, codes 0..v-1.
inline std::vector<Activity> all_activities(sdev::Code v) {
    std::vector<Activity> out;
    for (sdev::Code a = 0; a < v; ++a)
        for (sdev::Code b = 0; b < v; ++b)
            for (sdev::Code c = 0; c < v; ++c) out.push_back(Activity{{a, b, c}});
    return out;
}

inline std::vector<Activity> random_sequence(std::mt19937_64& rng, std::size_t len, sdev::Code v) {
    std::vector<Activity> s(len);
    std::uniform_int_distribution<int> code(0, v - 1);
    for (auto& a : s) a = Activity{{sdev::Code(code(rng)), sdev::Code(code(rng)), sdev::Code(code(rng))}};
    return s;
}

// Every segmentation of 0..T-1 into (state, duration) segments with
// durations <= D_max and no repeated state between neighbours.
struct Segmentation {
    sdev::StatePath states;
    double log_prob;
};

inline void enumerate_segmentations(const sdev::HsmmModel& m, std::span<const std::uint32_t> obs,
                                    const std::function<void(const Segmentation&)>& visit) {
    const std::size_t T = obs.size(), N = m.states(), D = m.max_duration();
    sdev::StatePath path(T);
    std::function<void(std::size_t, int, double)> rec = [&](std::size_t t, int prev, double lp) {
        if (t == T) {
            visit({path, lp});
            return;
        }
        for (std::size_t j = 0; j < N; ++j) {
            if (int(j) == prev) continue;
            const double enter = prev < 0 ? m.pi[j] : m.A[prev][j];
            if (enter <= 0) continue;
            double emit = 0;
            for (std::size_t d = 1; d <= D && t + d <= T; ++d) {
                emit += std::log(m.B[j][obs[t + d - 1]]);
                if (m.P[j][d - 1] <= 0) continue;
                for (std::size_t u = t; u < t + d; ++u) path[u] = sdev::StateIndex(j);
                rec(t + d, int(j), lp + std::log(enter) + std::log(m.P[j][d - 1]) + emit);
            }
        }
    };
    rec(0, -1, 0.0);
}

inline double brute_log_likelihood(const sdev::HsmmModel& m, std::span<const std::uint32_t> obs) {
    double total = 0;
    enumerate_segmentations(m, obs, [&](const Segmentation& s) { total += std::exp(s.log_prob); });
    return std::log(total);
}

struct BruteViterbi {
    double best = -std::numeric_limits<double>::infinity();
    double runner_up = -std::numeric_limits<double>::infinity();
    sdev::StatePath states;
};

inline BruteViterbi brute_viterbi(const sdev::HsmmModel& m, std::span<const std::uint32_t> obs) {
    BruteViterbi out;
    enumerate_segmentations(m, obs, [&](const Segmentation& s) {
        if (s.log_prob > out.best) {
            out.runner_up = out.best;
            out.best = s.log_prob;
            out.states = s.states;
        } else if (s.log_prob > out.runner_up) {
            out.runner_up = s.log_prob;
        }
    });
    return out;
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t k, std::size_t skip = SIZE_MAX) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> p(k, 0.0);
    double s = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (i != skip) s += p[i] = u(rng);
    for (auto& v : p) v /= s;
    return p;
}

// A random toy model with no floors (so is_valid only checks stochasticity).
inline sdev::HsmmModel random_model(std::mt19937_64& rng, std::size_t n, std::size_t k, std::size_t dmax) {
    sdev::HsmmModel m;
    m.pi = random_distribution(rng, n);
    for (std::size_t i = 0; i < n; ++i) {
        m.A.push_back(random_distribution(rng, n, i));
        m.B.push_back(random_distribution(rng, k));
        m.P.push_back(random_distribution(rng, dmax));
    }
    m.A_floor.assign(n, 0.0);
    m.B_floor.assign(n, 0.0);
    m.P_floor.assign(n, 0.0);
    return m;
}

// Kendall tau-b, p by enumerating every permutation of y against x.
struct KendallBrute {
    long long s = 0;
    double tau = 0;
    double p_value = 1;
};

inline long long kendall_s(std::span<const double> x, std::span<const double> y) {
    long long s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double a = x[j] - x[i], b = y[j] - y[i];
            s += (a * b > 0) - (a * b < 0);
        }
    return s;
}

inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    long long n0 = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            ++n0;
            tx += x[i] == x[j];
            ty += y[i] == y[j];
        }
    return double(kendall_s(x, y)) / std::sqrt(double(n0 - tx) * double(n0 - ty));
}

inline KendallBrute kendall_enumerate(std::span<const double> x, std::span<const double> y) {
    KendallBrute out;
    out.s = kendall_s(x, y);
    out.tau = kendall_tau_b(x, y);
    std::vector<std::size_t> idx(y.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<double> perm(y.size());
    unsigned long long total = 0, extreme = 0;
    const long long obs = std::llabs(out.s);
    do {
        for (std::size_t i = 0; i < idx.size(); ++i) perm[i] = y[idx[i]];
        ++total;
        if (std::llabs(kendall_s(x, perm)) >= obs) ++extreme;
    } while (std::next_permutation(idx.begin(), idx.end()));
    out.p_value = double(extreme) / double(total);
    return out;
}

}  // namespace oracle
