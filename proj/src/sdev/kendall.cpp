#include "kendall.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "error.hpp"

namespace sdev {

namespace {

int sign(double v) { return (v > 0) - (v < 0); }

long long pair_score(std::span<const double> x, std::span<const double> y) {
    long long s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) s += sign(x[j] - x[i]) * sign(y[j] - y[i]);
    return s;
}

std::vector<long long> tie_groups(std::span<const double> v) {
    std::map<double, long long> groups;
    for (double x : v) ++groups[x];
    std::vector<long long> out;
    for (const auto& [_, c] : groups)
        if (c > 1) out.push_back(c);
    return out;
}

// Permutations of 0..n-1 by inversion count.
std::vector<double> mahonian(std::size_t n) {
    std::vector<double> f{1.0};
    for (std::size_t k = 2; k <= n; ++k) {
        std::vector<double> g(f.size() + k - 1, 0.0);
        for (std::size_t i = 0; i < f.size(); ++i)
            for (std::size_t j = 0; j < k; ++j) g[i + j] += f[i];
        f = std::move(g);
    }
    return f;
}

double exact_p(std::span<const double> x, std::span<const double> y, long long s_obs, bool ties) {
    const std::size_t n = x.size();
    const long long target = std::llabs(s_obs);
    if (!ties) {
        const long long n0 = static_cast<long long>(n * (n - 1) / 2);
        const auto f = mahonian(n);
        double hit = 0, all = 0;
        for (std::size_t inv = 0; inv < f.size(); ++inv) {
            all += f[inv];
            if (std::llabs(n0 - 2 * static_cast<long long>(inv)) >= target) hit += f[inv];
        }
        return hit / all;
    }
    // Distinct arrangements of the multiset y against fixed x are equally likely.
    std::vector<double> perm(y.begin(), y.end());
    std::sort(perm.begin(), perm.end());
    double hit = 0, all = 0;
    do {
        all += 1;
        if (std::llabs(pair_score(x, perm)) >= target) hit += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return hit / all;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

KendallResult kendall_tau_trend(std::span<const double> x, std::span<const double> y, double alpha) {
    if (x.size() != y.size()) throw ConfigError("kendall: length mismatch");
    const std::size_t n = x.size();
    if (n < 4) throw ConfigError("kendall: at least four paired points required");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ConfigError("kendall: non-finite value");

    KendallResult r;
    const auto tx = tie_groups(x), ty = tie_groups(y);
    const double n0 = double(n) * double(n - 1) / 2;
    double n1 = 0, n2 = 0;
    for (auto t : tx) n1 += double(t) * double(t - 1) / 2;
    for (auto t : ty) n2 += double(t) * double(t - 1) / 2;
    if (n1 == n0 || n2 == n0) return r;

    r.defined = true;
    r.s = pair_score(x, y);
    r.tau = double(r.s) / std::sqrt((n0 - n1) * (n0 - n2));

    if (n <= kExactKendallLimit) {
        r.exact = true;
        r.p_value = exact_p(x, y, r.s, !tx.empty() || !ty.empty());
    } else {
        auto sum = [](const std::vector<long long>& g, auto f) {
            double s = 0;
            for (auto t : g) s += f(double(t));
            return s;
        };
        const double dn = double(n);
        const double v0 = dn * (dn - 1) * (2 * dn + 5);
        const double vt = sum(tx, [](double t) { return t * (t - 1) * (2 * t + 5); });
        const double vu = sum(ty, [](double t) { return t * (t - 1) * (2 * t + 5); });
        const double v1 = sum(tx, [](double t) { return t * (t - 1); }) * sum(ty, [](double t) { return t * (t - 1); }) /
                          (2 * dn * (dn - 1));
        const double v2 = sum(tx, [](double t) { return t * (t - 1) * (t - 2); }) *
                          sum(ty, [](double t) { return t * (t - 1) * (t - 2); }) / (9 * dn * (dn - 1) * (dn - 2));
        const double var = (v0 - vt - vu) / 18 + v1 + v2;
        const double z = std::abs(double(r.s)) / std::sqrt(var);
        r.p_value = std::min(1.0, 2 * normal_sf(z));
    }
    r.significant = r.p_value < alpha;
    return r;
}

}  // namespace sdev
