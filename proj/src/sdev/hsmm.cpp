#include "hsmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"

namespace sdev {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0 ? std::log(p) : kNegInf; }

double log_sum_exp(const double* x, std::size_t n) {
    double m = kNegInf;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
    if (m == kNegInf) return kNegInf;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

// Row-major T x N table.
struct Table {
    std::size_t cols = 0;
    std::vector<double> v;
    Table(std::size_t rows, std::size_t c, double init = kNegInf) : cols(c), v(rows * c, init) {}
    double* operator[](std::size_t r) { return v.data() + r * cols; }
    const double* operator[](std::size_t r) const { return v.data() + r * cols; }
};

struct LogModel {
    std::size_t n = 0, k = 0, dmax = 0;
    std::vector<double> pi;
    Table a{0, 0}, b{0, 0}, p{0, 0};

    explicit LogModel(const HsmmModel& m) : n(m.states()), k(m.alphabet_size()), dmax(m.max_duration()) {
        check_valid(m, 1e-9);
        pi.resize(n);
        a = Table(n, n);
        b = Table(n, k);
        p = Table(n, dmax);
        for (std::size_t i = 0; i < n; ++i) {
            pi[i] = safe_log(m.pi[i]);
            for (std::size_t j = 0; j < n; ++j) a[i][j] = i == j ? kNegInf : safe_log(m.A[i][j]);
            for (std::size_t o = 0; o < k; ++o) b[i][o] = safe_log(m.B[i][o]);
            for (std::size_t d = 0; d < dmax; ++d) p[i][d] = safe_log(m.P[i][d]);
        }
    }

    double emit(std::size_t state, std::uint32_t o) const {
        if (o >= k) throw ConfigError("observation code " + std::to_string(o) + " outside the model alphabet");
        return b[state][o];
    }
};

// alpha[t][j]: segment of j ends at t. start[s][j]: segment of j starts at s.
// beta[t][i]: future given a segment of i ends at t. bstart[s][j]: future
// including a segment of j starting at s.
struct Lattice {
    Table alpha, start, beta, bstart;
    double loglik = kNegInf;
    Lattice(std::size_t t, std::size_t n) : alpha(t, n), start(t, n), beta(t, n), bstart(t, n) {}
};

void forward(const LogModel& lm, std::span<const std::uint32_t> obs, Lattice& L) {
    const std::size_t T = obs.size(), N = lm.n;
    std::vector<double> buf(std::max(lm.dmax, N));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < N; ++j) {
            if (t == 0) {
                L.start[0][j] = lm.pi[j];
                continue;
            }
            std::size_t c = 0;
            for (std::size_t i = 0; i < N; ++i)
                if (i != j) buf[c++] = L.alpha[t - 1][i] + lm.a[i][j];
            L.start[t][j] = log_sum_exp(buf.data(), c);
        }
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t dlim = std::min(lm.dmax, t + 1);
            double e = 0;
            for (std::size_t d = 1; d <= dlim; ++d) {
                const std::size_t s = t + 1 - d;
                e += lm.emit(j, obs[s]);
                buf[d - 1] = L.start[s][j] + lm.p[j][d - 1] + e;
            }
            L.alpha[t][j] = log_sum_exp(buf.data(), dlim);
        }
    }
    L.loglik = log_sum_exp(L.alpha[T - 1], N);
}

void backward(const LogModel& lm, std::span<const std::uint32_t> obs, Lattice& L) {
    const std::size_t T = obs.size(), N = lm.n;
    std::vector<double> buf(std::max(lm.dmax, N));
    for (std::size_t s = T; s-- > 0;) {
        for (std::size_t i = 0; i < N; ++i) {
            if (s == T - 1) {
                L.beta[s][i] = 0.0;
                continue;
            }
            std::size_t c = 0;
            for (std::size_t j = 0; j < N; ++j)
                if (j != i) buf[c++] = lm.a[i][j] + L.bstart[s + 1][j];
            L.beta[s][i] = log_sum_exp(buf.data(), c);
        }
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t dlim = std::min(lm.dmax, T - s);
            double e = 0;
            for (std::size_t d = 1; d <= dlim; ++d) {
                const std::size_t u = s + d - 1;
                e += lm.emit(j, obs[u]);
                buf[d - 1] = lm.p[j][d - 1] + e + L.beta[u][j];
            }
            L.bstart[s][j] = log_sum_exp(buf.data(), dlim);
        }
    }
}

std::vector<std::size_t> run_lengths(const StatePath& p) {
    std::vector<std::size_t> runs;
    for (std::size_t i = 0; i < p.size();) {
        std::size_t j = i;
        while (j < p.size() && p[j] == p[i]) ++j;
        runs.push_back(j - i);
        i = j;
    }
    return runs;
}

// Maximises sum c_k log x_k over the simplex with x_k >= floor.
std::vector<double> floored_normalize(const std::vector<double>& counts, double floor,
                                      const std::vector<double>& fallback) {
    double total = 0;
    for (double c : counts) total += c;
    if (!(total > 0)) return fallback;
    const std::size_t n = counts.size();
    std::vector<bool> fixed(n, false);
    double mu = total;
    for (;;) {
        double rest = 0;
        std::size_t nfixed = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (fixed[k])
                ++nfixed;
            else
                rest += counts[k];
        }
        mu = rest / (1.0 - floor * double(nfixed));
        bool changed = false;
        for (std::size_t k = 0; k < n; ++k)
            if (!fixed[k] && counts[k] / mu < floor) {
                fixed[k] = true;
                changed = true;
            }
        if (!changed) break;
    }
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = fixed[k] ? floor : counts[k] / mu;
    return x;
}

bool row_ok(const std::vector<double>& row, double floor, double tol, std::size_t skip = SIZE_MAX) {
    double s = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k == skip) {
            if (row[k] != 0.0) return false;
            continue;
        }
        if (!(row[k] >= 0) || row[k] < floor * (1 - 1e-12)) return false;
        s += row[k];
    }
    return std::abs(s - 1.0) <= tol;
}

}  // namespace

void check_valid(const HsmmModel& m, double tol) {
    const std::size_t n = m.states();
    if (n < 2) throw ConfigError("hsmm: at least two states required");
    if (m.A.size() != n || m.B.size() != n || m.P.size() != n) throw ConfigError("hsmm: matrix row counts differ");
    if (m.alphabet_size() == 0 || m.max_duration() == 0) throw ConfigError("hsmm: empty alphabet or duration range");
    auto floor_of = [](const std::vector<double>& f, std::size_t i) { return i < f.size() ? f[i] : 0.0; };
    if (!row_ok(m.pi, m.pi_floor, tol)) throw ConfigError("hsmm: pi is not a probability vector");
    for (std::size_t i = 0; i < n; ++i) {
        if (m.A[i].size() != n || !row_ok(m.A[i], floor_of(m.A_floor, i), tol, i))
            throw ConfigError("hsmm: row " + std::to_string(i) + " of A is invalid");
        if (m.B[i].size() != m.alphabet_size() || !row_ok(m.B[i], floor_of(m.B_floor, i), tol))
            throw ConfigError("hsmm: row " + std::to_string(i) + " of B is invalid");
        if (m.P[i].size() != m.max_duration() || !row_ok(m.P[i], floor_of(m.P_floor, i), tol))
            throw ConfigError("hsmm: row " + std::to_string(i) + " of P is invalid");
    }
}

bool is_valid(const HsmmModel& m, double tol) {
    try {
        check_valid(m, tol);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

std::size_t default_max_duration(std::span<const StatePath> states, double factor) {
    std::size_t longest_run = 0, longest_seq = 0;
    for (const auto& p : states) {
        longest_seq = std::max(longest_seq, p.size());
        for (auto r : run_lengths(p)) longest_run = std::max(longest_run, r);
    }
    const auto d = static_cast<std::size_t>(std::ceil(factor * double(longest_run)));
    return std::max<std::size_t>(1, std::min(d, longest_seq));
}

HsmmModel estimate_supervised(std::span<const ObservationSeq> obs, std::span<const StatePath> states,
                              const SupervisedOptions& opts) {
    if (obs.empty()) throw ConfigError("estimate_supervised: empty training set");
    if (obs.size() != states.size()) throw ConfigError("estimate_supervised: unpaired sequences");
    const std::size_t N = opts.n_states, K = opts.alphabet_size;
    if (N < 2 || K == 0) throw ConfigError("estimate_supervised: invalid state or alphabet size");
    if (opts.smoothing < 0) throw ConfigError("estimate_supervised: negative smoothing");
    const std::size_t D = opts.max_duration ? opts.max_duration : default_max_duration(states, opts.max_duration_factor);
    const double alpha = opts.smoothing;

    std::vector<double> pi_c(N, 0);
    Matrix a_c(N, std::vector<double>(N, 0)), b_c(N, std::vector<double>(K, 0)), p_c(N, std::vector<double>(D, 0));
    for (std::size_t s = 0; s < obs.size(); ++s) {
        const auto& o = obs[s];
        const auto& q = states[s];
        if (o.size() != q.size()) throw ConfigError("estimate_supervised: observation/state length mismatch");
        if (o.empty()) throw ConfigError("estimate_supervised: empty sequence");
        for (std::size_t t = 0; t < o.size(); ++t) {
            if (q[t] >= N) throw ConfigError("estimate_supervised: state index out of range");
            if (o[t] >= K) throw ConfigError("estimate_supervised: observation code out of range");
            b_c[q[t]][o[t]] += 1;
        }
        pi_c[q[0]] += 1;
        for (std::size_t i = 0; i < q.size();) {
            std::size_t j = i;
            while (j < q.size() && q[j] == q[i]) ++j;
            if (j - i > D)
                throw ConfigError("estimate_supervised: run of " + std::to_string(j - i) + " exceeds max duration " +
                                  std::to_string(D));
            p_c[q[i]][j - i - 1] += 1;
            if (j < q.size()) a_c[q[i]][q[j]] += 1;
            i = j;
        }
    }

    // (c + alpha) / (total + alpha * width); uniform when everything is zero.
    auto smooth = [alpha](const std::vector<double>& c, std::size_t skip, double& floor) {
        const std::size_t width = c.size() - (skip < c.size() ? 1 : 0);
        double total = 0;
        for (std::size_t k = 0; k < c.size(); ++k)
            if (k != skip) total += c[k];
        const double denom = total + alpha * double(width);
        std::vector<double> x(c.size(), 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k == skip) continue;
            x[k] = denom > 0 ? (c[k] + alpha) / denom : 1.0 / double(width);
        }
        floor = denom > 0 ? alpha / denom : 1.0 / double(width);
        return x;
    };

    HsmmModel m;
    m.pi = smooth(pi_c, SIZE_MAX, m.pi_floor);
    m.A.resize(N);
    m.B.resize(N);
    m.P.resize(N);
    m.A_floor.resize(N);
    m.B_floor.resize(N);
    m.P_floor.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        m.A[i] = smooth(a_c[i], i, m.A_floor[i]);
        m.B[i] = smooth(b_c[i], SIZE_MAX, m.B_floor[i]);
        m.P[i] = smooth(p_c[i], SIZE_MAX, m.P_floor[i]);
    }
    return m;
}

double log_likelihood(const HsmmModel& m, std::span<const std::uint32_t> obs) {
    if (obs.empty()) return 0.0;
    const LogModel lm(m);
    Lattice L(obs.size(), lm.n);
    forward(lm, obs, L);
    return L.loglik;
}

Matrix state_posteriors(const HsmmModel& m, std::span<const std::uint32_t> obs) {
    const LogModel lm(m);
    const std::size_t T = obs.size(), N = lm.n;
    Matrix occ(T, std::vector<double>(N, 0.0));
    if (T == 0) return occ;
    Lattice L(T, N);
    forward(lm, obs, L);
    if (!std::isfinite(L.loglik)) throw NumericError("state_posteriors: observation sequence has zero probability");
    backward(lm, obs, L);
    for (std::size_t j = 0; j < N; ++j) {
        double running = 0;
        for (std::size_t t = 0; t < T; ++t) {
            running += std::exp(L.start[t][j] + L.bstart[t][j] - L.loglik);
            if (t > 0) running -= std::exp(L.alpha[t - 1][j] + L.beta[t - 1][j] - L.loglik);
            occ[t][j] = std::clamp(running, 0.0, 1.0);
        }
    }
    return occ;
}

Decoding decode(const HsmmModel& m, std::span<const std::uint32_t> obs, DecodeMode mode) {
    Decoding out;
    const std::size_t T = obs.size();
    if (T == 0) return out;
    if (mode == DecodeMode::Posterior) {
        const auto occ = state_posteriors(m, obs);
        out.states.resize(T);
        for (std::size_t t = 0; t < T; ++t)
            out.states[t] = static_cast<StateIndex>(std::max_element(occ[t].begin(), occ[t].end()) - occ[t].begin());
        out.score = log_likelihood(m, obs);
        return out;
    }

    const LogModel lm(m);
    const std::size_t N = lm.n;
    Table delta(T, N), start(T, N);
    std::vector<std::uint32_t> best_d(T * N, 0);
    std::vector<StateIndex> best_prev(T * N, 0);

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < N; ++j) {
            if (t == 0) {
                start[0][j] = lm.pi[j];
                continue;
            }
            double best = kNegInf;
            StateIndex arg = j == 0 ? 1 : 0;
            for (std::size_t i = 0; i < N; ++i) {
                if (i == j) continue;
                const double v = delta[t - 1][i] + lm.a[i][j];
                if (v > best) {
                    best = v;
                    arg = static_cast<StateIndex>(i);
                }
            }
            start[t][j] = best;
            best_prev[t * N + j] = arg;
        }
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t dlim = std::min(lm.dmax, t + 1);
            double e = 0, best = kNegInf;
            std::uint32_t arg = 1;
            for (std::size_t d = 1; d <= dlim; ++d) {
                const std::size_t s = t + 1 - d;
                e += lm.emit(j, obs[s]);
                const double v = start[s][j] + lm.p[j][d - 1] + e;
                if (v > best) {
                    best = v;
                    arg = static_cast<std::uint32_t>(d);
                }
            }
            delta[t][j] = best;
            best_d[t * N + j] = arg;
        }
    }

    std::size_t j = 0;
    for (std::size_t i = 1; i < N; ++i)
        if (delta[T - 1][i] > delta[T - 1][j]) j = i;
    out.score = delta[T - 1][j];
    if (out.score == kNegInf) throw NumericError("decode: observation sequence has zero probability");
    out.states.assign(T, 0);
    std::size_t t = T - 1;
    for (;;) {
        const std::size_t d = best_d[t * N + j];
        const std::size_t s = t + 1 - d;
        std::fill(out.states.begin() + static_cast<std::ptrdiff_t>(s), out.states.begin() + static_cast<std::ptrdiff_t>(t + 1),
                  static_cast<StateIndex>(j));
        if (s == 0) break;
        j = best_prev[s * N + j];
        t = s - 1;
    }
    return out;
}

namespace {

struct Stats {
    std::vector<double> pi;
    Matrix a, b, p;
    double loglik = 0;
    Stats(std::size_t n, std::size_t k, std::size_t d)
        : pi(n, 0), a(n, std::vector<double>(n, 0)), b(n, std::vector<double>(k, 0)), p(n, std::vector<double>(d, 0)) {}
};

void accumulate(const LogModel& lm, std::span<const std::uint32_t> obs, Stats& st) {
    const std::size_t T = obs.size(), N = lm.n;
    Lattice L(T, N);
    forward(lm, obs, L);
    if (!std::isfinite(L.loglik)) throw NumericError("em_refine: non-finite log-likelihood");
    backward(lm, obs, L);
    const double ll = L.loglik;
    st.loglik += ll;

    for (std::size_t j = 0; j < N; ++j) st.pi[j] += std::exp(L.start[0][j] + L.bstart[0][j] - ll);
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
                if (i != j) st.a[i][j] += std::exp(L.alpha[t][i] + lm.a[i][j] + L.bstart[t + 1][j] - ll);

    for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t s = 0; s < T; ++s) {
            const double head = L.start[s][j];
            if (head == kNegInf) continue;
            const std::size_t dlim = std::min(lm.dmax, T - s);
            double e = 0;
            for (std::size_t d = 1; d <= dlim; ++d) {
                const std::size_t u = s + d - 1;
                e += lm.b[j][obs[u]];
                const double v = head + lm.p[j][d - 1] + e + L.beta[u][j] - ll;
                if (v > -745) st.p[j][d - 1] += std::exp(v);
            }
        }
        double running = 0;
        for (std::size_t t = 0; t < T; ++t) {
            running += std::exp(L.start[t][j] + L.bstart[t][j] - ll);
            if (t > 0) running -= std::exp(L.alpha[t - 1][j] + L.beta[t - 1][j] - ll);
            st.b[j][obs[t]] += std::clamp(running, 0.0, 1.0);
        }
    }
}

Stats expectation(const HsmmModel& m, std::span<const ObservationSeq> obs) {
    const LogModel lm(m);
    Stats st(lm.n, lm.k, lm.dmax);
    for (const auto& o : obs) {
        if (o.empty()) continue;
        for (auto c : o)
            if (c >= lm.k) throw ConfigError("em_refine: observation code outside the model alphabet");
        accumulate(lm, o, st);
    }
    return st;
}

HsmmModel maximization(const HsmmModel& cur, const Stats& st) {
    HsmmModel m = cur;
    const std::size_t N = cur.states();
    auto floor_of = [](const std::vector<double>& f, std::size_t i) { return i < f.size() ? f[i] : 0.0; };
    m.pi = floored_normalize(st.pi, cur.pi_floor, cur.pi);
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> off, prev;
        for (std::size_t j = 0; j < N; ++j)
            if (j != i) {
                off.push_back(st.a[i][j]);
                prev.push_back(cur.A[i][j]);
            }
        const auto row = floored_normalize(off, floor_of(cur.A_floor, i), prev);
        for (std::size_t j = 0, c = 0; j < N; ++j) m.A[i][j] = j == i ? 0.0 : row[c++];
        m.B[i] = floored_normalize(st.b[i], floor_of(cur.B_floor, i), cur.B[i]);
        m.P[i] = floored_normalize(st.p[i], floor_of(cur.P_floor, i), cur.P[i]);
    }
    return m;
}

}  // namespace

EmResult em_refine(const HsmmModel& init, std::span<const ObservationSeq> obs, const EmOptions& opts) {
    check_valid(init, 1e-9);
    EmResult r;
    r.model = init;
    Stats st = expectation(r.model, obs);
    r.log_likelihood.push_back(st.loglik);
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        HsmmModel next = maximization(r.model, st);
        Stats next_st = expectation(next, obs);
        if (!std::isfinite(next_st.loglik)) throw NumericError("em_refine: non-finite log-likelihood");
        const double gain = next_st.loglik - st.loglik;
        r.model = std::move(next);
        st = std::move(next_st);
        r.log_likelihood.push_back(st.loglik);
        r.iterations = it + 1;
        if (gain < opts.tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

std::vector<DeviationState> to_deviation_states(const StatePath& p) {
    std::vector<DeviationState> out(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (p[t] >= kStateCount) throw ConfigError("state index is not a deviation state");
        out[t] = static_cast<DeviationState>(p[t]);
    }
    return out;
}

StatePath to_state_path(std::span<const DeviationState> s) {
    StatePath out(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) out[t] = static_cast<StateIndex>(s[t]);
    return out;
}

}  // namespace sdev
