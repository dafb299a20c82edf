#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "maxdeficit/distortion.hpp"
#include "maxdeficit/errors.hpp"
#include "maxdeficit/model.hpp"
#include "maxdeficit/rng.hpp"

namespace maxdeficit {

/// Samples of the maximum net loss M_t for one line.
struct SimBatch {
    ExponentialLine line;
    double t = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::vector<double> samples;
};

/// Observed state of a path at epoch r.
struct PathState {
    double r = 0.0;
    double loss = 0.0;         ///< realised net loss L_r
    double running_max = 0.0;  ///< M_r >= max(0, L_r)
};

/// Claim epochs and sizes of one path on [0, t].
struct PathRealization {
    std::vector<double> times;
    std::vector<double> sizes;
};

/// Runs fn(i) for i in [0, n) split over `workers` threads; each index owns its output slot.
template <class Fn>
void for_each_path(std::uint64_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2 * workers) {
        for (std::uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t begin = w * chunk;
        const std::uint64_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (std::uint64_t i = begin; i < end; ++i) fn(i);
        });
    }
}

/// sup of L over [0, t] from jump epochs: max(0, max_i (sum_{j<=i} Y_j - c T_i)).
inline double jump_epoch_max(std::span<const double> times, std::span<const double> sizes, double c) {
    if (times.size() != sizes.size()) throw ArgumentError("jump_epoch_max: size mismatch");
    double claims = 0.0;
    double best = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        claims += sizes[i];
        best = std::max(best, claims - c * times[i]);
    }
    return best;
}

/// Draws one path on [0, t]; sequential exponential gaps, sizes from `severity(stream)`.
template <class Severity>
PathRealization draw_path(double lambda, double t, PathStream& stream, Severity&& severity) {
    PathRealization path;
    if (!(lambda > 0.0)) return path;
    double clock = 0.0;
    for (;;) {
        clock += stream.exponential(1.0 / lambda);
        if (clock > t) break;
        path.times.push_back(clock);
        path.sizes.push_back(severity(stream));
    }
    return path;
}

namespace detail {

/// Net loss and running maximum at horizon t without storing the path.
template <class Severity>
PathState run_path(double lambda, double c, double t, PathStream& stream, Severity& severity) {
    PathState st{t, 0.0, 0.0};
    if (!(lambda > 0.0)) {
        st.loss = -c * t;
        return st;
    }
    double clock = 0.0;
    double claims = 0.0;
    for (;;) {
        clock += stream.exponential(1.0 / lambda);
        if (clock > t) break;
        claims += severity(stream);
        st.running_max = std::max(st.running_max, claims - c * clock);
    }
    st.loss = claims - c * t;
    return st;
}

inline void require_positive_horizon(double t, std::uint64_t n) {
    if (!(t > 0.0)) throw DomainError("simulation horizon must be > 0");
    if (n < 1) throw DomainError("simulation needs at least one path");
}

}  // namespace detail

/// M_t samples for a compound Poisson line with arbitrary claim sizes.
template <class Severity>
std::vector<double> simulate_max_loss_with(double lambda, double c, double t, std::uint64_t n,
                                           std::uint64_t seed, Severity severity,
                                           unsigned workers = 1) {
    detail::require_positive_horizon(t, n);
    if (!(lambda >= 0.0) || !(c > 0.0)) throw DomainError("need lambda >= 0 and c > 0");
    std::vector<double> out(n);
    for_each_path(n, workers, [&](std::uint64_t i) {
        PathStream stream(seed, i, stream_domain::max_loss);
        auto sev = severity;
        out[i] = detail::run_path(lambda, c, t, stream, sev).running_max;
    });
    return out;
}

inline auto exponential_severity(double mu) {
    return [mu](PathStream& s) { return s.exponential(mu); };
}

inline SimBatch simulate_max_loss(const ExponentialLine& line, double t, std::uint64_t n,
                                  std::uint64_t seed, unsigned workers = 1) {
    line.validate();
    SimBatch batch{line, t, n, seed, {}};
    batch.samples = simulate_max_loss_with(line.lambda, line.c, t, n, seed,
                                           exponential_severity(line.mu), workers);
    return batch;
}

/// State (r, L_r, M_r) of the path drawn from `stream`.
inline PathState simulate_state(const ExponentialLine& line, double r, PathStream& stream) {
    if (!(r >= 0.0)) throw DomainError("state epoch must be >= 0");
    auto sev = exponential_severity(line.mu);
    return detail::run_path(line.lambda, line.c, r, stream, sev);
}

/// Aggregate claims S_h = sum of claim sizes over [0, h].
inline std::vector<double> simulate_aggregate_claims(double lambda, double mu, double h,
                                                     std::uint64_t n, std::uint64_t seed) {
    detail::require_positive_horizon(h, n);
    if (!(lambda >= 0.0) || !(mu > 0.0)) throw DomainError("need lambda >= 0 and mu > 0");
    std::vector<double> out(n);
    auto sev = exponential_severity(mu);
    for (std::uint64_t i = 0; i < n; ++i) {
        PathStream stream(seed, i, stream_domain::aggregate_claims);
        // with c = 0 the loss at h is the aggregate claim amount
        out[i] = detail::run_path(lambda, 0.0, h, stream, sev).loss;
    }
    return out;
}

struct RuinEstimate {
    double probability = 0.0;
    double half_width = 0.0;  ///< 95% normal-approximation half-width
};

inline RuinEstimate estimate_finite_ruin(const SimBatch& batch, double u) {
    if (batch.samples.empty()) throw ArgumentError("estimate_finite_ruin: empty batch");
    const auto hits = std::count_if(batch.samples.begin(), batch.samples.end(),
                                    [u](double m) { return m > u; });
    const double n = static_cast<double>(batch.samples.size());
    const double p = static_cast<double>(hits) / n;
    return {p, 1.96 * std::sqrt(p * (1.0 - p) / n)};
}

/// Samples of M_t given the state at r: max(M_r, L_r + M'_{t-r}) with M' drawn afresh.
inline std::vector<double> conditional_max_samples(const ExponentialLine& line, double t, double r,
                                                   const PathState& state, std::uint64_t n_inner,
                                                   std::uint64_t seed) {
    if (!(r >= 0.0) || !(r < t)) throw DomainError("conditional_max_samples requires 0 <= r < t");
    auto fresh = simulate_max_loss(line, t - r, n_inner, seed).samples;
    for (double& m : fresh) m = std::max(state.running_max, state.loss + m);
    return fresh;
}

struct SupermartingaleReport {
    double rho_0 = 0.0;       ///< distorted expectation of M_t at time 0
    double mean_rho_r = 0.0;  ///< average conditional measure at r over outer paths
    double std_error = 0.0;   ///< standard error of mean_rho_r
};

/*
 * Nested Monte Carlo: n_outer states at r, each with n_inner conditional
 * continuations. rho_0 comes from a separate unconditional batch of the same
 * total size, so the identity case is a genuine comparison.
 */
inline SupermartingaleReport supermartingale_check(const ExponentialLine& line, const Distortion& g,
                                                   double t, double r, std::uint64_t n_outer,
                                                   std::uint64_t n_inner, std::uint64_t seed,
                                                   unsigned workers = 1) {
    if (!g.concave()) throw DomainError("supermartingale_check requires a concave distortion");
    if (!(r >= 0.0) || !(r < t)) throw DomainError("supermartingale_check requires 0 <= r < t");
    if (n_outer < 2 || n_inner < 1) throw DomainError("supermartingale_check needs n_outer >= 2");
    line.validate();

    std::vector<double> rho_r(n_outer);
    for_each_path(n_outer, workers, [&](std::uint64_t j) {
        PathStream outer(seed, j, stream_domain::outer_state);
        const PathState state = simulate_state(line, r, outer);
        const std::uint64_t inner_seed = PathStream(seed, j, stream_domain::inner_seed).next_u64();
        auto cond = conditional_max_samples(line, t, r, state, n_inner, inner_seed);
        rho_r[j] = choquet_empirical(g, cond);
    });

    SupermartingaleReport rep;
    const auto base = simulate_max_loss(line, t, n_outer * n_inner, mix64(seed ^ 0x243f6a8885a308d3ULL), workers);
    rep.rho_0 = choquet_empirical(g, base.samples);
    double sum = 0.0;
    for (double x : rho_r) sum += x;
    rep.mean_rho_r = sum / static_cast<double>(n_outer);
    double ss = 0.0;
    for (double x : rho_r) ss += (x - rep.mean_rho_r) * (x - rep.mean_rho_r);
    rep.std_error = std::sqrt(ss / static_cast<double>(n_outer - 1) / static_cast<double>(n_outer));
    return rep;
}

/// Capital for the rolling window [s, s+t]: realised loss plus the static baseline.
constexpr double rolling_requirement(const PathState& state, double baseline_rho) noexcept {
    return state.loss + baseline_rho;
}

// ---- batch files -----------------------------------------------------------

namespace detail {

inline std::string shortest(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ArgumentError("bad number '" + std::string(s) + "'");
    }
    return x;
}

}  // namespace detail

/// Two '#' header lines followed by one sample per line, shortest round-trip decimal form.
inline void write_batch(std::ostream& os, const SimBatch& b) {
    os << "# maxdeficit simbatch v1\n";
    os << "# lambda=" << detail::shortest(b.line.lambda) << " mu=" << detail::shortest(b.line.mu)
       << " c=" << detail::shortest(b.line.c) << " t=" << detail::shortest(b.t) << " n=" << b.n
       << " seed=" << b.seed << "\n";
    for (double m : b.samples) os << detail::shortest(m) << "\n";
}

inline SimBatch read_batch(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "# maxdeficit simbatch v1") {
        throw ArgumentError("not a simbatch file");
    }
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw ArgumentError("missing batch header");
    SimBatch b;
    std::istringstream hs(line.substr(2));
    std::string kv;
    int seen = 0;
    while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ArgumentError("bad header field '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "lambda") b.line.lambda = detail::parse_double(val);
        else if (key == "mu") b.line.mu = detail::parse_double(val);
        else if (key == "c") b.line.c = detail::parse_double(val);
        else if (key == "t") b.t = detail::parse_double(val);
        else if (key == "n") b.n = std::stoull(val);
        else if (key == "seed") b.seed = std::stoull(val);
        else throw ArgumentError("unknown header field '" + key + "'");
        ++seen;
    }
    if (seen != 6) throw ArgumentError("incomplete batch header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        b.samples.push_back(detail::parse_double(line));
    }
    if (b.samples.size() != b.n) throw ArgumentError("batch sample count does not match header");
    return b;
}

}  // namespace maxdeficit
