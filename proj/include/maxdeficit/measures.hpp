#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "maxdeficit/deficit.hpp"
#include "maxdeficit/distortion.hpp"
#include "maxdeficit/errors.hpp"
#include "maxdeficit/model.hpp"
#include "maxdeficit/numerics.hpp"
#include "maxdeficit/rng.hpp"
#include "maxdeficit/simulate.hpp"

namespace maxdeficit {

enum class Method { ClosedForm, RootBracketed, LambertW, Empirical, Quadrature };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::ClosedForm: return "closed-form";
        case Method::RootBracketed: return "root-bracketed";
        case Method::LambertW: return "lambert-w";
        case Method::Empirical: return "empirical";
        case Method::Quadrature: return "quadrature";
    }
    return "?";
}

struct MeasureResult {
    double value = 0.0;
    Method method = Method::ClosedForm;
    double residual = 0.0;  ///< |defining equation| at value; 0 for direct evaluations
    std::string branch;     ///< which piece of a piecewise formula produced value, if any
};

namespace detail {

inline Method evaluation_method(const DeficitFunctional& d) {
    if (d.is_closed_form()) return Method::ClosedForm;
    if (std::holds_alternative<EmpiricalSource>(d.source())) return Method::Empirical;
    return Method::Quadrature;
}

inline Method root_method(const DeficitFunctional& d) {
    return std::holds_alternative<EmpiricalSource>(d.source()) ? Method::Empirical
                                                               : Method::RootBracketed;
}

}  // namespace detail

/// rho_g(L) = D_g(0).
inline MeasureResult coherent_measure(const DeficitFunctional& d) {
    MeasureResult r;
    r.value = d.eval(0.0);
    r.method = detail::evaluation_method(d);
    if (const auto* s = std::get_if<ClosedFormTVaR>(&d.source())) {
        r.branch = s->v_alpha() > 0.0 ? "linear" : "tail";
    }
    return r;
}

/*
 * Minimal capital u with D(u) <= A.
 *
 * The PH closed form inverts D(u) = D(0) exp(-p b u) on the whole real line,
 * so for A > D(0) it continues the exponential into negative capital. All
 * other sources invert the evaluated functional, whose u < 0 piece is linear.
 */
inline MeasureResult convex_measure(const DeficitFunctional& d, double A) {
    if (!(A > 0.0)) throw DomainError("convex measure tolerance A must be > 0");
    MeasureResult r;

    if (const auto* s = std::get_if<ClosedFormPH>(&d.source())) {
        const double pb = s->p * s->k.b;
        const double at_zero = std::pow(s->k.a, s->p) / pb;
        r.value = (std::log(at_zero) - std::log(A)) / pb;
        r.method = Method::ClosedForm;
        r.residual = std::abs(at_zero * std::exp(-pb * r.value) - A);
        r.branch = r.value < 0.0 ? "exponential-continuation" : "exponential";
        return r;
    }
    if (const auto* s = std::get_if<ClosedFormTVaR>(&d.source())) {
        const double R = s->k.b;
        const double va = s->v_alpha();
        r.method = Method::ClosedForm;
        // the linear piece starts at D = 1/R when v_alpha > 0, at D(0) otherwise
        const double linear_from = va > 0.0 ? 1.0 / R : d.eval(0.0);
        if (A >= linear_from) {
            r.value = d.eval(0.0) - A;
            r.branch = "linear";
        } else {
            r.value = (std::log(s->k.a / (s->alpha * R)) - std::log(A)) / R;
            r.branch = "tail";
        }
        r.residual = std::abs(d.eval(r.value) - A);
        return r;
    }

    const Tolerance tol = d.tolerance();
    auto h = [&](double u) { return d.eval(u) - A; };
    const double d0 = d.eval(0.0);
    double lo = -d0 - A;
    double hi = 0.0;
    if (h(hi) > 0.0) {
        lo = 0.0;
        hi = 1.0;
        int guard = 0;
        while (h(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
            if (++guard > 1100) throw ConvergenceError("convex_measure: no bracket found");
        }
    }
    r.value = brent_root(h, lo, hi, tol);
    r.method = detail::root_method(d);
    r.residual = std::abs(h(r.value));
    return r;
}

/// Unique u* > 0 with D(u*) = delta u*.
inline MeasureResult proportional_measure(const DeficitFunctional& d, double delta) {
    if (!(delta > 0.0)) throw DomainError("proportional margin delta must be > 0");
    MeasureResult r;
    auto residual = [&](double u) { return std::abs(d.eval(u) - delta * u); };

    if (const auto* s = std::get_if<ClosedFormPH>(&d.source())) {
        const double pb = s->p * s->k.b;
        r.value = lambert_w0(std::pow(s->k.a, s->p) / delta) / pb;
        r.method = Method::LambertW;
        r.residual = residual(r.value);
        return r;
    }
    if (const auto* s = std::get_if<ClosedFormTVaR>(&d.source())) {
        const double R = s->k.b;
        const double va = s->v_alpha();
        if (va > 0.0 && delta >= 1.0 / (R * va)) {
            r.value = (va + 1.0 / R) / (1.0 + delta);
            r.method = Method::ClosedForm;
            r.branch = "linear";
        } else {
            r.value = lambert_w0(s->k.a / (s->alpha * delta)) / R;
            r.method = Method::LambertW;
            r.branch = "tail";
        }
        r.residual = residual(r.value);
        return r;
    }

    const double d0 = d.eval(0.0);
    r.method = detail::root_method(d);
    if (d0 <= 0.0) {
        r.value = 0.0;
        return r;
    }
    // D(d0/delta) <= D(0) = delta * (d0/delta), so [0, d0/delta] brackets the root
    auto h = [&](double u) { return d.eval(u) - delta * u; };
    r.value = brent_root(h, 0.0, d0 / delta, d.tolerance());
    r.residual = residual(r.value);
    return r;
}

/// delta* = D(u_c) / u_c with u_c the coherent capital.
inline double critical_threshold(const DeficitFunctional& d) {
    const double uc = d.eval(0.0);
    if (!(uc > 0.0)) throw ModelError("critical_threshold: coherent capital is not positive");
    return d.eval(uc) / uc;
}

/// Capital bounding the expected area in red, (1/R)[ln((1 - mu R)/(c mu R^3)) - ln A].
inline MeasureResult ear_convex_measure(const ExponentialLine& line, double A) {
    if (!(A > 0.0)) throw DomainError("EAR tolerance A must be > 0");
    const double R = adjustment_coefficient(line);
    const double scale = (1.0 - line.mu * R) / (line.c * line.mu * R * R * R);
    MeasureResult r;
    r.value = (std::log(scale) - std::log(A)) / R;
    r.method = Method::ClosedForm;
    r.residual = std::abs(scale * std::exp(-R * r.value) - A);
    return r;
}

struct PremiumBound {
    double estimate = 0.0;   ///< Monte Carlo E_gP[S_1]
    double std_error = 0.0;  ///< bootstrap standard deviation over the resamples
    bool concave = true;     ///< false flags a distortion outside the bound's assumptions
};

/// Lower bound on the premium rate, c >= E_gP[S_1], from n simulated one-period claim totals.
inline PremiumBound premium_lower_bound(double lambda, double mu, const Distortion& gP,
                                        std::uint64_t n, std::uint64_t seed,
                                        int bootstrap_resamples = 20) {
    if (n < 1000) throw DomainError("premium_lower_bound needs at least 1000 paths");
    PremiumBound out;
    out.concave = gP.concave();
    if (lambda == 0.0) return out;
    const auto s1 = simulate_aggregate_claims(lambda, mu, 1.0, n, seed);
    out.estimate = choquet_empirical(gP, s1);

    std::vector<double> resample(n);
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(bootstrap_resamples));
    for (int b = 0; b < bootstrap_resamples; ++b) {
        PathStream stream(seed, static_cast<std::uint64_t>(b), stream_domain::bootstrap);
        for (auto& x : resample) x = s1[stream.below(n)];
        stats.push_back(choquet_empirical(gP, resample));
    }
    double mean = 0.0;
    for (double x : stats) mean += x;
    mean /= static_cast<double>(stats.size());
    double ss = 0.0;
    for (double x : stats) ss += (x - mean) * (x - mean);
    out.std_error = std::sqrt(ss / static_cast<double>(stats.size() - 1));
    return out;
}

inline PremiumBound premium_lower_bound(const ExponentialLine& line, const Distortion& gP,
                                        std::uint64_t n, std::uint64_t seed) {
    return premium_lower_bound(line.lambda, line.mu, gP, n, seed);
}

}  // namespace maxdeficit
