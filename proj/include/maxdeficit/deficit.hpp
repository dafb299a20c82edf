#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "maxdeficit/distortion.hpp"
#include "maxdeficit/errors.hpp"
#include "maxdeficit/model.hpp"
#include "maxdeficit/numerics.hpp"

namespace maxdeficit {

/// Time horizon of a deficit; std::nullopt is the infinite horizon.
struct Horizon {
    std::optional<double> t;

    static Horizon infinite() { return {}; }
    static Horizon finite(double t) {
        if (!(t >= 0.0)) throw DomainError("horizon must be >= 0");
        return {t};
    }
    bool is_infinite() const noexcept { return !t.has_value(); }
};

/// D(u) = (a^p / (p b)) exp(-p b u) for the PH distortion x^p on psi(u) = a exp(-b u).
struct ClosedFormPH {
    RuinConstants k;
    double p = 1.0;
};

/// Piecewise TVaR deficit on psi(u) = a exp(-b u).
struct ClosedFormTVaR {
    RuinConstants k;
    double alpha = 0.05;

    /// Reserve where psi crosses alpha; negative when alpha >= a.
    double v_alpha() const { return std::log(k.a / alpha) / k.b; }
};

/// D(u) = integral over [u, inf) of g(psi(v)) dv by numerical quadrature.
struct QuadratureSource {
    Distortion g;
    std::function<double(double)> psi;
};

/// Choquet estimate over samples of the maximum loss M_t.
struct EmpiricalSource {
    Distortion g;
    std::vector<double> desc;     ///< samples sorted descending
    std::vector<double> weights;  ///< Choquet weights matching desc
};

struct ContinuityMatch {
    bool two_branch = false;  ///< false when alpha >= a and only the exponential branch exists
    double v_alpha = 0.0;
    double left = 0.0;   ///< linear branch evaluated at v_alpha
    double right = 0.0;  ///< exponential branch evaluated at v_alpha
};

/*
 * The distorted expected maximum deficit u -> E_g[(M_t - u)_+].
 *
 * For u < 0 every variant continues linearly, D(u) = D(0) - u, because
 * M_t >= 0 makes g(psi(v)) = g(1) = 1 on [u, 0).
 */
class DeficitFunctional {
public:
    using Source = std::variant<ClosedFormPH, ClosedFormTVaR, QuadratureSource, EmpiricalSource>;

    static DeficitFunctional closed_form_ph(const ExponentialLine& line, double p,
                                            Horizon h = Horizon::infinite()) {
        require_infinite(h);
        if (!(p > 0.0 && p <= 1.0)) throw DomainError("PH exponent must lie in (0,1]");
        return DeficitFunctional(ClosedFormPH{ruin_constants(line), p}, h);
    }

    static DeficitFunctional closed_form_tvar(const ExponentialLine& line, double alpha,
                                              Horizon h = Horizon::infinite()) {
        require_infinite(h);
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
        return DeficitFunctional(ClosedFormTVaR{ruin_constants(line), alpha}, h);
    }

    /// Closed form where one exists (identity, PH, TVaR); quadrature on the ultimate ruin otherwise.
    static DeficitFunctional infinite_horizon(const ExponentialLine& line, const Distortion& g) {
        return std::visit(
            [&](const auto& v) -> DeficitFunctional {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, IdentityDistortion>) {
                    return closed_form_ph(line, 1.0);
                } else if constexpr (std::is_same_v<T, ProportionalHazard>) {
                    return closed_form_ph(line, v.p);
                } else if constexpr (std::is_same_v<T, TailValueAtRisk>) {
                    return closed_form_tvar(line, v.alpha);
                } else {
                    return quadrature_exponential(line, g);
                }
            },
            g.variant());
    }

    static DeficitFunctional quadrature(const Distortion& g, std::function<double(double)> psi,
                                        Horizon h = Horizon::infinite(), Tolerance tol = {}) {
        if (!psi) throw ArgumentError("quadrature deficit needs a ruin function");
        DeficitFunctional d(QuadratureSource{g, std::move(psi)}, h);
        d.tol_ = tol;
        return d;
    }

    static DeficitFunctional quadrature_exponential(const ExponentialLine& line, const Distortion& g,
                                                    Tolerance tol = {}) {
        const RuinConstants k = ruin_constants(line);
        return quadrature(g, [k](double v) { return ultimate_ruin(k, v); }, Horizon::infinite(), tol);
    }

    /// Samples of M_t, all >= 0.
    static DeficitFunctional empirical(const Distortion& g, std::span<const double> samples,
                                       Horizon h) {
        if (samples.empty()) throw ArgumentError("empirical deficit: empty sample");
        std::vector<double> desc(samples.begin(), samples.end());
        for (double x : desc) {
            if (!(x >= 0.0)) throw DomainError("empirical deficit: negative or NaN sample");
        }
        std::sort(desc.begin(), desc.end(), std::greater<>());
        auto w = choquet_weights(g, desc.size());
        return DeficitFunctional(EmpiricalSource{g, std::move(desc), std::move(w)}, h);
    }

    const Source& source() const noexcept { return source_; }
    const Horizon& horizon() const noexcept { return horizon_; }
    const Tolerance& tolerance() const noexcept { return tol_; }

    bool is_closed_form() const noexcept {
        return std::holds_alternative<ClosedFormPH>(source_) ||
               std::holds_alternative<ClosedFormTVaR>(source_);
    }

    Distortion distortion() const {
        return std::visit(
            [](const auto& s) -> Distortion {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, ClosedFormPH>) {
                    return s.p == 1.0 ? Distortion::identity() : Distortion::proportional_hazard(s.p);
                } else if constexpr (std::is_same_v<T, ClosedFormTVaR>) {
                    return Distortion::tvar(s.alpha);
                } else {
                    return s.g;
                }
            },
            source_);
    }

    double operator()(double u) const { return eval(u); }

    double eval(double u) const {
        if (std::isnan(u)) throw DomainError("deficit evaluated at NaN");
        return std::visit([&](const auto& s) { return eval_source(s, u); }, source_);
    }

    /// Both TVaR branches at v_alpha; they meet at 1/R.
    ContinuityMatch continuity_match() const {
        const auto* s = std::get_if<ClosedFormTVaR>(&source_);
        if (s == nullptr) throw UnsupportedError("continuity_match needs a closed-form TVaR deficit");
        ContinuityMatch m;
        m.v_alpha = s->v_alpha();
        m.two_branch = m.v_alpha > 0.0;
        m.left = 1.0 / s->k.b;
        m.right = s->k.a / (s->alpha * s->k.b) * std::exp(-s->k.b * m.v_alpha);
        return m;
    }

private:
    DeficitFunctional(Source s, Horizon h) : source_(std::move(s)), horizon_(h) {}

    static void require_infinite(const Horizon& h) {
        if (!h.is_infinite()) {
            throw UnsupportedError("closed-form deficits exist only for the infinite horizon");
        }
    }

    static double eval_source(const ClosedFormPH& s, double u) {
        const double at_zero = std::pow(s.k.a, s.p) / (s.p * s.k.b);
        if (u < 0.0) return at_zero - u;
        return at_zero * std::exp(-s.p * s.k.b * u);
    }

    static double eval_source(const ClosedFormTVaR& s, double u) {
        const double va = s.v_alpha();
        const double tail0 = s.k.a / (s.alpha * s.k.b);
        if (va > 0.0) {
            if (u <= va) return (va - u) + 1.0 / s.k.b;
            return tail0 * std::exp(-s.k.b * u);
        }
        if (u < 0.0) return tail0 - u;
        return tail0 * std::exp(-s.k.b * u);
    }

    double eval_source(const QuadratureSource& s, double u) const {
        auto integrand = [&s](double v) { return s.g.eval_clamped(s.psi(v)); };
        if (u >= 0.0) return tail_integral(integrand, u, tol_);
        const double below = adaptive_simpson(integrand, u, 0.0, tol_.abs_tol * 1e-2, tol_.rel_tol * 1e-2);
        return below + tail_integral(integrand, 0.0, tol_);
    }

    static double eval_source(const EmpiricalSource& s, double u) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.desc.size(); ++i) {
            const double excess = s.desc[i] - u;
            if (excess <= 0.0) break;
            acc += s.weights[i] * excess;
        }
        return acc;
    }

    Source source_;
    Horizon horizon_;
    Tolerance tol_{};
};

}  // namespace maxdeficit
