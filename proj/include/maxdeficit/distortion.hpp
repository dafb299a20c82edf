#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "maxdeficit/errors.hpp"
#include "maxdeficit/numerics.hpp"

namespace maxdeficit {

struct IdentityDistortion {};

/// g(x) = x^p, p in (0, 1]. With p = 1/gamma this is also the x^(1/gamma) family.
struct ProportionalHazard {
    double p = 1.0;
};

/// g(x) = min(x / alpha, 1).
struct TailValueAtRisk {
    double alpha = 0.05;
};

/// g(x) = 0 for x <= alpha, 1 above. Not concave.
struct ValueAtRiskStep {
    double alpha = 0.05;
};

class Distortion {
public:
    using Variant = std::variant<IdentityDistortion, ProportionalHazard, TailValueAtRisk, ValueAtRiskStep>;

    Distortion() = default;

    static Distortion identity() { return Distortion(IdentityDistortion{}); }
    static Distortion proportional_hazard(double p) { return Distortion(ProportionalHazard{p}); }
    static Distortion tvar(double alpha) { return Distortion(TailValueAtRisk{alpha}); }
    static Distortion var_step(double alpha) { return Distortion(ValueAtRiskStep{alpha}); }

    const Variant& variant() const noexcept { return v_; }

    /// Declared, not detected: everything except the VaR step is concave.
    bool concave() const noexcept { return !std::holds_alternative<ValueAtRiskStep>(v_); }

    double operator()(double x) const {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw DomainError("distortion argument outside [0,1]");
        }
        return eval_unchecked(x);
    }

    /// Evaluation after clamping to [0,1]; for composing with computed probabilities.
    double eval_clamped(double x) const { return eval_unchecked(std::clamp(x, 0.0, 1.0)); }

    /// Right derivative g'(x); infinite at 0 for PH with p < 1.
    double derivative(double x) const {
        x = std::clamp(x, 0.0, 1.0);
        return std::visit(
            [x](const auto& g) -> double {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, IdentityDistortion>) {
                    return 1.0;
                } else if constexpr (std::is_same_v<T, ProportionalHazard>) {
                    if (x == 0.0) return g.p == 1.0 ? 1.0 : std::numeric_limits<double>::infinity();
                    return g.p * std::pow(x, g.p - 1.0);
                } else if constexpr (std::is_same_v<T, TailValueAtRisk>) {
                    return x < g.alpha ? 1.0 / g.alpha : 0.0;
                } else {
                    return 0.0;
                }
            },
            v_);
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(17);
        std::visit(
            [&os](const auto& g) {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, IdentityDistortion>) {
                    os << "identity";
                } else if constexpr (std::is_same_v<T, ProportionalHazard>) {
                    os << "ph:" << g.p;
                } else if constexpr (std::is_same_v<T, TailValueAtRisk>) {
                    os << "tvar:" << g.alpha;
                } else {
                    os << "varstep:" << g.alpha;
                }
            },
            v_);
        return os.str();
    }

    /// Parses `identity`, `ph:<p>`, `tvar:<alpha>`, `varstep:<alpha>`.
    static Distortion parse(std::string_view spec) {
        const auto colon = spec.find(':');
        const std::string_view head = spec.substr(0, colon);
        auto number = [&]() -> double {
            if (colon == std::string_view::npos) {
                throw ArgumentError("distortion '" + std::string(spec) + "' needs a parameter");
            }
            const std::string tail(spec.substr(colon + 1));
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(tail, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != tail.size()) {
                throw ArgumentError("bad distortion parameter in '" + std::string(spec) + "'");
            }
            return value;
        };
        if (head == "identity") {
            if (colon != std::string_view::npos) throw ArgumentError("identity takes no parameter");
            return identity();
        }
        // a distortion string with an out-of-range parameter is malformed input, not a domain failure
        try {
            if (head == "ph") return proportional_hazard(number());
            if (head == "tvar") return tvar(number());
            if (head == "varstep") return var_step(number());
        } catch (const DomainError& e) {
            throw ArgumentError("distortion '" + std::string(spec) + "': " + e.what());
        }
        throw ArgumentError("unknown distortion '" + std::string(spec) + "'");
    }

private:
    explicit Distortion(Variant v) : v_(v) { validate(); }

    void validate() const {
        std::visit(
            [](const auto& g) {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, ProportionalHazard>) {
                    if (!(g.p > 0.0 && g.p <= 1.0)) throw DomainError("PH exponent must lie in (0,1]");
                } else if constexpr (!std::is_same_v<T, IdentityDistortion>) {
                    if (!(g.alpha > 0.0 && g.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
                }
            },
            v_);
    }

    double eval_unchecked(double x) const {
        return std::visit(
            [x](const auto& g) -> double {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, IdentityDistortion>) {
                    return x;
                } else if constexpr (std::is_same_v<T, ProportionalHazard>) {
                    return g.p == 1.0 ? x : std::pow(x, g.p);
                } else if constexpr (std::is_same_v<T, TailValueAtRisk>) {
                    return std::min(x / g.alpha, 1.0);
                } else {
                    return x <= g.alpha ? 0.0 : 1.0;
                }
            },
            v_);
    }

    Variant v_{IdentityDistortion{}};
};

/// Choquet integral of a nonnegative variable from its tail function x -> P(Z > x).
template <class Tail>
double choquet_tail(const Distortion& g, Tail&& tail, const Tolerance& tol = {}) {
    return tail_integral([&](double x) { return g.eval_clamped(tail(x)); }, 0.0, tol);
}

/// Weights g(i/n) - g((i-1)/n), i = 1..n, attached to descending order statistics.
inline std::vector<double> choquet_weights(const Distortion& g, std::size_t n) {
    std::vector<double> w(n);
    double prev = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double cur = g(static_cast<double>(i) / static_cast<double>(n));
        w[i - 1] = cur - prev;
        prev = cur;
    }
    return w;
}

/// Weighted sum over samples already sorted in descending order.
inline double choquet_sorted_desc(std::span<const double> desc, std::span<const double> weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < desc.size(); ++i) {
        if (weights[i] != 0.0) acc += desc[i] * weights[i];
    }
    return acc;
}

/// Empirical distorted expectation of nonnegative samples (upper Choquet convention).
inline double choquet_empirical(const Distortion& g, std::span<const double> samples) {
    if (samples.empty()) throw ArgumentError("choquet_empirical: empty sample");
    std::vector<double> desc(samples.begin(), samples.end());
    for (double x : desc) {
        if (!(x >= 0.0)) throw DomainError("choquet_empirical: negative or NaN sample");
    }
    std::sort(desc.begin(), desc.end(), std::greater<>());
    return choquet_sorted_desc(desc, choquet_weights(g, desc.size()));
}

}  // namespace maxdeficit
